#pragma once

// Shared layout of the GCLD / GIDX / GATL files:
//   magic (6 bytes, ends in '\n') | u32 LE header length | UTF-8 JSON header | payload
// Payload words are little-endian regardless of host byte order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gatlas::container {

struct Contents {
  nlohmann::json header;
  std::vector<std::uint8_t> payload;
};

void write(const std::filesystem::path& path, std::string_view magic,
           const nlohmann::json& header, std::span<const std::uint8_t> payload);

Contents read(const std::filesystem::path& path, std::string_view magic);

// True when the file starts with `magic`; false for unreadable files.
bool has_magic(const std::filesystem::path& path, std::string_view magic);

void append_f32(std::vector<std::uint8_t>& out, float value);
void append_u32(std::vector<std::uint8_t>& out, std::uint32_t value);
float load_f32(const std::uint8_t* bytes);
std::uint32_t load_u32(const std::uint8_t* bytes);

std::vector<std::uint8_t> encode_f32(std::span<const float> values);
std::vector<float> decode_f32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gatlas::container
