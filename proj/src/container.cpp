#include "gatlas/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "gatlas/error.hpp"

namespace gatlas::container {

namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t value) {
  const std::uint32_t le = to_le(value);
  std::uint8_t bytes[4];
  std::memcpy(bytes, &le, 4);
  out.insert(out.end(), bytes, bytes + 4);
}

void append_f32(std::vector<std::uint8_t>& out, float value) {
  append_u32(out, std::bit_cast<std::uint32_t>(value));
}

std::uint32_t load_u32(const std::uint8_t* bytes) {
  std::uint32_t raw;
  std::memcpy(&raw, bytes, 4);
  return to_le(raw);
}

float load_f32(const std::uint8_t* bytes) { return std::bit_cast<float>(load_u32(bytes)); }

std::vector<std::uint8_t> encode_f32(std::span<const float> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (float v : values) append_f32(out, v);
  return out;
}

std::vector<float> decode_f32(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorKind::parse, "float payload length is not a multiple of 4");
  }
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = load_f32(bytes.data() + 4 * i);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw Error(ErrorKind::io, "short read on '" + path.string() + "'");
  }
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed on '" + path.string() + "'");
}

void write(const std::filesystem::path& path, std::string_view magic,
           const nlohmann::json& header, std::span<const std::uint8_t> payload) {
  const std::string text = header.dump();
  std::vector<std::uint8_t> bytes;
  bytes.reserve(magic.size() + 4 + text.size() + payload.size());
  bytes.insert(bytes.end(), magic.begin(), magic.end());
  append_u32(bytes, static_cast<std::uint32_t>(text.size()));
  bytes.insert(bytes.end(), text.begin(), text.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  write_file(path, bytes);
}

Contents read(const std::filesystem::path& path, std::string_view magic) {
  const auto bytes = read_file(path);
  if (bytes.size() < magic.size() + 4 ||
      std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
    throw Error(ErrorKind::parse, "'" + path.string() + "' does not start with magic '" +
                                      std::string(magic.substr(0, magic.size() - 1)) + "'");
  }
  const std::size_t len = load_u32(bytes.data() + magic.size());
  const std::size_t start = magic.size() + 4;
  if (start + len > bytes.size()) {
    throw Error(ErrorKind::parse, "truncated header in '" + path.string() + "'");
  }
  Contents contents;
  try {
    contents.header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                            bytes.begin() + static_cast<std::ptrdiff_t>(start + len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, "bad JSON header in '" + path.string() + "': " + e.what());
  }
  contents.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start + len), bytes.end());
  return contents;
}

bool has_magic(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string head(magic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  return in && head == magic;
}

}  // namespace gatlas::container
