#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace gatlas {

/// Interleaved float image, row-major, origin at the top-left.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.f)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

enum class Transfer { linear, srgb };

/// 8-bit PNG with 1..4 channels; values are clamped to [0,1] after the transfer.
void write_png(const std::filesystem::path& path, const Image& image, Transfer transfer = Transfer::srgb);

/// Raw float container "GIMG1\n" + JSON {width, height, channels} + f32 LE.
void write_raw(const std::filesystem::path& path, const Image& image);
Image read_raw(const std::filesystem::path& path);

double linear_to_srgb(double value);

}  // namespace gatlas
