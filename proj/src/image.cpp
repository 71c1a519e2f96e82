#include "gatlas/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "gatlas/container.hpp"
#include "gatlas/error.hpp"

namespace gatlas {

double linear_to_srgb(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

void write_png(const std::filesystem::path& path, const Image& image, Transfer transfer) {
  if (image.channels < 1 || image.channels > 4 || image.width <= 0 || image.height <= 0) {
    throw Error(ErrorKind::validation, "PNG needs 1-4 channels and a non-empty image");
  }
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "libpng initialization failed");
  }
  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * image.channels);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "libpng failed writing '" + path.string() + "'");
  }
  static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                        PNG_COLOR_TYPE_RGB_ALPHA};
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               kColorTypes[image.channels - 1], PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const bool has_alpha = image.channels == 2 || image.channels == 4;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        double v = image.at(x, y, c);
        const bool is_alpha = has_alpha && c == image.channels - 1;
        v = (transfer == Transfer::srgb && !is_alpha) ? linear_to_srgb(v) : std::clamp(v, 0.0, 1.0);
        row[static_cast<std::size_t>(x) * image.channels + c] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {
constexpr std::string_view kRawMagic = "GIMG1\n";
}

void write_raw(const std::filesystem::path& path, const Image& image) {
  nlohmann::json header = {{"width", image.width}, {"height", image.height}, {"channels", image.channels}};
  container::write(path, kRawMagic, header, container::encode_f32(image.data));
}

Image read_raw(const std::filesystem::path& path) {
  auto contents = container::read(path, kRawMagic);
  Image image;
  image.width = contents.header.at("width").get<int>();
  image.height = contents.header.at("height").get<int>();
  image.channels = contents.header.at("channels").get<int>();
  image.data = container::decode_f32(contents.payload);
  if (image.data.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw Error(ErrorKind::parse, "raw image payload does not match its header");
  }
  return image;
}

}  // namespace gatlas
