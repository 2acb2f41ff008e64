#include "lmfcn/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "lmfcn/dataset.hpp"

namespace lmfcn {

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw DataError("cannot decode PNG " + path.string() + ": " + msg);
  }
  Image out;
  out.c = 3;
  out.h = img.height;
  out.w = img.width;
  out.pixels.resize(out.c * out.h * out.w);
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        out.at(ch, y, x) = buffer[(y * out.w + x) * 3 + ch] / 255.0;
      }
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.c != 1 && image.c != 3) throw DataError("write_png: only 1- or 3-channel images are supported");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.w);
  img.height = static_cast<png_uint_32>(image.h);
  img.format = image.c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(image.c * image.h * image.w);
  for (std::size_t y = 0; y < image.h; ++y) {
    for (std::size_t x = 0; x < image.w; ++x) {
      for (std::size_t ch = 0; ch < image.c; ++ch) {
        const double v = std::clamp(image.at(ch, y, x), 0.0, 1.0);
        buffer[(y * image.w + x) * image.c + ch] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
  }
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace lmfcn
