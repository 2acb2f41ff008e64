#include <array>
#include <bit>

#include "lmfcn/dataset.hpp"

namespace lmfcn {
namespace {

// Clockwise from the top-left neighbor; bit k of the code is neighbor k.
constexpr std::array<std::array<int, 2>, 8> kNeighbors{{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}}};

std::array<std::uint8_t, 256> make_bin_table() {
  std::array<std::uint8_t, 256> table{};
  std::uint8_t next = 0;
  for (unsigned code = 0; code < 256; ++code) {
    const auto c = static_cast<std::uint8_t>(code);
    const auto rotated = static_cast<std::uint8_t>((c >> 1) | (c << 7));
    const int transitions = std::popcount(static_cast<unsigned>(c ^ rotated));
    table[code] = transitions <= 2 ? next++ : static_cast<std::uint8_t>(kLbpBins - 1);
  }
  return table;
}

const std::array<std::uint8_t, 256>& bin_table() {
  static const auto table = make_bin_table();
  return table;
}

}  // namespace

std::vector<double> to_grayscale(const Image& image) {
  const std::size_t plane = image.h * image.w;
  std::vector<double> gray(plane, 0.0);
  if (image.c == 3) {
    for (std::size_t p = 0; p < plane; ++p) {
      gray[p] = 0.299 * image.pixels[p] + 0.587 * image.pixels[plane + p] + 0.114 * image.pixels[2 * plane + p];
    }
  } else {
    for (std::size_t ch = 0; ch < image.c; ++ch) {
      for (std::size_t p = 0; p < plane; ++p) gray[p] += image.pixels[ch * plane + p];
    }
    for (double& v : gray) v /= static_cast<double>(image.c);
  }
  return gray;
}

std::size_t lbp_bin(std::uint8_t code) { return bin_table()[code]; }

std::array<double, kLbpBins> lbp_features(const Image& image) {
  if (image.h < 3 || image.w < 3) throw ParameterError("lbp_features: image must be at least 3x3");
  const auto gray = to_grayscale(image);
  std::array<double, kLbpBins> hist{};
  const auto w = static_cast<std::ptrdiff_t>(image.w);
  for (std::ptrdiff_t y = 1; y + 1 < static_cast<std::ptrdiff_t>(image.h); ++y) {
    for (std::ptrdiff_t x = 1; x + 1 < w; ++x) {
      const double center = gray[static_cast<std::size_t>(y * w + x)];
      unsigned code = 0;
      for (std::size_t k = 0; k < kNeighbors.size(); ++k) {
        const double v = gray[static_cast<std::size_t>((y + kNeighbors[k][0]) * w + x + kNeighbors[k][1])];
        if (v > center) code |= 1u << k;
      }
      hist[lbp_bin(static_cast<std::uint8_t>(code))] += 1.0;
    }
  }
  const double total = static_cast<double>((image.h - 2) * (image.w - 2));
  for (double& v : hist) v /= total;
  return hist;
}

Matrix lbp_feature_matrix(std::span<const Image> images) {
  Matrix out(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(kLbpBins));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto h = lbp_features(images[i]);
    for (std::size_t b = 0; b < kLbpBins; ++b) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = h[b];
  }
  return out;
}

}  // namespace lmfcn
