#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmfcn/tensor.hpp"

namespace lmfcn {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<std::string> names;
  std::vector<std::string> class_names;

  [[nodiscard]] std::size_t size() const { return images.size(); }
  [[nodiscard]] std::size_t num_classes() const { return class_names.size(); }

  /// Throws DataError if lengths disagree, a label is out of range, a class
  /// is empty or a pixel lies outside [0, 1].
  void validate() const;

  /// Subset in the given index order.
  [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;

  /// Per-class instance counts.
  [[nodiscard]] std::vector<std::size_t> class_counts() const;
};

/// Per-class distribution of sinusoidal stripe textures. Angles in radians,
/// periods in pixels.
struct StripeSpec {
  double angle_mean = 0.0;
  double angle_std = 0.0;
  double period_mean = 8.0;
  double period_std = 0.0;
  double phase_jitter = 0.0;  // phase ~ U[0, phase_jitter)
  double noise_std = 0.0;     // additive Gaussian pixel noise before clipping
};

struct GeneratorConfig {
  std::vector<StripeSpec> classes;
  std::size_t n_per_class = 100;
  std::size_t size = 64;
  std::size_t channels = 3;
  std::uint64_t seed = 0;
};

/// Two classes: stripes at 30 and 60 degrees (std 5 degrees), period 8 +- 1 px,
/// random phase, pixel noise std 0.1.
GeneratorConfig default_generator_config();

/// Image t = 0.5 + 0.5 sin(2 pi (x cos a + y sin a) / p + phase) + noise,
/// clipped to [0, 1], replicated across channels. Class-major order.
Dataset gen_gaussian_stripes(const GeneratorConfig& config);

/// Root holds one subdirectory per class (sorted by name -> label) of PNG files.
Dataset load_image_dir(const std::filesystem::path& root);

/// Writes `dataset` in the load_image_dir layout as 8-bit RGB PNGs.
void write_image_dir(const Dataset& dataset, const std::filesystem::path& root);

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct DataSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Stratified, seeded split. Each class contributes round(ratio * count)
/// instances to train and val and the remainder to test; every split with a
/// nonzero ratio must receive at least one instance of every class.
DataSplits split(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Uniform local binary patterns.

inline constexpr std::size_t kLbpBins = 59;

/// Luma (0.299, 0.587, 0.114) for 3-channel images, the mean otherwise.
std::vector<double> to_grayscale(const Image& image);

/// Bin of an 8-bit neighbor code: uniform codes (at most two circular 0/1
/// transitions) take bins 0..57 in ascending code order, the rest bin 58.
std::size_t lbp_bin(std::uint8_t code);

/// 8-neighbor radius-1 LBP over interior pixels (neighbor strictly greater
/// than the center sets the bit), L1-normalized 59-bin histogram.
std::array<double, kLbpBins> lbp_features(const Image& image);

/// n x 59 feature matrix.
Matrix lbp_feature_matrix(std::span<const Image> images);

}  // namespace lmfcn
