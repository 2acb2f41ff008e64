#pragma once

// The three-block fully convolutional feature extractor:
//
//   conv3x3(c -> 64)   BN ReLU  maxpool2
//   conv3x3(64 -> 128) BN ReLU  maxpool2
//   conv3x3(128 -> phi) BN ReLU  global average pool
//
// Images of any resolution map to a phi-dimensional latent row.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lmfcn/layers.hpp"
#include "lmfcn/optimizer.hpp"
#include "lmfcn/tensor.hpp"

namespace lmfcn {

inline constexpr std::size_t kFcnBlocks = 3;
inline constexpr std::size_t kConv1Channels = 64;
inline constexpr std::size_t kConv2Channels = 128;

struct ConvBlockParams {
  Tensor4 weight;  // (c_out, c_in, 3, 3)
  std::vector<double> bias;
  std::vector<double> bn_scale;
  std::vector<double> bn_shift;
  nn::RunningStats bn_running;
};

struct FcnParams {
  std::size_t in_channels = 0;
  std::size_t latent_dim = 0;
  std::uint64_t seed = 0;
  std::array<ConvBlockParams, kFcnBlocks> blocks;

  [[nodiscard]] bool all_finite() const;
};

struct ConvBlockGrads {
  Tensor4 weight;
  std::vector<double> bias;
  std::vector<double> bn_scale;
  std::vector<double> bn_shift;
};

struct FcnGrads {
  std::array<ConvBlockGrads, kFcnBlocks> blocks;

  /// Zero gradients laid out like `params`.
  static FcnGrads zeros_like(const FcnParams& params);
  void accumulate(const FcnGrads& other);
  [[nodiscard]] double max_abs() const;
};

/// He-normal conv weights (variance 2 / fan_in), zero bias, BN scale 1 / shift 0.
FcnParams fcn_init(std::uint64_t seed, std::size_t in_channels, std::size_t latent_dim);

struct FcnBlockCache {
  nn::ConvCache conv;
  nn::BatchNormCache bn;
  nn::ReluCache relu;
  nn::PoolCache pool;  // unused for the last block
};

/// Caches for one same-resolution group of images.
struct FcnGroupCache {
  std::vector<std::size_t> rows;  // rows of the latent matrix this group produced
  std::array<FcnBlockCache, kFcnBlocks> blocks;
  nn::GapCache gap;
};

struct FcnCaches {
  std::size_t rows = 0;
  std::vector<FcnGroupCache> groups;
};

struct FcnForward {
  Matrix latent;  // n x latent_dim, row t belongs to images[t]
  FcnCaches caches;
};

/// Forward with caches for a later fcn_backward. Images are grouped by
/// resolution; in train mode each group is normalized with its own batch
/// statistics and updates the running statistics in `params`.
FcnForward fcn_forward(std::span<const Image> images, FcnParams& params, nn::Mode mode);

/// Eval-mode latents, one instance at a time without retaining caches.
/// Bitwise identical to the eval-mode rows of fcn_forward.
Matrix fcn_embed(std::span<const Image> images, const FcnParams& params);

/// Backpropagates latent gradients (one row per forwarded image) to parameter gradients.
FcnGrads fcn_backward(const Matrix& latent_grads, const FcnCaches& caches, const FcnParams& params);

/// Trainable tensors in a fixed order: per block conv weight, conv bias, BN scale, BN shift.
std::vector<ParamSlot> param_slots(FcnParams& params, const FcnGrads& grads);

}  // namespace lmfcn
