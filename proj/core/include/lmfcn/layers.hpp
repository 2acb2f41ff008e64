#pragma once

// Forward/backward kernels for the layers of the fully convolutional stack.
//
// Every forward returns its output together with the cache its backward needs.
// Kernels are pure functions of their arguments (batch norm additionally
// updates the running statistics it is handed in train mode).

#include <cstdint>
#include <span>
#include <vector>

#include "lmfcn/tensor.hpp"

namespace lmfcn::nn {

enum class Mode { train, eval };

// ---------------------------------------------------------------------------
// 3x3 convolution, stride 1, zero padding 1.

struct ConvCache {
  Tensor4 input;
  Tensor4 weight;
};

struct ConvForward {
  Tensor4 output;
  ConvCache cache;
};

struct ConvGrads {
  Tensor4 input;  // empty when not requested
  Tensor4 weight;
  std::vector<double> bias;
};

/// `weight` has shape (c_out, c_in, 3, 3); `bias` has c_out entries.
ConvForward conv2d(const Tensor4& input, const Tensor4& weight, std::span<const double> bias);

ConvGrads conv2d_backward(const Tensor4& grad_out, const ConvCache& cache, bool need_input_grad = true);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2. Odd trailing rows/columns are dropped.

struct PoolCache {
  Shape4 input_shape;
  std::vector<std::uint32_t> argmax;  // flat index into the input, one per output element
};

struct PoolForward {
  Tensor4 output;
  PoolCache cache;
};

PoolForward maxpool2(const Tensor4& input);
Tensor4 maxpool2_backward(const Tensor4& grad_out, const PoolCache& cache);

// ---------------------------------------------------------------------------
// Batch normalization over (n, h, w) per channel.

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;

  static RunningStats identity(std::size_t channels) {
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
  }
};

struct BatchNormCache {
  Mode mode = Mode::train;
  Tensor4 normalized;
  std::vector<double> inv_std;
  std::vector<double> scale;
};

struct BatchNormForward {
  Tensor4 output;
  BatchNormCache cache;
};

struct BatchNormGrads {
  Tensor4 input;
  std::vector<double> scale;
  std::vector<double> shift;
};

/// Train mode normalizes with batch statistics and folds them into `running`
/// with kBatchNormMomentum. A batch holding a single 1x1 instance has zero
/// variance; the output then collapses to `shift`.
BatchNormForward batchnorm(const Tensor4& input, std::span<const double> scale,
                           std::span<const double> shift, RunningStats& running, Mode mode);

BatchNormGrads batchnorm_backward(const Tensor4& grad_out, const BatchNormCache& cache);

// ---------------------------------------------------------------------------
// ReLU

struct ReluCache {
  std::vector<std::uint8_t> active;
};

struct ReluForward {
  Tensor4 output;
  ReluCache cache;
};

ReluForward relu(const Tensor4& input);
Tensor4 relu_backward(const Tensor4& grad_out, const ReluCache& cache);

// ---------------------------------------------------------------------------
// Global average pooling: (n, c, h, w) -> n x c matrix.

struct GapCache {
  Shape4 input_shape;
};

struct GapForward {
  Matrix output;
  GapCache cache;
};

GapForward gap(const Tensor4& input);
Tensor4 gap_backward(const Matrix& grad_out, const GapCache& cache);

// ---------------------------------------------------------------------------
// Fully connected layer followed by softmax cross-entropy (baseline head).

struct SoftmaxCeResult {
  double loss = 0.0;          // mean over the batch
  Matrix probabilities;       // n x classes
  Matrix grad_weight;         // classes x features
  std::vector<double> grad_bias;
  Matrix grad_latent;         // n x features
};

/// `weight` is classes x features. Labels must lie in [0, classes).
SoftmaxCeResult fc_softmax_ce(const Matrix& latent, const Matrix& weight, std::span<const double> bias,
                              std::span<const int> labels);

/// Logits only, for prediction.
Matrix fc_logits(const Matrix& latent, const Matrix& weight, std::span<const double> bias);

}  // namespace lmfcn::nn
