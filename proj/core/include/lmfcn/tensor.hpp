#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lmfcn {

/// Raised when a computation produces or receives NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix used for latents, kernels and distance tables.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Raised when tensor or matrix dimensions do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for out-of-domain hyperparameters or arguments.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape4 {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  [[nodiscard]] std::size_t size() const { return n * c * h * w; }
  [[nodiscard]] std::size_t plane() const { return h * w; }
  [[nodiscard]] std::size_t instance() const { return c * h * w; }

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

std::string to_string(const Shape4& s);

/// Dense NCHW tensor of doubles.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0);
  Tensor4(Shape4 shape, std::vector<double> data);

  [[nodiscard]] const Shape4& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }

  double& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  [[nodiscard]] double at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  /// Contiguous view of instance `n` (c*h*w values).
  [[nodiscard]] std::span<double> instance(std::size_t n) {
    return std::span<double>(data_).subspan(n * shape_.instance(), shape_.instance());
  }
  [[nodiscard]] std::span<const double> instance(std::size_t n) const {
    return std::span<const double>(data_).subspan(n * shape_.instance(), shape_.instance());
  }

  [[nodiscard]] bool all_finite() const;

 private:
  Shape4 shape_{};
  // Aligned so Eigen maps over the buffer split their vectorised reductions
  // at the same place on every run; plain malloc alignment varies.
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

/// A single CHW image with values in [0, 1].
struct Image {
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<double> pixels;

  [[nodiscard]] double at(std::size_t ch, std::size_t y, std::size_t x) const {
    return pixels[(ch * h + y) * w + x];
  }
  double& at(std::size_t ch, std::size_t y, std::size_t x) { return pixels[(ch * h + y) * w + x]; }
};

/// Stacks same-sized images into one (n, c, h, w) tensor.
Tensor4 stack_images(std::span<const Image* const> images);

/// Throws NumericError unless every entry of `values` is finite; `what` names the offender.
void require_finite(std::span<const double> values, const std::string& what);

}  // namespace lmfcn
