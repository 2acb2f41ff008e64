#include "lmfcn/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace lmfcn {

std::string to_string(const Shape4& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape), data_(shape.size(), fill) {
  if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0) {
    throw ShapeError("tensor dims must be positive, got " + to_string(shape));
  }
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> data) : shape_(shape), data_(data.begin(), data.end()) {
  if (shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0) {
    throw ShapeError("tensor dims must be positive, got " + to_string(shape));
  }
  if (data_.size() != shape.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match " +
                     to_string(shape));
  }
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor4 stack_images(std::span<const Image* const> images) {
  if (images.empty()) throw ShapeError("stack_images: no images");
  const Image& first = *images.front();
  Tensor4 out({images.size(), first.c, first.h, first.w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& im = *images[i];
    if (im.c != first.c || im.h != first.h || im.w != first.w) {
      throw ShapeError("stack_images: images differ in size");
    }
    if (im.pixels.size() != im.c * im.h * im.w) throw ShapeError("stack_images: pixel buffer has wrong length");
    std::copy(im.pixels.begin(), im.pixels.end(), out.instance(i).begin());
  }
  return out;
}

void require_finite(std::span<const double> values, const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in " + what);
  }
}

}  // namespace lmfcn
