#include "lmfcn/optimizer.hpp"

#include <cmath>

#include "lmfcn/tensor.hpp"

namespace lmfcn {

void Adam::step(std::span<const ParamSlot> slots) {
  for (const ParamSlot& s : slots) {
    if (s.value.size() != s.grad.size()) throw ShapeError("adam: gradient shape mismatch for " + s.name);
    for (double g : s.grad) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in " + s.name);
    }
  }
  if (m_.empty()) {
    for (const ParamSlot& s : slots) {
      m_.emplace_back(s.value.size(), 0.0);
      v_.emplace_back(s.value.size(), 0.0);
    }
  }
  if (m_.size() != slots.size()) throw ShapeError("adam: parameter layout changed between steps");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (m_[k].size() != slots[k].value.size()) {
      throw ShapeError("adam: parameter layout changed between steps for " + slots[k].name);
    }
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    auto& m = m_[k];
    auto& v = v_[k];
    const auto g = slots[k].grad;
    auto x = slots[k].value;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      x[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace lmfcn
