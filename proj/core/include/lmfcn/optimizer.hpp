#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lmfcn {

/// One trainable tensor as seen by the optimizer.
struct ParamSlot {
  std::string name;
  std::span<double> value;
  std::span<const double> grad;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. State is created on the first step and
/// must see the same slot layout on every later step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Throws NumericError naming the slot if any gradient entry is NaN/Inf;
  /// no parameter is modified in that case.
  void step(std::span<const ParamSlot> slots);

  [[nodiscard]] const AdamConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t steps() const { return steps_; }

  // Raw state access for checkpointing.
  [[nodiscard]] const std::vector<std::vector<double>>& first_moments() const { return m_; }
  [[nodiscard]] const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace lmfcn
