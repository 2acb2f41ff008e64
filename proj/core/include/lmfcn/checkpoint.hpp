#pragma once

// Versioned little-endian binary checkpoints. See docs/checkpoint_format.md
// for the byte layout.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lmfcn/baselines.hpp"
#include "lmfcn/trainer.hpp"

namespace lmfcn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind : std::uint32_t { lmfcn = 1, lmfcn_multiclass = 2, cnn_baseline = 3, lbp_baseline = 4 };

const char* model_kind_name(ModelKind kind);

/// Any trained model. Training records and hyperparameters live in the run
/// directory, not in the checkpoint, so loaded models carry defaults there.
using AnyModel = std::variant<LmfcnModel, MulticlassLmfcnModel, CnnBaselineModel, LbpBaselineModel>;

ModelKind model_kind(const AnyModel& model);

/// Number of classes the model predicts.
std::size_t model_classes(const AnyModel& model);

void write_checkpoint(std::ostream& out, const AnyModel& model);
AnyModel read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_checkpoint(const std::filesystem::path& path);

std::vector<int> predict(const AnyModel& model, const Dataset& data);

}  // namespace lmfcn
