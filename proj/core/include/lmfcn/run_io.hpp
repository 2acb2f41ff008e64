#pragma once

// Run directories, configuration files and evaluation reports.
//
// A run directory holds
//   config.json   effective configuration (hyperparameters, split, data source)
//   epochs.csv    one row per epoch
//   model.ckpt    binary checkpoint
//   metrics.json  evaluation report of the shipped model plus training summary

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lmfcn/baselines.hpp"
#include "lmfcn/checkpoint.hpp"
#include "lmfcn/dataset.hpp"
#include "lmfcn/metrics.hpp"
#include "lmfcn/trainer.hpp"

namespace lmfcn {

inline constexpr const char* kVersionString = "lmfcn 0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON configuration. Unknown keys are rejected so typos surface early.

/// Everything a training command needs besides the data itself. The split
/// is seeded with hp.seed.
struct RunConfig {
  std::string command;
  std::string data_dir;
  SplitRatios ratios;
  Hyperparams hp;
  CnnConfig cnn;  // used by the CNN baseline only
};

std::string run_config_to_json(const RunConfig& config);
/// Keys present in `text` override `base`; every key is optional.
RunConfig run_config_from_json(std::string_view text, RunConfig base = {});

/// Angles in the JSON are degrees.
std::string generator_config_to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(std::string_view text);

GammaRule gamma_rule_from_string(std::string_view name);
const char* gamma_rule_name(GammaRule rule);

// ---------------------------------------------------------------------------
// Epoch logs.

inline constexpr const char* kEpochCsvHeader = "epoch,l_sv,l_mc,l_cc,total,n_sv,n_q,n_r,train_bacc,val_bacc,ms";
inline constexpr const char* kReportCsvHeader = "epoch,l_sv,l_mc,l_cc,total,n_sv,train_bacc,val_bacc";

void write_epochs_csv(std::ostream& out, std::span<const EpochRecord> records);
/// Parses what write_epochs_csv produced; extra fields stay at their defaults.
std::vector<EpochRecord> read_epochs_csv(std::istream& in);
/// Plot-ready series of the loss terms, SV count and accuracies.
void write_report_csv(std::ostream& out, std::span<const EpochRecord> records);

// ---------------------------------------------------------------------------
// Evaluation.

struct SplitReport {
  std::string name;
  std::size_t n = 0;
  double balanced_accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<double> recall;
};

struct EvalReport {
  std::string model_kind;
  std::vector<std::string> class_names;
  std::vector<SplitReport> splits;
  std::uint64_t seed = 0;
  Hyperparams hp;
  std::size_t best_epoch = 0;  // 0 when the model has no epoch loop
  std::size_t epochs_run = 0;
  std::string version = kVersionString;
};

/// Classifies `data` with `model` and fills one split entry.
SplitReport evaluate(const AnyModel& model, const Dataset& data, const std::string& name);

/// Deterministic pretty-printed JSON with sorted keys; contains no timestamps.
std::string eval_report_to_json(const EvalReport& report);

// ---------------------------------------------------------------------------
// Directory staging.

/// Collects files in a sibling staging directory and moves it into place on
/// commit. Refuses to start when the destination exists and is non-empty; the
/// staging directory is removed if commit never happens.
class StagedDir {
 public:
  explicit StagedDir(std::filesystem::path destination);
  ~StagedDir();
  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return staging_; }
  [[nodiscard]] std::filesystem::path file(const std::string& name) const { return staging_ / name; }
  void commit();

 private:
  std::filesystem::path destination_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace lmfcn
