// lmfcn command-line tool: dataset generation, training, evaluation and reports.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "lmfcn/baselines.hpp"
#include "lmfcn/checkpoint.hpp"
#include "lmfcn/dataset.hpp"
#include "lmfcn/log.hpp"
#include "lmfcn/run_io.hpp"
#include "lmfcn/trainer.hpp"

namespace fs = std::filesystem;
using namespace lmfcn;

namespace {

// Flags shared by every training command. Unset flags leave the config-file
// value (or the default) in place.
struct TrainFlags {
  std::string data;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> phi;
  std::optional<std::string> gamma;
  std::optional<double> c;
  std::optional<std::size_t> sv_close;
  std::optional<std::size_t> wr_close;
  std::optional<std::size_t> sh_close;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> ova_epochs;
  std::optional<std::size_t> batch_size;
  std::optional<bool> stop_on_perfect_val;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool cnn) {
  cmd->add_option("--data", f.data, "Dataset directory (one subdirectory of PNGs per class)");
  cmd->add_option("--out", f.out, "Run directory to create (must not exist or be empty)")->required();
  cmd->add_option("--config", f.config, "JSON config file; flags take precedence");
  cmd->add_option("--seed", f.seed, "Seed for initialization and the data split");
  cmd->add_option("--phi", f.phi, "Latent dimension");
  cmd->add_option("--gamma", f.gamma, "RBF gamma: a positive number, 'inverse_dim' or 'median'");
  cmd->add_option("--c", f.c, "SVM box constraint C");
  cmd->add_option("--sv-close", f.sv_close, "Type-1 anchors per support vector");
  cmd->add_option("--wr-close", f.wr_close, "Type-2 anchors per misclassified instance");
  cmd->add_option("--sh-close", f.sh_close, "Type-3 anchors per correctly classified instance");
  cmd->add_option("--epochs", f.epochs, "Epoch budget");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--ova-epochs", f.ova_epochs, "Epochs per one-vs-all sub-problem");
  cmd->add_option("--stop-on-perfect-val", f.stop_on_perfect_val, "Stop once validation accuracy reaches 1");
  if (cnn) cmd->add_option("--batch-size", f.batch_size, "Mini-batch size, 0 for the whole training set");
}

RunConfig resolve_config(const TrainFlags& f, const std::string& command) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = run_config_from_json(read_text_file(f.config), cfg);
  cfg.command = command;
  Hyperparams& hp = cfg.hp;
  if (f.seed) hp.seed = *f.seed;
  if (f.phi) hp.latent_dim = *f.phi;
  if (f.gamma) {
    const std::string& g = *f.gamma;
    if (g == "inverse_dim" || g == "median") {
      hp.gamma_rule = gamma_rule_from_string(g);
    } else {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(g, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != g.size() || !(v > 0.0)) throw ConfigError("--gamma must be a positive number, inverse_dim or median");
      hp.gamma_rule = GammaRule::fixed;
      hp.gamma = v;
    }
  }
  if (f.c) hp.C = *f.c;
  if (f.sv_close) hp.sv_close = *f.sv_close;
  if (f.wr_close) hp.wr_close = *f.wr_close;
  if (f.sh_close) hp.sh_close = *f.sh_close;
  if (f.lr) hp.learning_rate = *f.lr;
  if (f.ova_epochs) hp.ova_epochs = *f.ova_epochs;
  if (f.stop_on_perfect_val) {
    hp.stop_on_perfect_val = *f.stop_on_perfect_val;
    cfg.cnn.stop_on_perfect_val = *f.stop_on_perfect_val;
  }
  if (f.batch_size) cfg.cnn.batch_size = *f.batch_size;
  if (f.epochs) {
    hp.max_epochs = *f.epochs;
    cfg.cnn.max_epochs = *f.epochs;
  }
  if (!f.data.empty()) cfg.data_dir = f.data;
  if (cfg.data_dir.empty()) throw ConfigError("no dataset given (use --data or data_dir in the config file)");
  hp.in_channels = 3;  // images are always loaded as RGB
  hp.validate();
  return cfg;
}

void write_csv(const fs::path& path, std::span<const EpochRecord> records) {
  std::ofstream out(path, std::ios::binary);
  write_epochs_csv(out, records);
  if (!out) throw ConfigError("write failed for " + path.string());
}

EvalReport base_report(const AnyModel& model, const Dataset& ds, const Hyperparams& hp) {
  EvalReport r;
  r.model_kind = model_kind_name(model_kind(model));
  r.class_names = ds.class_names;
  r.seed = hp.seed;
  r.hp = hp;
  return r;
}

int run_train(const TrainFlags& f, const std::string& command) {
  const RunConfig cfg = resolve_config(f, command);
  StagedDir staged(f.out);
  const Dataset ds = load_image_dir(cfg.data_dir);
  const DataSplits sp = split(ds, cfg.ratios, cfg.hp.seed);

  AnyModel model;
  EvalReport report = base_report(model, ds, cfg.hp);
  if (command == "train") {
    if (ds.num_classes() != 2) throw DataError("train needs exactly 2 classes; use train-multiclass");
    LmfcnModel m = fit(sp.train, sp.val, cfg.hp);
    write_csv(staged.file("epochs.csv"), m.records);
    report.best_epoch = m.best_epoch;
    report.epochs_run = m.records.size();
    model = std::move(m);
  } else if (command == "train-multiclass") {
    MulticlassLmfcnModel m = fit_multiclass(sp.train, sp.val, cfg.hp);
    for (std::size_t k = 0; k < m.sub_records.size(); ++k) {
      write_csv(staged.file("epochs_class" + std::to_string(k) + ".csv"), m.sub_records[k]);
    }
    model = std::move(m);
  } else if (command == "train-cnn-baseline") {
    CnnBaselineModel m = fit_cnn_baseline(sp.train, sp.val, cfg.hp, cfg.cnn);
    write_csv(staged.file("epochs.csv"), m.records);
    report.best_epoch = m.best_epoch;
    report.epochs_run = m.records.size();
    model = std::move(m);
  } else {
    model = fit_lbp_baseline(sp.train, cfg.hp);
  }
  report.model_kind = model_kind_name(model_kind(model));
  report.splits.push_back(evaluate(model, sp.train, "train"));
  report.splits.push_back(evaluate(model, sp.val, "val"));
  report.splits.push_back(evaluate(model, sp.test, "test"));

  write_text_file(staged.file("config.json"), run_config_to_json(cfg));
  save_checkpoint(staged.file("model.ckpt"), model);
  write_text_file(staged.file("metrics.json"), eval_report_to_json(report));
  staged.commit();
  std::printf("%s: train %.4f  val %.4f  test %.4f -> %s\n", report.model_kind.c_str(),
              report.splits[0].balanced_accuracy, report.splits[1].balanced_accuracy,
              report.splits[2].balanced_accuracy, f.out.c_str());
  return 0;
}

// Writes next to the destination and renames, refusing to replace a file.
void write_new_file(const fs::path& path, const std::string& text) {
  if (fs::exists(path)) throw ConfigError(path.string() + " already exists; refusing to overwrite");
  const fs::path tmp = path.string() + ".partial";
  write_text_file(tmp, text);
  fs::rename(tmp, path);
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_new_file(out, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-margin fully convolutional networks: training and evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  std::string gen_config;
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::size_t> gen_n;
  std::optional<std::size_t> gen_size;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic striped-texture dataset");
  gen->add_option("--config", gen_config, "Generator config JSON (angles in degrees)");
  gen->add_option("--out", gen_out, "Dataset directory to create")->required();
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--n-per-class", gen_n, "Images per class");
  gen->add_option("--size", gen_size, "Image side length in pixels");

  TrainFlags train_flags;
  const std::array<std::pair<const char*, const char*>, 4> train_cmds = {{
      {"train", "Train a binary large-margin FCN"},
      {"train-multiclass", "Train one-vs-all large-margin FCNs and a multiclass SVM"},
      {"train-cnn-baseline", "Train the same FCN with a softmax cross-entropy head"},
      {"train-lbp-baseline", "Fit an RBF SVM on uniform LBP histograms"},
  }};
  std::vector<CLI::App*> trainers;
  for (const auto& [name, help] : train_cmds) {
    auto* cmd = app.add_subcommand(name, help);
    add_train_flags(cmd, train_flags, std::string(name) == "train-cnn-baseline");
    trainers.push_back(cmd);
  }

  std::string eval_run;
  std::string eval_data;
  std::string eval_split = "splits";
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a run's model on a dataset and print an EvalReport");
  eval->add_option("--run", eval_run, "Run directory")->required();
  eval->add_option("--data", eval_data, "Dataset directory (default: the run's training data)");
  eval->add_option("--split", eval_split,
                   "splits (train, val and test re-derived from the run's config), train, val, test, or all "
                   "(the whole dataset as one split)")
      ->check(CLI::IsMember({"splits", "all", "train", "val", "test"}));
  eval->add_option("--out", eval_out, "Report file to create (default: stdout)");

  std::string report_run;
  std::string report_log = "epochs.csv";
  std::string report_out;
  auto* report = app.add_subcommand("report", "Convert an epoch log into plot-ready CSV series");
  report->add_option("--run", report_run, "Run directory")->required();
  report->add_option("--log", report_log, "Epoch log inside the run directory");
  report->add_option("--out", report_out, "CSV file to create (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::fprintf(stderr, "lmfcn: error: %s\n", msg.c_str());
    return 2;
  }
  set_log_level(verbose ? LogLevel::info : LogLevel::warning);

  try {
    if (*gen) {
      GeneratorConfig cfg = gen_config.empty() ? default_generator_config()
                                               : generator_config_from_json(read_text_file(gen_config));
      if (gen_seed) cfg.seed = *gen_seed;
      if (gen_n) cfg.n_per_class = *gen_n;
      if (gen_size) cfg.size = *gen_size;
      StagedDir staged(gen_out);
      const Dataset ds = gen_gaussian_stripes(cfg);
      write_image_dir(ds, staged.path());
      write_text_file(staged.file("generator.json"), generator_config_to_json(cfg));
      staged.commit();
      std::printf("wrote %zu images in %zu classes to %s\n", ds.size(), ds.num_classes(), gen_out.c_str());
      return 0;
    }
    for (std::size_t k = 0; k < trainers.size(); ++k) {
      if (*trainers[k]) return run_train(train_flags, train_cmds[k].first);
    }
    if (*eval) {
      const fs::path run(eval_run);
      const RunConfig cfg = run_config_from_json(read_text_file(run / "config.json"));
      const AnyModel model = load_checkpoint(run / "model.ckpt");
      const Dataset ds = load_image_dir(eval_data.empty() ? cfg.data_dir : eval_data);
      EvalReport rep = base_report(model, ds, cfg.hp);
      if (eval_split == "all") {
        rep.splits.push_back(evaluate(model, ds, "all"));
      } else {
        const DataSplits sp = split(ds, cfg.ratios, cfg.hp.seed);
        if (eval_split == "splits" || eval_split == "train") rep.splits.push_back(evaluate(model, sp.train, "train"));
        if (eval_split == "splits" || eval_split == "val") rep.splits.push_back(evaluate(model, sp.val, "val"));
        if (eval_split == "splits" || eval_split == "test") rep.splits.push_back(evaluate(model, sp.test, "test"));
      }
      emit(eval_out, eval_report_to_json(rep));
      return 0;
    }
    if (*report) {
      const fs::path log_path = fs::path(report_run) / report_log;
      std::ifstream in(log_path);
      if (!in) throw ConfigError("cannot read " + log_path.string());
      const auto records = read_epochs_csv(in);
      std::ostringstream out;
      write_report_csv(out, records);
      emit(report_out, out.str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::fprintf(stderr, "lmfcn: error: %s\n", msg.c_str());
    return 1;
  }
  return 0;
}
