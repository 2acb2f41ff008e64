#include "lmfcn/run_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lmfcn {
namespace {

using nlohmann::json;

json parse_object(std::string_view text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

json hp_json(const Hyperparams& hp) {
  return {{"sv_close", hp.sv_close},
          {"wr_close", hp.wr_close},
          {"sh_close", hp.sh_close},
          {"C", hp.C},
          {"gamma_rule", gamma_rule_name(hp.gamma_rule)},
          {"gamma", hp.gamma},
          {"smo_tol", hp.smo_tol},
          {"learning_rate", hp.learning_rate},
          {"max_epochs", hp.max_epochs},
          {"ova_epochs", hp.ova_epochs},
          {"seed", hp.seed},
          {"latent_dim", hp.latent_dim},
          {"in_channels", hp.in_channels},
          {"stop_on_perfect_val", hp.stop_on_perfect_val}};
}

void hp_update(const json& j, Hyperparams& hp) {
  const std::string where = "config.hyperparams";
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  reject_unknown(j,
                 {"sv_close", "wr_close", "sh_close", "C", "gamma_rule", "gamma", "smo_tol", "learning_rate",
                  "max_epochs", "ova_epochs", "seed", "latent_dim", "in_channels", "stop_on_perfect_val"},
                 where);
  read_key(j, "sv_close", hp.sv_close, where);
  read_key(j, "wr_close", hp.wr_close, where);
  read_key(j, "sh_close", hp.sh_close, where);
  read_key(j, "C", hp.C, where);
  if (j.contains("gamma_rule")) {
    std::string rule;
    read_key(j, "gamma_rule", rule, where);
    hp.gamma_rule = gamma_rule_from_string(rule);
  }
  read_key(j, "gamma", hp.gamma, where);
  read_key(j, "smo_tol", hp.smo_tol, where);
  read_key(j, "learning_rate", hp.learning_rate, where);
  read_key(j, "max_epochs", hp.max_epochs, where);
  read_key(j, "ova_epochs", hp.ova_epochs, where);
  read_key(j, "seed", hp.seed, where);
  read_key(j, "latent_dim", hp.latent_dim, where);
  read_key(j, "in_channels", hp.in_channels, where);
  read_key(j, "stop_on_perfect_val", hp.stop_on_perfect_val, where);
}

constexpr double kRadPerDeg = std::numbers::pi / 180.0;

double to_radians(double deg) { return deg * kRadPerDeg; }

// Shortest decimal that converts back to the same radians, so 30 degrees
// prints as 30 rather than 29.999999999999996.
double to_degrees(double rad) {
  const double raw = rad / kRadPerDeg;
  for (double scale = 1.0; scale <= 1e12; scale *= 10.0) {
    const double candidate = std::round(raw * scale) / scale;
    if (to_radians(candidate) == rad) return candidate;
  }
  return raw;
}

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

GammaRule gamma_rule_from_string(std::string_view name) {
  if (name == "inverse_dim") return GammaRule::inverse_dim;
  if (name == "median") return GammaRule::median;
  if (name == "fixed") return GammaRule::fixed;
  throw ConfigError("unknown gamma rule '" + std::string(name) + "' (expected inverse_dim, median or fixed)");
}

const char* gamma_rule_name(GammaRule rule) {
  switch (rule) {
    case GammaRule::inverse_dim: return "inverse_dim";
    case GammaRule::median: return "median";
    case GammaRule::fixed: return "fixed";
  }
  return "?";
}

std::string run_config_to_json(const RunConfig& c) {
  json j = {{"command", c.command},
            {"data_dir", c.data_dir},
            {"split", {{"train", c.ratios.train}, {"val", c.ratios.val}, {"test", c.ratios.test}}},
            {"hyperparams", hp_json(c.hp)},
            {"cnn",
             {{"max_epochs", c.cnn.max_epochs},
              {"batch_size", c.cnn.batch_size},
              {"stop_on_perfect_val", c.cnn.stop_on_perfect_val}}}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text, RunConfig base) {
  const json j = parse_object(text, "config");
  reject_unknown(j, {"command", "data_dir", "split", "hyperparams", "cnn"}, "config");
  read_key(j, "command", base.command, "config");
  read_key(j, "data_dir", base.data_dir, "config");
  if (j.contains("split")) {
    const json& s = j.at("split");
    if (!s.is_object()) throw ConfigError("config.split: expected an object");
    reject_unknown(s, {"train", "val", "test"}, "config.split");
    read_key(s, "train", base.ratios.train, "config.split");
    read_key(s, "val", base.ratios.val, "config.split");
    read_key(s, "test", base.ratios.test, "config.split");
  }
  if (j.contains("hyperparams")) hp_update(j.at("hyperparams"), base.hp);
  if (j.contains("cnn")) {
    const json& c = j.at("cnn");
    if (!c.is_object()) throw ConfigError("config.cnn: expected an object");
    reject_unknown(c, {"max_epochs", "batch_size", "stop_on_perfect_val"}, "config.cnn");
    read_key(c, "max_epochs", base.cnn.max_epochs, "config.cnn");
    read_key(c, "batch_size", base.cnn.batch_size, "config.cnn");
    read_key(c, "stop_on_perfect_val", base.cnn.stop_on_perfect_val, "config.cnn");
  }
  return base;
}

std::string generator_config_to_json(const GeneratorConfig& config) {
  json classes = json::array();
  for (const StripeSpec& s : config.classes) {
    classes.push_back({{"angle_mean_deg", to_degrees(s.angle_mean)},
                       {"angle_std_deg", to_degrees(s.angle_std)},
                       {"period_mean", s.period_mean},
                       {"period_std", s.period_std},
                       {"phase_jitter", s.phase_jitter},
                       {"noise_std", s.noise_std}});
  }
  json j = {{"classes", classes},
            {"n_per_class", config.n_per_class},
            {"size", config.size},
            {"channels", config.channels},
            {"seed", config.seed}};
  return j.dump(2) + "\n";
}

GeneratorConfig generator_config_from_json(std::string_view text) {
  const json j = parse_object(text, "generator config");
  reject_unknown(j, {"classes", "n_per_class", "size", "channels", "seed"}, "generator config");
  GeneratorConfig c = default_generator_config();
  read_key(j, "n_per_class", c.n_per_class, "generator config");
  read_key(j, "size", c.size, "generator config");
  read_key(j, "channels", c.channels, "generator config");
  read_key(j, "seed", c.seed, "generator config");
  if (j.contains("classes")) {
    const json& arr = j.at("classes");
    if (!arr.is_array()) throw ConfigError("generator config: 'classes' must be an array");
    c.classes.clear();
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string where = "generator config.classes[" + std::to_string(k) + "]";
      const json& e = arr[k];
      if (!e.is_object()) throw ConfigError(where + ": expected an object");
      reject_unknown(e, {"angle_mean_deg", "angle_std_deg", "period_mean", "period_std", "phase_jitter", "noise_std"},
                     where);
      StripeSpec s;
      double angle = 0.0;
      double angle_std = 0.0;
      read_key(e, "angle_mean_deg", angle, where);
      read_key(e, "angle_std_deg", angle_std, where);
      s.angle_mean = to_radians(angle);
      s.angle_std = to_radians(angle_std);
      read_key(e, "period_mean", s.period_mean, where);
      read_key(e, "period_std", s.period_std, where);
      read_key(e, "phase_jitter", s.phase_jitter, where);
      read_key(e, "noise_std", s.noise_std, where);
      c.classes.push_back(s);
    }
  }
  return c;
}

void write_epochs_csv(std::ostream& out, std::span<const EpochRecord> records) {
  out << kEpochCsvHeader << '\n';
  for (const EpochRecord& r : records) {
    out << r.epoch << ',' << fmt_double(r.loss.l_sv) << ',' << fmt_double(r.loss.l_mc) << ','
        << fmt_double(r.loss.l_cc) << ',' << fmt_double(r.loss.total) << ',' << r.n_sv << ',' << r.n_q << ','
        << r.n_r << ',' << fmt_double(r.train_bacc) << ',' << fmt_double(r.val_bacc) << ',' << fmt_double(r.ms)
        << '\n';
  }
}

std::vector<EpochRecord> read_epochs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kEpochCsvHeader) {
    throw ConfigError("epochs.csv: missing or unexpected header");
  }
  std::vector<EpochRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) throw ConfigError("epochs.csv line " + std::to_string(line_no) + ": expected 11 fields");
    auto num = [&](const std::string& s) {
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("epochs.csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
      }
      return v;
    };
    auto count = [&](const std::string& s) {
      std::size_t v = 0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("epochs.csv line " + std::to_string(line_no) + ": bad count '" + s + "'");
      }
      return v;
    };
    EpochRecord r;
    r.epoch = count(f[0]);
    r.loss = total_loss(num(f[1]), num(f[2]), num(f[3]));
    r.loss.total = num(f[4]);
    r.n_sv = count(f[5]);
    r.n_q = count(f[6]);
    r.n_r = count(f[7]);
    r.train_bacc = num(f[8]);
    r.val_bacc = num(f[9]);
    r.ms = num(f[10]);
    out.push_back(r);
  }
  return out;
}

void write_report_csv(std::ostream& out, std::span<const EpochRecord> records) {
  out << kReportCsvHeader << '\n';
  for (const EpochRecord& r : records) {
    out << r.epoch << ',' << fmt_double(r.loss.l_sv) << ',' << fmt_double(r.loss.l_mc) << ','
        << fmt_double(r.loss.l_cc) << ',' << fmt_double(r.loss.total) << ',' << r.n_sv << ','
        << fmt_double(r.train_bacc) << ',' << fmt_double(r.val_bacc) << '\n';
  }
}

SplitReport evaluate(const AnyModel& model, const Dataset& data, const std::string& name) {
  if (data.size() == 0) throw DataError("evaluate: dataset '" + name + "' is empty");
  const std::size_t classes = model_classes(model);
  if (data.num_classes() != classes) {
    throw DataError("evaluate: dataset has " + std::to_string(data.num_classes()) + " classes, model predicts " +
                    std::to_string(classes));
  }
  const auto pred = predict(model, data);
  SplitReport r;
  r.name = name;
  r.n = data.size();
  r.confusion = confusion_matrix(data.labels, pred, classes);
  r.recall = per_class_recall(r.confusion);
  r.balanced_accuracy = balanced_accuracy(data.labels, pred, classes);
  return r;
}

std::string eval_report_to_json(const EvalReport& report) {
  json splits = json::object();
  for (const SplitReport& s : report.splits) {
    splits[s.name] = {{"n", s.n},
                      {"balanced_accuracy", s.balanced_accuracy},
                      {"confusion_matrix", s.confusion},
                      {"per_class_recall", s.recall}};
  }
  json j = {{"model_kind", report.model_kind},
            {"class_names", report.class_names},
            {"splits", splits},
            {"metadata", {{"seed", report.seed}, {"hyperparams", hp_json(report.hp)}, {"version", report.version}}}};
  if (report.epochs_run > 0) {
    j["training"] = {{"best_epoch", report.best_epoch}, {"epochs_run", report.epochs_run}};
  }
  return j.dump(2) + "\n";
}

StagedDir::StagedDir(std::filesystem::path destination) : destination_(std::move(destination)) {
  namespace fs = std::filesystem;
  if (destination_.empty()) throw ConfigError("output directory must not be empty");
  if (fs::exists(destination_)) {
    if (!fs::is_directory(destination_)) {
      throw ConfigError("output path " + destination_.string() + " exists and is not a directory");
    }
    if (!fs::is_empty(destination_)) {
      throw ConfigError("output directory " + destination_.string() + " exists and is not empty; refusing to overwrite");
    }
  }
  fs::path parent = destination_.has_parent_path() ? destination_.parent_path() : fs::path(".");
  fs::create_directories(parent);
  std::random_device rd;
  for (int attempt = 0; attempt < 16; ++attempt) {
    fs::path candidate = parent / ("." + destination_.filename().string() + ".staging-" + std::to_string(rd()));
    if (fs::create_directory(candidate)) {
      staging_ = std::move(candidate);
      return;
    }
  }
  throw ConfigError("cannot create a staging directory next to " + destination_.string());
}

StagedDir::~StagedDir() {
  if (!committed_ && !staging_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(staging_, ec);
  }
}

void StagedDir::commit() {
  namespace fs = std::filesystem;
  if (committed_) return;
  // An empty destination may have appeared or already existed; replace it.
  if (fs::exists(destination_)) {
    if (!fs::is_directory(destination_) || !fs::is_empty(destination_)) {
      throw ConfigError("output directory " + destination_.string() + " was populated while the run was in progress");
    }
    fs::remove(destination_);
  }
  fs::rename(staging_, destination_);
  committed_ = true;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace lmfcn
