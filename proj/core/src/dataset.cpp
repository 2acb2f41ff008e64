#include "lmfcn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "lmfcn/image_io.hpp"

namespace lmfcn {

namespace fs = std::filesystem;

void Dataset::validate() const {
  if (labels.size() != images.size() || names.size() != images.size()) {
    throw DataError("dataset: images, labels and names differ in length");
  }
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || static_cast<std::size_t>(l) >= class_names.size()) {
      throw DataError("dataset: label " + std::to_string(l) + " out of range for " + names[i]);
    }
    ++counts[static_cast<std::size_t>(l)];
    const Image& im = images[i];
    if (im.pixels.size() != im.c * im.h * im.w) throw DataError("dataset: bad pixel buffer for " + names[i]);
    for (double v : im.pixels) {
      if (!(v >= 0.0 && v <= 1.0)) throw DataError("dataset: pixel outside [0,1] in " + names[i]);
    }
  }
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) throw DataError("dataset: class '" + class_names[k] + "' has no instances");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.class_names = class_names;
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
    out.names.push_back(names.at(i));
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (int l : labels) ++counts.at(static_cast<std::size_t>(l));
  return counts;
}

GeneratorConfig default_generator_config() {
  constexpr double deg = std::numbers::pi / 180.0;
  GeneratorConfig cfg;
  StripeSpec a;
  a.angle_mean = 30.0 * deg;
  a.angle_std = 5.0 * deg;
  a.period_mean = 8.0;
  a.period_std = 1.0;
  a.phase_jitter = 2.0 * std::numbers::pi;
  a.noise_std = 0.1;
  StripeSpec b = a;
  b.angle_mean = 60.0 * deg;
  cfg.classes = {a, b};
  return cfg;
}

Dataset gen_gaussian_stripes(const GeneratorConfig& config) {
  if (config.size == 0 || config.size % 4 != 0) throw ParameterError("gen_gaussian_stripes: size must be a positive multiple of 4");
  if (config.classes.empty()) throw ParameterError("gen_gaussian_stripes: no classes");
  if (config.channels == 0) throw ParameterError("gen_gaussian_stripes: channels must be >= 1");
  for (const StripeSpec& s : config.classes) {
    if (s.angle_std < 0 || s.period_std < 0 || s.noise_std < 0 || s.phase_jitter < 0) {
      throw ParameterError("gen_gaussian_stripes: standard deviations must be >= 0");
    }
    if (!(s.period_mean > 2.0)) throw ParameterError("gen_gaussian_stripes: period mean must exceed 2 pixels");
  }

  Dataset ds;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t side = config.size;
  for (std::size_t k = 0; k < config.classes.size(); ++k) {
    const StripeSpec& s = config.classes[k];
    ds.class_names.push_back("class" + std::to_string(k));
    for (std::size_t t = 0; t < config.n_per_class; ++t) {
      const double angle = s.angle_mean + s.angle_std * unit(rng);
      const double period = std::max(2.0, s.period_mean + s.period_std * unit(rng));
      const double phase = s.phase_jitter * uniform(rng);
      const double cx = std::cos(angle);
      const double sy = std::sin(angle);
      Image im{config.channels, side, side, std::vector<double>(config.channels * side * side)};
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double u = static_cast<double>(x) * cx + static_cast<double>(y) * sy;
          double v = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * u / period + phase);
          if (s.noise_std > 0.0) v += s.noise_std * unit(rng);
          v = std::clamp(v, 0.0, 1.0);
          for (std::size_t ch = 0; ch < config.channels; ++ch) im.at(ch, y, x) = v;
        }
      }
      char name[64];
      std::snprintf(name, sizeof name, "class%zu_%05zu", k, t);
      ds.images.push_back(std::move(im));
      ds.labels.push_back(static_cast<int>(k));
      ds.names.emplace_back(name);
    }
  }
  return ds;
}

Dataset load_image_dir(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("dataset directory not found: " + root.string());
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) class_dirs.push_back(e.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw DataError("no class subdirectories in " + root.string());

  Dataset ds;
  for (std::size_t k = 0; k < class_dirs.size(); ++k) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[k])) {
      std::string ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("class directory has no PNG files: " + class_dirs[k].string());
    ds.class_names.push_back(class_dirs[k].filename().string());
    for (const auto& f : files) {
      ds.images.push_back(read_png(f));
      ds.labels.push_back(static_cast<int>(k));
      ds.names.push_back(class_dirs[k].filename().string() + "/" + f.stem().string());
    }
  }
  ds.validate();
  return ds;
}

void write_image_dir(const Dataset& dataset, const fs::path& root) {
  dataset.validate();
  fs::create_directories(root);
  for (const auto& cls : dataset.class_names) fs::create_directories(root / cls);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::string stem = dataset.names[i];
    if (const auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
    const auto& cls = dataset.class_names[static_cast<std::size_t>(dataset.labels[i])];
    write_png(root / cls / (stem + ".png"), dataset.images[i]);
  }
}

DataSplits split(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.val + ratios.test;
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw ParameterError("split: ratios must be nonnegative and sum to 1");
  }
  dataset.validate();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  for (std::size_t k = 0; k < dataset.num_classes(); ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.labels[i] == static_cast<int>(k)) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto count = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * count));
    const auto n_val = static_cast<std::size_t>(std::llround(ratios.val * count));
    if (n_train + n_val > members.size()) throw DataError("split: class '" + dataset.class_names[k] + "' too small");
    const std::size_t n_test = members.size() - n_train - n_val;
    if ((ratios.train > 0 && n_train == 0) || (ratios.val > 0 && n_val == 0) || (ratios.test > 0 && n_test == 0)) {
      throw DataError("split: class '" + dataset.class_names[k] + "' too small for the requested ratios");
    }
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    val.insert(val.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train),
               members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(val), dataset.subset(test)};
}

}  // namespace lmfcn
