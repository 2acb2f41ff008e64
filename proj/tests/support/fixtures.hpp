#pragma once

// Small stripe datasets shared by the trainer, baseline, checkpoint and run tests.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <numbers>

#include "lmfcn/dataset.hpp"
#include "lmfcn/trainer.hpp"

namespace lmfcn::testing {

inline Dataset stripes(std::initializer_list<double> angles_deg, std::size_t n_per_class, std::size_t size,
                       std::uint64_t seed) {
  GeneratorConfig cfg = default_generator_config();
  const StripeSpec base = cfg.classes.front();
  cfg.classes.clear();
  for (double a : angles_deg) {
    StripeSpec s = base;
    s.angle_mean = a * std::numbers::pi / 180.0;
    s.period_mean = 4.0;
    s.period_std = 0.5;
    cfg.classes.push_back(s);
  }
  cfg.n_per_class = n_per_class;
  cfg.size = size;
  cfg.seed = seed;
  return gen_gaussian_stripes(cfg);
}

inline Hyperparams small_hp(std::uint64_t seed = 1) {
  Hyperparams hp;
  hp.latent_dim = 4;
  hp.max_epochs = 3;
  hp.ova_epochs = 2;
  hp.seed = seed;
  // With 1/phi on a handful of images every instance tends to be a support
  // vector, which leaves no type-1 anchors and a zero gradient.
  hp.gamma_rule = GammaRule::median;
  return hp;
}

/// Fresh directory named after the running test, removed afterwards.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = std::string(info->test_suite_name()) + "_" + info->name();
    for (char& c : name) {
      if (c == '/') c = '_';
    }
    path = std::filesystem::temp_directory_path() / ("lmfcn_test_" + name);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace lmfcn::testing
