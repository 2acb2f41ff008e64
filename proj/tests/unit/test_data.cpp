#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "lmfcn/dataset.hpp"
#include "lmfcn/image_io.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lmfcn;
using namespace lmfcn::testing;
namespace fs = std::filesystem;

namespace {

GeneratorConfig small_config(std::uint64_t seed) {
  GeneratorConfig cfg = default_generator_config();
  cfg.n_per_class = 5;
  cfg.size = 16;
  cfg.seed = seed;
  return cfg;
}

Dataset balanced(std::size_t n_per_class, std::size_t classes) {
  Dataset ds;
  for (std::size_t k = 0; k < classes; ++k) {
    ds.class_names.push_back("c" + std::to_string(k));
    for (std::size_t i = 0; i < n_per_class; ++i) {
      ds.images.push_back(Image{1, 4, 4, std::vector<double>(16, 0.5)});
      ds.labels.push_back(static_cast<int>(k));
      ds.names.push_back(std::to_string(k) + "_" + std::to_string(i));
    }
  }
  return ds;
}


}  // namespace

TEST(Generator, DeterministicPerSeed) {
  const Dataset a = gen_gaussian_stripes(small_config(7));
  const Dataset b = gen_gaussian_stripes(small_config(7));
  const Dataset c = gen_gaussian_stripes(small_config(8));
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.images[i].pixels, b.images[i].pixels);
  EXPECT_NE(a.images[0].pixels, c.images[0].pixels);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NO_THROW(a.validate());
}

TEST(Generator, DegenerateDistributionsGiveIdenticalImages) {
  GeneratorConfig cfg = small_config(3);
  for (auto& s : cfg.classes) {
    s.angle_std = 0.0;
    s.period_std = 0.0;
    s.noise_std = 0.0;
    s.phase_jitter = 0.0;
  }
  const Dataset ds = gen_gaussian_stripes(cfg);
  for (std::size_t i = 1; i < ds.size(); ++i) {
    if (ds.labels[i] == ds.labels[0]) EXPECT_EQ(ds.images[i].pixels, ds.images[0].pixels);
  }
  EXPECT_NE(ds.images.front().pixels, ds.images.back().pixels);
}

TEST(Generator, ZeroNoiseMeanNearHalf) {
  GeneratorConfig cfg = default_generator_config();
  cfg.n_per_class = 10;
  cfg.seed = 11;
  for (auto& s : cfg.classes) s.noise_std = 0.0;
  const Dataset ds = gen_gaussian_stripes(cfg);
  for (const Image& im : ds.images) {
    const double mean = std::accumulate(im.pixels.begin(), im.pixels.end(), 0.0) / static_cast<double>(im.pixels.size());
    EXPECT_GE(mean, 0.4);
    EXPECT_LE(mean, 0.6);
  }
}

TEST(Generator, RejectsBadConfigs) {
  GeneratorConfig cfg = small_config(1);
  cfg.size = 18;
  EXPECT_THROW(gen_gaussian_stripes(cfg), ParameterError);
  cfg = small_config(1);
  cfg.classes[0].angle_std = -1.0;
  EXPECT_THROW(gen_gaussian_stripes(cfg), ParameterError);
  cfg = small_config(1);
  cfg.classes[1].period_mean = 2.0;
  EXPECT_THROW(gen_gaussian_stripes(cfg), ParameterError);
}

TEST(Split, StratifiedCounts) {
  const Dataset ds = balanced(50, 2);
  const DataSplits s = split(ds, {0.6, 0.2, 0.2}, 1);
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.val.size(), 20u);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_EQ(s.train.class_counts(), (std::vector<std::size_t>{30, 30}));
  EXPECT_EQ(s.val.class_counts(), (std::vector<std::size_t>{10, 10}));
  EXPECT_EQ(s.test.class_counts(), (std::vector<std::size_t>{10, 10}));
}

TEST(Split, DisjointUnionAndDeterministic) {
  const Dataset ds = balanced(17, 3);
  const DataSplits a = split(ds, {0.5, 0.25, 0.25}, 9);
  const DataSplits b = split(ds, {0.5, 0.25, 0.25}, 9);
  std::multiset<std::string> seen;
  for (const Dataset* d : {&a.train, &a.val, &a.test}) seen.insert(d->names.begin(), d->names.end());
  EXPECT_EQ(seen, std::multiset<std::string>(ds.names.begin(), ds.names.end()));
  EXPECT_EQ(a.train.names, b.train.names);
  EXPECT_EQ(a.val.names, b.val.names);
  EXPECT_EQ(a.test.names, b.test.names);
  const DataSplits c = split(ds, {0.5, 0.25, 0.25}, 10);
  EXPECT_NE(a.train.names, c.train.names);
}

TEST(Split, Errors) {
  EXPECT_THROW(split(balanced(2, 2), {0.6, 0.2, 0.2}, 1), DataError);
  EXPECT_THROW(split(balanced(10, 2), {0.6, 0.3, 0.3}, 1), ParameterError);
}

TEST(Dataset, ValidateCatchesProblems) {
  Dataset ds = balanced(2, 2);
  ds.images[0].pixels[0] = 1.5;
  EXPECT_THROW(ds.validate(), DataError);
  ds = balanced(2, 2);
  ds.class_names.push_back("empty");
  EXPECT_THROW(ds.validate(), DataError);
  ds = balanced(2, 2);
  ds.labels.pop_back();
  EXPECT_THROW(ds.validate(), DataError);
}

TEST(ImageDir, PngRoundTripWithinOneLevel) {
  TempDir tmp;
  GeneratorConfig cfg = small_config(5);
  cfg.n_per_class = 3;
  const Dataset ds = gen_gaussian_stripes(cfg);
  write_image_dir(ds, tmp.path);
  const Dataset back = load_image_dir(tmp.path);
  ASSERT_EQ(back.size(), 6u);
  EXPECT_EQ(back.labels, (std::vector<int>{0, 0, 0, 1, 1, 1}));
  EXPECT_EQ(back.class_names, ds.class_names);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ASSERT_EQ(back.images[i].c, 3u);
    double worst = 0.0;
    for (std::size_t j = 0; j < ds.images[i].pixels.size(); ++j) {
      worst = std::max(worst, std::abs(back.images[i].pixels[j] - ds.images[i].pixels[j]));
    }
    EXPECT_LE(worst, 1.0 / 255.0);
  }
}

TEST(ImageDir, GrayscaleReplicatedToRgb) {
  TempDir tmp;
  std::mt19937_64 rng(2);
  const Image gray = random_image(1, 5, 7, rng);
  write_png(tmp.path / "g.png", gray);
  const Image rgb = read_png(tmp.path / "g.png");
  ASSERT_EQ(rgb.c, 3u);
  ASSERT_EQ(rgb.h, 5u);
  ASSERT_EQ(rgb.w, 7u);
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 7; ++x) {
      EXPECT_EQ(rgb.at(0, y, x), rgb.at(1, y, x));
      EXPECT_EQ(rgb.at(0, y, x), rgb.at(2, y, x));
      EXPECT_LE(std::abs(rgb.at(0, y, x) - gray.at(0, y, x)), 0.5 / 255.0 + 1e-12);
    }
}

TEST(ImageDir, Errors) {
  TempDir tmp;
  EXPECT_THROW(load_image_dir(tmp.path / "missing"), DataError);
  fs::create_directories(tmp.path / "a");
  fs::create_directories(tmp.path / "b");
  std::mt19937_64 rng(1);
  write_png(tmp.path / "a" / "x.png", random_image(3, 4, 4, rng));
  try {
    load_image_dir(tmp.path);
    FAIL() << "empty class accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
  { std::ofstream(tmp.path / "b" / "broken.png") << "not a png"; }
  try {
    load_image_dir(tmp.path);
    FAIL() << "corrupt file accepted";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("broken.png"), std::string::npos) << e.what();
  }
}

TEST(Lbp, BinTableHas58UniformCodes) {
  std::set<std::size_t> bins;
  std::size_t uniform = 0;
  for (unsigned c = 0; c < 256; ++c) {
    const std::size_t b = lbp_bin(static_cast<std::uint8_t>(c));
    if (circular_transitions(c) <= 2) {
      ++uniform;
      bins.insert(b);
    } else {
      EXPECT_EQ(b, 58u);
    }
  }
  EXPECT_EQ(uniform, 58u);
  EXPECT_EQ(bins.size(), 58u);
  EXPECT_EQ(*bins.rbegin(), 57u);
}

TEST(Lbp, MatchesNaiveOracleExactly) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Image im = random_image(3, 16, 16, rng);
    const auto h = lbp_features(im);
    const auto o = lbp_oracle(to_grayscale(im), 16, 16);
    for (std::size_t b = 0; b < kLbpBins; ++b) EXPECT_EQ(h[b], o[b]) << "bin " << b;
  }
}

TEST(Lbp, LumaWeights) {
  Image im{3, 1, 1, {1.0, 0.0, 0.0}};
  EXPECT_DOUBLE_EQ(to_grayscale(im)[0], 0.299);
  Image two{2, 1, 1, {0.2, 0.4}};
  EXPECT_DOUBLE_EQ(to_grayscale(two)[0], 0.3);
}

TEST(Lbp, ConstantImageIsOneHotAtZeroCode) {
  const Image im{3, 9, 9, std::vector<double>(3 * 81, 0.37)};
  const auto h = lbp_features(im);
  EXPECT_EQ(h[lbp_bin(0)], 1.0);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), 0.0), 1.0);
}

TEST(Lbp, HistogramSumsToOne) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = lbp_features(random_image(3, 3 + trial, 5 + trial, rng));
    EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Lbp, InvariantToConstantShift) {
  // Dyadic pixel values keep the shifted comparisons exact.
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 32);
  Image im{1, 12, 12, std::vector<double>(144)};
  for (double& v : im.pixels) v = level(rng) / 64.0;
  Image shifted = im;
  for (double& v : shifted.pixels) v += 0.25;
  EXPECT_EQ(lbp_features(im), lbp_features(shifted));
}

TEST(Lbp, TooSmallImageThrows) {
  EXPECT_THROW(lbp_features(Image{1, 2, 5, std::vector<double>(10, 0.0)}), ParameterError);
  const std::vector<Image> images = {Image{1, 3, 3, std::vector<double>(9, 0.1)}};
  const Matrix m = lbp_feature_matrix(images);
  EXPECT_EQ(m.rows(), 1);
  EXPECT_EQ(m.cols(), 59);
}
