#include <benchmark/benchmark.h>

#include <random>

#include "lmfcn/anchors.hpp"
#include "lmfcn/dataset.hpp"
#include "lmfcn/fcn.hpp"
#include "lmfcn/geometry.hpp"
#include "lmfcn/layers.hpp"
#include "lmfcn/svm.hpp"

using namespace lmfcn;

namespace {

Tensor4 random_tensor(Shape4 shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor4 t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

Matrix random_latent(std::size_t n, std::size_t phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(phi));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

std::vector<Image> stripes(std::size_t n, std::size_t size) {
  GeneratorConfig cfg = default_generator_config();
  cfg.n_per_class = n / 2;
  cfg.size = size;
  return gen_gaussian_stripes(cfg).images;
}

void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor4 x = random_tensor({4, c, 32, 32}, 1);
  const Tensor4 w = random_tensor({c, c, 3, 3}, 2);
  const std::vector<double> b(c, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, w, b));
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor4 x = random_tensor({4, c, 32, 32}, 1);
  const Tensor4 w = random_tensor({c, c, 3, 3}, 2);
  const std::vector<double> b(c, 0.0);
  const auto fwd = nn::conv2d(x, w, b);
  const Tensor4 g = random_tensor(fwd.output.shape(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward(g, fwd.cache));
}
BENCHMARK(BM_Conv2dBackward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

// Step 1 of an epoch: eval-mode embedding of 64x64 images.
void BM_FcnEmbed(benchmark::State& state) {
  const auto images = stripes(static_cast<std::size_t>(state.range(0)), 64);
  const FcnParams p = fcn_init(1, 3, 16);
  for (auto _ : state) benchmark::DoNotOptimize(fcn_embed(images, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FcnEmbed)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Geometry(benchmark::State& state) {
  const Matrix t = random_latent(static_cast<std::size_t>(state.range(0)), 16, 4);
  for (auto _ : state) benchmark::DoNotOptimize(compute_geometry(t, 1.0 / 16.0));
}
BENCHMARK(BM_Geometry)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_Smo(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Matrix t = random_latent(n, 16, 5);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 == 0 ? 1 : -1;
    t(static_cast<Eigen::Index>(i), 0) += 0.5 * y[i];
  }
  const Matrix k = rbf_kernel(pairwise_sq_dist(t), 1.0 / 16.0);
  for (auto _ : state) benchmark::DoNotOptimize(smo_train(k, y));
}
BENCHMARK(BM_Smo)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_AnchorTables(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix d = dist_matrix(pairwise_sq_dist(random_latent(n, 16, 6)));
  std::vector<int> labels(n);
  std::vector<int> preds(n);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 2);
    preds[i] = i % 7 == 0 ? 1 - labels[i] : labels[i];
    if (i % 5 == 0) support.push_back(i);
  }
  const InstancePartition part = partition_instances(labels, preds, support);
  for (auto _ : state) benchmark::DoNotOptimize(build_anchor_tables(d, part, 5, 1, 3));
}
BENCHMARK(BM_AnchorTables)->Arg(200)->Arg(800)->Unit(benchmark::kMicrosecond);

void BM_LbpFeatures(benchmark::State& state) {
  const auto images = stripes(2, 64);
  for (auto _ : state) benchmark::DoNotOptimize(lbp_features(images.front()));
}
BENCHMARK(BM_LbpFeatures)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
