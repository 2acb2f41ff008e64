#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lmfcn/layers.hpp"
#include "test_util.hpp"

using namespace lmfcn;
using namespace lmfcn::testing;

namespace {

// Direct 3x3 zero-padded convolution.
Tensor4 naive_conv(const Tensor4& x, const Tensor4& w, std::span<const double> b) {
  const Shape4 s = x.shape();
  const std::size_t co = w.shape().n;
  Tensor4 out({s.n, co, s.h, s.w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t xx = 0; xx < s.w; ++xx) {
          double acc = b[o];
          for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t ky = 0; ky < 3; ++ky)
              for (std::size_t kx = 0; kx < 3; ++kx) {
                const long iy = static_cast<long>(y + ky) - 1;
                const long ix = static_cast<long>(xx + kx) - 1;
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(s.h) || ix >= static_cast<long>(s.w)) continue;
                acc += w.at(o, c, ky, kx) * x.at(n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
          out.at(n, o, y, xx) = acc;
        }
  return out;
}

class LayerGradients : public ::testing::TestWithParam<int> {
 protected:
  std::mt19937_64 rng{static_cast<std::uint64_t>(GetParam())};
};

}  // namespace

TEST(Conv2d, MatchesDirectConvolution) {
  std::mt19937_64 rng(3);
  const Tensor4 x = random_tensor({2, 3, 5, 7}, rng);
  const Tensor4 w = random_tensor({4, 3, 3, 3}, rng);
  const auto b = random_vector(4, rng);
  const Tensor4 got = nn::conv2d(x, w, b).output;
  const Tensor4 want = naive_conv(x, w, b);
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
}

TEST(Conv2d, RejectsMismatchedShapes) {
  std::mt19937_64 rng(1);
  const Tensor4 x = random_tensor({1, 2, 4, 4}, rng);
  const Tensor4 w = random_tensor({3, 3, 3, 3}, rng);
  EXPECT_THROW(nn::conv2d(x, w, std::vector<double>(3, 0.0)), ShapeError);
  const Tensor4 w2 = random_tensor({3, 2, 3, 3}, rng);
  EXPECT_THROW(nn::conv2d(x, w2, std::vector<double>(2, 0.0)), ShapeError);
}

TEST_P(LayerGradients, Conv2d) {
  Tensor4 x = random_tensor({2, 3, 5, 4}, rng);
  Tensor4 w = random_tensor({4, 3, 3, 3}, rng);
  auto b = random_vector(4, rng);
  const Tensor4 head = random_tensor({2, 4, 5, 4}, rng);
  auto f = [&] { return dot(nn::conv2d(x, w, b).output.data(), head.data()); };
  const auto fwd = nn::conv2d(x, w, b);
  const auto g = nn::conv2d_backward(head, fwd.cache);
  EXPECT_LT(max_rel_error(f, x.data(), g.input.data(), sample_indices(x.size(), 60, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, w.data(), g.weight.data(), sample_indices(w.size(), 60, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, b, g.bias, sample_indices(b.size(), 60, rng)), 1e-3);
}

TEST_P(LayerGradients, MaxPool) {
  Tensor4 x = random_tensor({2, 3, 6, 5}, rng);
  const auto fwd = nn::maxpool2(x);
  ASSERT_EQ(fwd.output.shape(), (Shape4{2, 3, 3, 2}));
  const Tensor4 head = random_tensor(fwd.output.shape(), rng);
  auto f = [&] { return dot(nn::maxpool2(x).output.data(), head.data()); };
  const Tensor4 gx = nn::maxpool2_backward(head, fwd.cache);
  EXPECT_LT(max_rel_error(f, x.data(), gx.data(), sample_indices(x.size(), 200, rng)), 1e-3);
}

TEST_P(LayerGradients, BatchNormTrain) {
  Tensor4 x = random_tensor({3, 4, 3, 3}, rng, -2.0, 2.0);
  auto scale = random_vector(4, rng, 0.5, 1.5);
  auto shift = random_vector(4, rng);
  const Tensor4 head = random_tensor(x.shape(), rng);
  auto f = [&] {
    auto rs = nn::RunningStats::identity(4);
    return dot(nn::batchnorm(x, scale, shift, rs, nn::Mode::train).output.data(), head.data());
  };
  auto rs = nn::RunningStats::identity(4);
  const auto fwd = nn::batchnorm(x, scale, shift, rs, nn::Mode::train);
  const auto g = nn::batchnorm_backward(head, fwd.cache);
  EXPECT_LT(max_rel_error(f, x.data(), g.input.data(), sample_indices(x.size(), 80, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, scale, g.scale, sample_indices(4, 4, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, shift, g.shift, sample_indices(4, 4, rng)), 1e-3);
}

TEST_P(LayerGradients, BatchNormEval) {
  Tensor4 x = random_tensor({2, 3, 2, 3}, rng);
  auto scale = random_vector(3, rng, 0.5, 1.5);
  auto shift = random_vector(3, rng);
  nn::RunningStats rs{random_vector(3, rng), random_vector(3, rng, 0.5, 2.0)};
  const Tensor4 head = random_tensor(x.shape(), rng);
  auto f = [&] { return dot(nn::batchnorm(x, scale, shift, rs, nn::Mode::eval).output.data(), head.data()); };
  const auto fwd = nn::batchnorm(x, scale, shift, rs, nn::Mode::eval);
  const auto g = nn::batchnorm_backward(head, fwd.cache);
  EXPECT_LT(max_rel_error(f, x.data(), g.input.data(), sample_indices(x.size(), 80, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, scale, g.scale, sample_indices(3, 3, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, shift, g.shift, sample_indices(3, 3, rng)), 1e-3);
}

TEST_P(LayerGradients, Relu) {
  Tensor4 x = random_tensor({2, 2, 3, 3}, rng);
  const Tensor4 head = random_tensor(x.shape(), rng);
  auto f = [&] { return dot(nn::relu(x).output.data(), head.data()); };
  const auto fwd = nn::relu(x);
  const Tensor4 gx = nn::relu_backward(head, fwd.cache);
  EXPECT_LT(max_rel_error(f, x.data(), gx.data(), sample_indices(x.size(), 100, rng)), 1e-3);
}

TEST_P(LayerGradients, GlobalAveragePool) {
  Tensor4 x = random_tensor({3, 4, 3, 5}, rng);
  const Matrix head = random_matrix(3, 4, rng);
  auto f = [&] { return nn::gap(x).output.cwiseProduct(head).sum(); };
  const auto fwd = nn::gap(x);
  const Tensor4 gx = nn::gap_backward(head, fwd.cache);
  EXPECT_LT(max_rel_error(f, x.data(), gx.data(), sample_indices(x.size(), 100, rng)), 1e-3);
}

TEST_P(LayerGradients, SoftmaxCrossEntropy) {
  Matrix latent = random_matrix(5, 4, rng, -2.0, 2.0);
  Matrix w = random_matrix(3, 4, rng);
  auto b = random_vector(3, rng);
  const std::vector<int> labels = {0, 2, 1, 1, 0};
  auto f = [&] { return nn::fc_softmax_ce(latent, w, b, labels).loss; };
  const auto r = nn::fc_softmax_ce(latent, w, b, labels);
  auto span_of = [](Matrix& m) { return std::span<double>(m.data(), static_cast<std::size_t>(m.size())); };
  auto cspan_of = [](const Matrix& m) {
    return std::span<const double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  EXPECT_LT(max_rel_error(f, span_of(latent), cspan_of(r.grad_latent), sample_indices(20, 20, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, span_of(w), cspan_of(r.grad_weight), sample_indices(12, 12, rng)), 1e-3);
  EXPECT_LT(max_rel_error(f, b, r.grad_bias, sample_indices(3, 3, rng)), 1e-3);
}

INSTANTIATE_TEST_SUITE_P(Seeds, LayerGradients, ::testing::Range(0, 20));

TEST(MaxPool, FloorsOddSizesAndKeepsFirstMaximum) {
  Tensor4 x({1, 1, 3, 3}, 1.0);
  const auto fwd = nn::maxpool2(x);
  EXPECT_EQ(fwd.output.shape(), (Shape4{1, 1, 1, 1}));
  EXPECT_EQ(fwd.cache.argmax[0], 0u);
}

TEST(BatchNorm, UpdatesRunningStatisticsWithUnbiasedVariance) {
  std::mt19937_64 rng(5);
  const Tensor4 x = random_tensor({2, 2, 2, 2}, rng);
  const std::vector<double> scale(2, 1.0);
  const std::vector<double> shift(2, 0.0);
  auto rs = nn::RunningStats::identity(2);
  nn::batchnorm(x, scale, shift, rs, nn::Mode::train);
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> v;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t xx = 0; xx < 2; ++xx) v.push_back(x.at(n, c, y, xx));
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= 8.0;
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    EXPECT_NEAR(rs.mean[c], 0.1 * mean, 1e-14);
    EXPECT_NEAR(rs.var[c], 0.9 + 0.1 * ss / 7.0, 1e-14);
  }
}

TEST(BatchNorm, TrainOutputHasZeroMeanUnitVariance) {
  std::mt19937_64 rng(8);
  const Tensor4 x = random_tensor({4, 3, 3, 3}, rng, -5.0, 5.0);
  auto rs = nn::RunningStats::identity(3);
  const auto out = nn::batchnorm(x, std::vector<double>(3, 1.0), std::vector<double>(3, 0.0), rs, nn::Mode::train);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0.0;
    double v = 0.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 9; ++i) m += out.output.at(n, c, i / 3, i % 3);
    m /= 36.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 9; ++i) v += std::pow(out.output.at(n, c, i / 3, i % 3) - m, 2);
    v /= 36.0;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-3);  // eps keeps it slightly below 1
  }
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogClasses) {
  const Matrix latent = Matrix::Zero(2, 3);
  const Matrix w = Matrix::Zero(4, 3);
  const std::vector<double> b(4, 0.0);
  const std::vector<int> labels = {0, 3};
  EXPECT_NEAR(nn::fc_softmax_ce(latent, w, b, labels).loss, std::log(4.0), 1e-14);
  EXPECT_THROW(nn::fc_softmax_ce(latent, w, b, std::vector<int>{0, 4}), ParameterError);
}
