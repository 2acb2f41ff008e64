#include "lmfcn/fcn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <tuple>

namespace lmfcn {
namespace {

std::array<std::size_t, kFcnBlocks> block_widths(std::size_t latent_dim) {
  return {kConv1Channels, kConv2Channels, latent_dim};
}

ConvBlockGrads zero_block_grads(const ConvBlockParams& p) {
  const std::size_t c = p.bias.size();
  return {Tensor4(p.weight.shape()), std::vector<double>(c, 0.0), std::vector<double>(c, 0.0),
          std::vector<double>(c, 0.0)};
}

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

double max_abs_of(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Runs the block stack over one same-size batch.
Matrix forward_group(const Tensor4& batch, FcnParams& params, nn::Mode mode, FcnGroupCache* cache) {
  Tensor4 x = batch;
  for (std::size_t b = 0; b < kFcnBlocks; ++b) {
    ConvBlockParams& p = params.blocks[b];
    auto conv = nn::conv2d(x, p.weight, p.bias);
    auto bn = nn::batchnorm(conv.output, p.bn_scale, p.bn_shift, p.bn_running, mode);
    auto act = nn::relu(bn.output);
    if (cache) {
      cache->blocks[b].conv = std::move(conv.cache);
      cache->blocks[b].bn = std::move(bn.cache);
      cache->blocks[b].relu = std::move(act.cache);
    }
    if (b + 1 < kFcnBlocks) {
      auto pool = nn::maxpool2(act.output);
      if (cache) cache->blocks[b].pool = std::move(pool.cache);
      x = std::move(pool.output);
    } else {
      auto g = nn::gap(act.output);
      if (cache) cache->gap = g.cache;
      return std::move(g.output);
    }
  }
  return {};
}

void check_image(const Image& im, const FcnParams& params) {
  if (im.c != params.in_channels) {
    throw ShapeError("fcn: image has " + std::to_string(im.c) + " channels, network expects " +
                     std::to_string(params.in_channels));
  }
  if (im.h < 4 || im.w < 4) throw ShapeError("fcn: images must be at least 4x4");
}

}  // namespace

bool FcnParams::all_finite() const {
  for (const auto& b : blocks) {
    if (!b.weight.all_finite()) return false;
    for (const auto* v : {&b.bias, &b.bn_scale, &b.bn_shift, &b.bn_running.mean, &b.bn_running.var}) {
      if (!std::all_of(v->begin(), v->end(), [](double x) { return std::isfinite(x); })) return false;
    }
  }
  return true;
}

FcnGrads FcnGrads::zeros_like(const FcnParams& params) {
  FcnGrads g;
  for (std::size_t b = 0; b < kFcnBlocks; ++b) g.blocks[b] = zero_block_grads(params.blocks[b]);
  return g;
}

void FcnGrads::accumulate(const FcnGrads& other) {
  for (std::size_t b = 0; b < kFcnBlocks; ++b) {
    add_into(blocks[b].weight.data(), other.blocks[b].weight.data());
    add_into(blocks[b].bias, other.blocks[b].bias);
    add_into(blocks[b].bn_scale, other.blocks[b].bn_scale);
    add_into(blocks[b].bn_shift, other.blocks[b].bn_shift);
  }
}

double FcnGrads::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks) {
    m = std::max({m, max_abs_of(b.weight.data()), max_abs_of(b.bias), max_abs_of(b.bn_scale),
                  max_abs_of(b.bn_shift)});
  }
  return m;
}

FcnParams fcn_init(std::uint64_t seed, std::size_t in_channels, std::size_t latent_dim) {
  if (latent_dim < 1) throw ParameterError("fcn_init: latent dimension must be >= 1");
  if (in_channels < 1) throw ParameterError("fcn_init: input channels must be >= 1");
  FcnParams p;
  p.in_channels = in_channels;
  p.latent_dim = latent_dim;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  const auto widths = block_widths(latent_dim);
  std::size_t c_in = in_channels;
  for (std::size_t b = 0; b < kFcnBlocks; ++b) {
    const std::size_t c_out = widths[b];
    const double fan_in = static_cast<double>(c_in * 9);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    ConvBlockParams& blk = p.blocks[b];
    blk.weight = Tensor4({c_out, c_in, 3, 3});
    for (double& v : blk.weight.data()) v = normal(rng);
    blk.bias.assign(c_out, 0.0);
    blk.bn_scale.assign(c_out, 1.0);
    blk.bn_shift.assign(c_out, 0.0);
    blk.bn_running = nn::RunningStats::identity(c_out);
    c_in = c_out;
  }
  return p;
}

FcnForward fcn_forward(std::span<const Image> images, FcnParams& params, nn::Mode mode) {
  if (images.empty()) throw ShapeError("fcn_forward: no images");
  std::map<std::tuple<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < images.size(); ++i) {
    check_image(images[i], params);
    groups[{images[i].h, images[i].w}].push_back(i);
  }

  FcnForward out{Matrix(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(params.latent_dim)),
                 FcnCaches{images.size(), {}}};
  for (auto& [dims, rows] : groups) {
    std::vector<const Image*> ptrs;
    ptrs.reserve(rows.size());
    for (std::size_t r : rows) ptrs.push_back(&images[r]);
    FcnGroupCache cache;
    cache.rows = rows;
    const Matrix latent = forward_group(stack_images(ptrs), params, mode, &cache);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.latent.row(static_cast<Eigen::Index>(rows[k])) = latent.row(static_cast<Eigen::Index>(k));
    }
    out.caches.groups.push_back(std::move(cache));
  }
  return out;
}

Matrix fcn_embed(std::span<const Image> images, const FcnParams& params) {
  Matrix latent(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(params.latent_dim));
  // Eval mode never writes running statistics; a scratch copy keeps `params` const.
  FcnParams scratch = params;
  for (std::size_t i = 0; i < images.size(); ++i) {
    check_image(images[i], params);
    const Image* ptr = &images[i];
    const Matrix row =
        forward_group(stack_images(std::span<const Image* const>(&ptr, 1)), scratch, nn::Mode::eval, nullptr);
    latent.row(static_cast<Eigen::Index>(i)) = row.row(0);
  }
  return latent;
}

FcnGrads fcn_backward(const Matrix& latent_grads, const FcnCaches& caches, const FcnParams& params) {
  if (latent_grads.rows() != static_cast<Eigen::Index>(caches.rows)) {
    throw ShapeError("fcn_backward: " + std::to_string(latent_grads.rows()) + " gradient rows for " +
                     std::to_string(caches.rows) + " forwarded instances");
  }
  if (latent_grads.cols() != static_cast<Eigen::Index>(params.latent_dim)) {
    throw ShapeError("fcn_backward: gradient width does not match latent dimension");
  }
  FcnGrads total = FcnGrads::zeros_like(params);
  for (const FcnGroupCache& group : caches.groups) {
    Matrix g(static_cast<Eigen::Index>(group.rows.size()), latent_grads.cols());
    for (std::size_t k = 0; k < group.rows.size(); ++k) {
      g.row(static_cast<Eigen::Index>(k)) = latent_grads.row(static_cast<Eigen::Index>(group.rows[k]));
    }
    Tensor4 grad = nn::gap_backward(g, group.gap);
    for (std::size_t b = kFcnBlocks; b-- > 0;) {
      const FcnBlockCache& c = group.blocks[b];
      if (b + 1 < kFcnBlocks) grad = nn::maxpool2_backward(grad, c.pool);
      grad = nn::relu_backward(grad, c.relu);
      auto bn = nn::batchnorm_backward(grad, c.bn);
      auto conv = nn::conv2d_backward(bn.input, c.conv, b > 0);
      ConvBlockGrads& dst = total.blocks[b];
      add_into(dst.weight.data(), conv.weight.data());
      add_into(dst.bias, conv.bias);
      add_into(dst.bn_scale, bn.scale);
      add_into(dst.bn_shift, bn.shift);
      grad = std::move(conv.input);
    }
  }
  return total;
}

std::vector<ParamSlot> param_slots(FcnParams& params, const FcnGrads& grads) {
  std::vector<ParamSlot> slots;
  for (std::size_t b = 0; b < kFcnBlocks; ++b) {
    const std::string prefix = "conv" + std::to_string(b + 1);
    ConvBlockParams& p = params.blocks[b];
    const ConvBlockGrads& g = grads.blocks[b];
    slots.push_back({prefix + ".weight", p.weight.data(), g.weight.data()});
    slots.push_back({prefix + ".bias", p.bias, g.bias});
    slots.push_back({prefix + ".bn_scale", p.bn_scale, g.bn_scale});
    slots.push_back({prefix + ".bn_shift", p.bn_shift, g.bn_shift});
  }
  return slots;
}

}  // namespace lmfcn
