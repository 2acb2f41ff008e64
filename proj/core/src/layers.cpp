#include "lmfcn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmfcn::nn {
namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

constexpr std::size_t kK = 3;  // kernel side

// Unfolds one instance (c, h, w) into a (c*9) x (h*w) matrix for a 3x3/pad-1 window.
void im2col(std::span<const double> image, std::size_t c, std::size_t h, std::size_t w, Matrix& col) {
  col.resize(static_cast<Eigen::Index>(c * kK * kK), static_cast<Eigen::Index>(h * w));
  for (std::size_t ci = 0; ci < c; ++ci) {
    const double* plane = image.data() + ci * h * w;
    for (std::size_t ky = 0; ky < kK; ++ky) {
      for (std::size_t kx = 0; kx < kK; ++kx) {
        double* row = col.row(static_cast<Eigen::Index>((ci * kK + ky) * kK + kx)).data();
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          double* out = row + y * w;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(out, out + w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(sy) * w;
          for (std::size_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            out[x] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) ? 0.0 : src[sx];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-and-adds the column matrix back into an image.
void col2im(const Matrix& col, std::size_t c, std::size_t h, std::size_t w, std::span<double> image) {
  std::fill(image.begin(), image.end(), 0.0);
  for (std::size_t ci = 0; ci < c; ++ci) {
    double* plane = image.data() + ci * h * w;
    for (std::size_t ky = 0; ky < kK; ++ky) {
      for (std::size_t kx = 0; kx < kK; ++kx) {
        const double* row = col.row(static_cast<Eigen::Index>((ci * kK + ky) * kK + kx)).data();
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          double* dst = plane + static_cast<std::size_t>(sy) * w;
          const double* in = row + y * w;
          for (std::size_t x = 0; x < w; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (sx >= 0 && sx < static_cast<std::ptrdiff_t>(w)) dst[sx] += in[x];
          }
        }
      }
    }
  }
}

}  // namespace

ConvForward conv2d(const Tensor4& input, const Tensor4& weight, std::span<const double> bias) {
  const Shape4& in = input.shape();
  const Shape4& ws = weight.shape();
  if (ws.c != in.c) {
    throw ShapeError("conv2d: input has " + std::to_string(in.c) + " channels, weights expect " +
                     std::to_string(ws.c));
  }
  if (ws.h != kK || ws.w != kK) throw ShapeError("conv2d: kernel must be 3x3, got " + to_string(ws));
  if (bias.size() != ws.n) throw ShapeError("conv2d: bias length does not match output channels");

  const std::size_t c_out = ws.n;
  const std::size_t hw = in.plane();
  Tensor4 output({in.n, c_out, in.h, in.w});
  const ConstMap w_mat(weight.data().data(), static_cast<Eigen::Index>(c_out),
                       static_cast<Eigen::Index>(in.c * kK * kK));

  Matrix col;
  for (std::size_t i = 0; i < in.n; ++i) {
    im2col(input.instance(i), in.c, in.h, in.w, col);
    MutMap out(output.instance(i).data(), static_cast<Eigen::Index>(c_out), static_cast<Eigen::Index>(hw));
    out.noalias() = w_mat * col;
    for (std::size_t co = 0; co < c_out; ++co) out.row(static_cast<Eigen::Index>(co)).array() += bias[co];
  }
  return {std::move(output), ConvCache{input, weight}};
}

ConvGrads conv2d_backward(const Tensor4& grad_out, const ConvCache& cache, bool need_input_grad) {
  const Shape4& in = cache.input.shape();
  const Shape4& ws = cache.weight.shape();
  const Shape4 expected{in.n, ws.n, in.h, in.w};
  if (grad_out.shape() != expected) {
    throw ShapeError("conv2d_backward: grad shape " + to_string(grad_out.shape()) + ", expected " +
                     to_string(expected));
  }
  const auto c_out = static_cast<Eigen::Index>(ws.n);
  const auto fan = static_cast<Eigen::Index>(in.c * kK * kK);
  const auto hw = static_cast<Eigen::Index>(in.plane());

  ConvGrads grads;
  grads.weight = Tensor4(ws);
  grads.bias.assign(ws.n, 0.0);
  if (need_input_grad) grads.input = Tensor4(in);

  const ConstMap w_mat(cache.weight.data().data(), c_out, fan);
  MutMap dw(grads.weight.data().data(), c_out, fan);
  Matrix col;
  Matrix dcol;
  for (std::size_t i = 0; i < in.n; ++i) {
    const ConstMap dy(grad_out.instance(i).data(), c_out, hw);
    im2col(cache.input.instance(i), in.c, in.h, in.w, col);
    dw.noalias() += dy * col.transpose();
    for (Eigen::Index co = 0; co < c_out; ++co) grads.bias[static_cast<std::size_t>(co)] += dy.row(co).sum();
    if (need_input_grad) {
      dcol.noalias() = w_mat.transpose() * dy;
      col2im(dcol, in.c, in.h, in.w, grads.input.instance(i));
    }
  }
  return grads;
}

PoolForward maxpool2(const Tensor4& input) {
  const Shape4& in = input.shape();
  const std::size_t oh = in.h / 2;
  const std::size_t ow = in.w / 2;
  if (oh == 0 || ow == 0) throw ShapeError("maxpool2: input too small " + to_string(in));

  Tensor4 output({in.n, in.c, oh, ow});
  PoolCache cache{in, std::vector<std::uint32_t>(output.size())};
  const auto data = input.data();
  std::size_t o = 0;
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t c = 0; c < in.c; ++c) {
      const std::size_t base = (n * in.c + c) * in.plane();
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x, ++o) {
          // Scan order (0,0),(0,1),(1,0),(1,1); strict '>' keeps the first maximum.
          std::size_t best = base + (2 * y) * in.w + 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = base + (2 * y + dy) * in.w + 2 * x + dx;
              if (data[idx] > data[best]) best = idx;
            }
          }
          output.data()[o] = data[best];
          cache.argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return {std::move(output), std::move(cache)};
}

Tensor4 maxpool2_backward(const Tensor4& grad_out, const PoolCache& cache) {
  if (grad_out.size() != cache.argmax.size()) throw ShapeError("maxpool2_backward: grad size mismatch");
  Tensor4 grad_in(cache.input_shape);
  auto gi = grad_in.data();
  const auto go = grad_out.data();
  for (std::size_t o = 0; o < go.size(); ++o) gi[cache.argmax[o]] += go[o];
  return grad_in;
}

BatchNormForward batchnorm(const Tensor4& input, std::span<const double> scale,
                           std::span<const double> shift, RunningStats& running, Mode mode) {
  const Shape4& s = input.shape();
  if (scale.size() != s.c || shift.size() != s.c || running.mean.size() != s.c || running.var.size() != s.c) {
    throw ShapeError("batchnorm: parameter length does not match " + std::to_string(s.c) + " channels");
  }
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n * plane);
  const auto x = input.data();

  std::vector<double> mean(s.c);
  std::vector<double> var(s.c);
  if (mode == Mode::train) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double sum = 0.0;
      for (std::size_t n = 0; n < s.n; ++n) {
        const double* p = x.data() + (n * s.c + c) * plane;
        for (std::size_t k = 0; k < plane; ++k) sum += p[k];
      }
      const double mu = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < s.n; ++n) {
        const double* p = x.data() + (n * s.c + c) * plane;
        for (std::size_t k = 0; k < plane; ++k) sq += (p[k] - mu) * (p[k] - mu);
      }
      mean[c] = mu;
      var[c] = sq / count;
      const double unbiased = count > 1.0 ? var[c] * count / (count - 1.0) : var[c];
      running.mean[c] = (1.0 - kBatchNormMomentum) * running.mean[c] + kBatchNormMomentum * mu;
      running.var[c] = (1.0 - kBatchNormMomentum) * running.var[c] + kBatchNormMomentum * unbiased;
    }
  } else {
    mean = running.mean;
    var = running.var;
  }

  BatchNormForward out{Tensor4(s), BatchNormCache{mode, Tensor4(s), std::vector<double>(s.c),
                                                  std::vector<double>(scale.begin(), scale.end())}};
  auto y = out.output.data();
  auto xh = out.cache.normalized.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    const double inv = 1.0 / std::sqrt(var[c] + kBatchNormEps);
    out.cache.inv_std[c] = inv;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = (n * s.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        const double v = (x[base + k] - mean[c]) * inv;
        xh[base + k] = v;
        y[base + k] = v * scale[c] + shift[c];
      }
    }
  }
  return out;
}

BatchNormGrads batchnorm_backward(const Tensor4& grad_out, const BatchNormCache& cache) {
  const Shape4& s = cache.normalized.shape();
  if (grad_out.shape() != s) throw ShapeError("batchnorm_backward: grad shape mismatch");
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n * plane);
  const auto g = grad_out.data();
  const auto xh = cache.normalized.data();

  BatchNormGrads grads{Tensor4(s), std::vector<double>(s.c, 0.0), std::vector<double>(s.c, 0.0)};
  auto dx = grads.input.data();
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = (n * s.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sum_g += g[base + k];
        sum_gx += g[base + k] * xh[base + k];
      }
    }
    grads.shift[c] = sum_g;
    grads.scale[c] = sum_gx;
    const double k_scale = cache.scale[c] * cache.inv_std[c];
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = (n * s.c + c) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        if (cache.mode == Mode::train) {
          dx[base + k] = k_scale * (g[base + k] - sum_g / count - xh[base + k] * sum_gx / count);
        } else {
          dx[base + k] = k_scale * g[base + k];
        }
      }
    }
  }
  return grads;
}

ReluForward relu(const Tensor4& input) {
  ReluForward out{Tensor4(input.shape()), ReluCache{std::vector<std::uint8_t>(input.size())}};
  const auto x = input.data();
  auto y = out.output.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool on = x[i] > 0.0;
    out.cache.active[i] = on ? 1 : 0;
    y[i] = on ? x[i] : 0.0;
  }
  return out;
}

Tensor4 relu_backward(const Tensor4& grad_out, const ReluCache& cache) {
  if (grad_out.size() != cache.active.size()) throw ShapeError("relu_backward: grad size mismatch");
  Tensor4 grad_in(grad_out.shape());
  const auto g = grad_out.data();
  auto d = grad_in.data();
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = cache.active[i] ? g[i] : 0.0;
  return grad_in;
}

GapForward gap(const Tensor4& input) {
  const Shape4& s = input.shape();
  GapForward out{Matrix(static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(s.c)), GapCache{s}};
  const double inv = 1.0 / static_cast<double>(s.plane());
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* p = input.data().data() + (n * s.c + c) * s.plane();
      double sum = 0.0;
      for (std::size_t k = 0; k < s.plane(); ++k) sum += p[k];
      out.output(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)) = sum * inv;
    }
  }
  return out;
}

Tensor4 gap_backward(const Matrix& grad_out, const GapCache& cache) {
  const Shape4& s = cache.input_shape;
  if (grad_out.rows() != static_cast<Eigen::Index>(s.n) || grad_out.cols() != static_cast<Eigen::Index>(s.c)) {
    throw ShapeError("gap_backward: grad is " + std::to_string(grad_out.rows()) + "x" +
                     std::to_string(grad_out.cols()) + ", expected " + std::to_string(s.n) + "x" +
                     std::to_string(s.c));
  }
  Tensor4 grad_in(s);
  const double inv = 1.0 / static_cast<double>(s.plane());
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double v = grad_out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)) * inv;
      double* p = grad_in.data().data() + (n * s.c + c) * s.plane();
      std::fill(p, p + s.plane(), v);
    }
  }
  return grad_in;
}

Matrix fc_logits(const Matrix& latent, const Matrix& weight, std::span<const double> bias) {
  if (latent.cols() != weight.cols()) throw ShapeError("fc: latent width does not match weight columns");
  if (bias.size() != static_cast<std::size_t>(weight.rows())) throw ShapeError("fc: bias length mismatch");
  Matrix logits = latent * weight.transpose();
  for (Eigen::Index k = 0; k < logits.cols(); ++k) logits.col(k).array() += bias[static_cast<std::size_t>(k)];
  return logits;
}

SoftmaxCeResult fc_softmax_ce(const Matrix& latent, const Matrix& weight, std::span<const double> bias,
                              std::span<const int> labels) {
  const Eigen::Index n = latent.rows();
  const Eigen::Index classes = weight.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeError("fc_softmax_ce: label count mismatch");
  if (n == 0) throw ShapeError("fc_softmax_ce: empty batch");

  SoftmaxCeResult r;
  r.probabilities = fc_logits(latent, weight, bias);
  Matrix dlogits(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= classes) throw ParameterError("fc_softmax_ce: label out of range");
    auto row = r.probabilities.row(i);
    const double m = row.maxCoeff();
    double z = 0.0;
    for (Eigen::Index k = 0; k < classes; ++k) z += std::exp(row(k) - m);
    const double log_z = m + std::log(z);
    r.loss += log_z - row(label);
    for (Eigen::Index k = 0; k < classes; ++k) row(k) = std::exp(row(k) - log_z);
    dlogits.row(i) = row;
    dlogits(i, label) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  r.loss *= inv_n;
  dlogits *= inv_n;
  r.grad_weight = dlogits.transpose() * latent;
  r.grad_bias.resize(static_cast<std::size_t>(classes));
  for (Eigen::Index k = 0; k < classes; ++k) r.grad_bias[static_cast<std::size_t>(k)] = dlogits.col(k).sum();
  r.grad_latent = dlogits * weight;
  return r;
}

}  // namespace lmfcn::nn
