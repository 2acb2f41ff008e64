#include "lmfcn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace lmfcn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'L', 'M', 'F', 'C', 'N', 'C', 'K', 'P'};
// Guards allocations when a corrupt file announces an absurd element count.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void doubles(std::span<const double> v) {
    u64(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void matrix(const Matrix& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw CheckpointError("checkpoint: unexpected end of data");
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::uint64_t count() {
    const auto n = u64();
    if (n > kMaxElements) throw CheckpointError("checkpoint: corrupt element count");
    return n;
  }
  std::vector<double> doubles() {
    std::vector<double> v(count());
    raw(v.data(), v.size());
    return v;
  }
  Matrix matrix() {
    const auto rows = count();
    const auto cols = count();
    if (rows != 0 && cols > kMaxElements / rows) throw CheckpointError("checkpoint: corrupt matrix shape");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    raw(m.data(), static_cast<std::size_t>(m.size()));
    return m;
  }

 private:
  void raw(double* dst, std::size_t n) {
    in_.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) throw CheckpointError("checkpoint: unexpected end of data");
  }
  std::istream& in_;
};

void write_fcn(Writer& w, const FcnParams& p) {
  w.u64(p.in_channels);
  w.u64(p.latent_dim);
  w.u64(p.seed);
  for (const auto& b : p.blocks) {
    const Shape4& s = b.weight.shape();
    for (std::size_t d : {s.n, s.c, s.h, s.w}) w.u64(d);
    w.doubles(b.weight.data());
    w.doubles(b.bias);
    w.doubles(b.bn_scale);
    w.doubles(b.bn_shift);
    w.doubles(b.bn_running.mean);
    w.doubles(b.bn_running.var);
  }
}

FcnParams read_fcn(Reader& r) {
  FcnParams p;
  p.in_channels = r.count();
  p.latent_dim = r.count();
  p.seed = r.u64();
  std::size_t c_in = p.in_channels;
  const std::array<std::size_t, kFcnBlocks> widths = {kConv1Channels, kConv2Channels, p.latent_dim};
  for (std::size_t k = 0; k < kFcnBlocks; ++k) {
    auto& b = p.blocks[k];
    Shape4 s{r.count(), r.count(), r.count(), r.count()};
    if (s.n != widths[k] || s.c != c_in || s.h != 3 || s.w != 3) {
      throw CheckpointError("checkpoint: conv block " + std::to_string(k + 1) + " has an unexpected weight shape");
    }
    auto weights = r.doubles();
    if (weights.size() != s.size()) throw CheckpointError("checkpoint: conv weight size mismatch");
    b.weight = Tensor4(s, std::move(weights));
    b.bias = r.doubles();
    b.bn_scale = r.doubles();
    b.bn_shift = r.doubles();
    b.bn_running.mean = r.doubles();
    b.bn_running.var = r.doubles();
    for (const auto* v : {&b.bias, &b.bn_scale, &b.bn_shift, &b.bn_running.mean, &b.bn_running.var}) {
      if (v->size() != s.n) throw CheckpointError("checkpoint: per-channel vector length mismatch");
    }
    c_in = s.n;
  }
  return p;
}

void write_svm(Writer& w, const SvmModel& m) {
  w.doubles(m.alpha);
  for (int y : m.y) w.pod<std::int32_t>(y);
  w.f64(m.bias);
  w.f64(m.C);
  w.f64(m.gamma);
  w.u64(m.iterations);
  w.u64(m.support.size());
  for (std::size_t s : m.support) w.u64(s);
}

SvmModel read_svm(Reader& r) {
  SvmModel m;
  m.alpha = r.doubles();
  m.y.resize(m.alpha.size());
  for (int& y : m.y) {
    y = r.pod<std::int32_t>();
    if (y != 1 && y != -1) throw CheckpointError("checkpoint: SVM label must be +1 or -1");
  }
  m.bias = r.f64();
  m.C = r.f64();
  m.gamma = r.f64();
  m.iterations = r.u64();
  m.support.resize(r.count());
  for (std::size_t& s : m.support) {
    s = r.u64();
    if (s >= m.alpha.size()) throw CheckpointError("checkpoint: support index out of range");
  }
  return m;
}

void write_multiclass_svm(Writer& w, const MulticlassSvm& m) {
  w.u64(m.classes);
  w.f64(m.gamma);
  w.f64(m.C);
  w.matrix(m.train_latent);
  for (const auto& s : m.models) write_svm(w, s);
}

MulticlassSvm read_multiclass_svm(Reader& r) {
  MulticlassSvm m;
  m.classes = r.count();
  if (m.classes < 2 || m.classes > 1'000'000) throw CheckpointError("checkpoint: implausible class count");
  m.gamma = r.f64();
  m.C = r.f64();
  m.train_latent = r.matrix();
  for (std::size_t k = 0; k < m.classes; ++k) {
    m.models.push_back(read_svm(r));
    if (m.models.back().size() != static_cast<std::size_t>(m.train_latent.rows())) {
      throw CheckpointError("checkpoint: SVM size does not match stored latents");
    }
  }
  return m;
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::lmfcn: return "lmfcn";
    case ModelKind::lmfcn_multiclass: return "lmfcn-multiclass";
    case ModelKind::cnn_baseline: return "cnn-baseline";
    case ModelKind::lbp_baseline: return "lbp-baseline";
  }
  return "unknown";
}

ModelKind model_kind(const AnyModel& model) { return static_cast<ModelKind>(model.index() + 1); }

std::size_t model_classes(const AnyModel& model) {
  switch (model_kind(model)) {
    case ModelKind::lmfcn: return 2;
    case ModelKind::lmfcn_multiclass: return std::get<MulticlassLmfcnModel>(model).svm.classes;
    case ModelKind::cnn_baseline: return static_cast<std::size_t>(std::get<CnnBaselineModel>(model).fc_weight.rows());
    case ModelKind::lbp_baseline: return std::get<LbpBaselineModel>(model).svm.classes;
  }
  return 0;
}

void write_checkpoint(std::ostream& out, const AnyModel& model) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.pod<std::uint32_t>(kCheckpointVersion);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(model_kind(model)));
  switch (model_kind(model)) {
    case ModelKind::lmfcn: {
      const auto& m = std::get<LmfcnModel>(model);
      write_fcn(w, m.fcn);
      w.f64(m.classifier.gamma);
      w.matrix(m.classifier.train_latent);
      write_svm(w, m.classifier.svm);
      w.u64(m.best_epoch);
      break;
    }
    case ModelKind::lmfcn_multiclass: {
      const auto& m = std::get<MulticlassLmfcnModel>(model);
      w.u64(m.fcns.size());
      for (const auto& f : m.fcns) write_fcn(w, f);
      write_multiclass_svm(w, m.svm);
      break;
    }
    case ModelKind::cnn_baseline: {
      const auto& m = std::get<CnnBaselineModel>(model);
      write_fcn(w, m.fcn);
      w.matrix(m.fc_weight);
      w.doubles(m.fc_bias);
      w.u64(m.best_epoch);
      break;
    }
    case ModelKind::lbp_baseline:
      write_multiclass_svm(w, std::get<LbpBaselineModel>(model).svm);
      break;
  }
  if (!out) throw CheckpointError("checkpoint: write failed");
}

AnyModel read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw CheckpointError("checkpoint: not an lmfcn checkpoint (bad magic)");
  Reader r(in);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto kind = r.pod<std::uint32_t>();
  AnyModel model;
  switch (static_cast<ModelKind>(kind)) {
    case ModelKind::lmfcn: {
      LmfcnModel m;
      m.fcn = read_fcn(r);
      m.classifier.gamma = r.f64();
      m.classifier.train_latent = r.matrix();
      m.classifier.svm = read_svm(r);
      m.best_epoch = r.count();
      if (m.classifier.svm.size() != static_cast<std::size_t>(m.classifier.train_latent.rows()) ||
          m.classifier.train_latent.cols() != static_cast<Eigen::Index>(m.fcn.latent_dim)) {
        throw CheckpointError("checkpoint: classifier does not match the stored latents");
      }
      m.hp.latent_dim = m.fcn.latent_dim;
      m.hp.in_channels = m.fcn.in_channels;
      model = std::move(m);
      break;
    }
    case ModelKind::lmfcn_multiclass: {
      MulticlassLmfcnModel m;
      const auto n = r.count();
      Eigen::Index width = 0;
      for (std::uint64_t k = 0; k < n; ++k) {
        m.fcns.push_back(read_fcn(r));
        width += static_cast<Eigen::Index>(m.fcns.back().latent_dim);
      }
      m.svm = read_multiclass_svm(r);
      if (m.fcns.empty() || m.svm.train_latent.cols() != width) {
        throw CheckpointError("checkpoint: multiclass SVM does not match the concatenated latent width");
      }
      model = std::move(m);
      break;
    }
    case ModelKind::cnn_baseline: {
      CnnBaselineModel m;
      m.fcn = read_fcn(r);
      m.fc_weight = r.matrix();
      m.fc_bias = r.doubles();
      m.best_epoch = r.count();
      if (m.fc_weight.cols() != static_cast<Eigen::Index>(m.fcn.latent_dim) ||
          m.fc_bias.size() != static_cast<std::size_t>(m.fc_weight.rows())) {
        throw CheckpointError("checkpoint: classification head shape mismatch");
      }
      model = std::move(m);
      break;
    }
    case ModelKind::lbp_baseline: {
      LbpBaselineModel m;
      m.svm = read_multiclass_svm(r);
      model = std::move(m);
      break;
    }
    default:
      throw CheckpointError("checkpoint: unknown model kind " + std::to_string(kind));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes after model");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const AnyModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(out, model);
}

AnyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

std::vector<int> predict(const AnyModel& model, const Dataset& data) {
  return std::visit([&](const auto& m) { return predict(m, data); }, model);
}

}  // namespace lmfcn
