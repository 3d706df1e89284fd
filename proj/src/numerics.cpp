#include "dmgnn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dmgnn/error.hpp"

namespace dmgnn {

namespace {

void require_shape(bool ok, const char* what) {
  if (!ok) throw ValidationError(std::string("shape mismatch: ") + what);
}

double clamp_prob(double p) {
  return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

bool clamp_active(double p) { return p < kProbEpsilon || p > 1.0 - kProbEpsilon; }

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_shape(data_.size() == rows * cols, "matrix data size");
}

Matrix Matrix::row_vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Matrix(1, n, std::move(values));
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require_shape(same_shape(o), "matrix +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* crow = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix column_sums(const Matrix& a) {
  Matrix s(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(0, j) += a(i, j);
  return s;
}

Matrix hconcat(const Matrix& left, const Matrix& right) {
  require_shape(left.rows() == right.rows(), "hconcat");
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t i = 0; i < left.rows(); ++i) {
    auto dst = out.row(i);
    std::copy(left.row(i).begin(), left.row(i).end(), dst.begin());
    std::copy(right.row(i).begin(), right.row(i).end(), dst.begin() + left.cols());
  }
  return out;
}

Matrix vconcat(const Matrix& top, const Matrix& bottom) {
  require_shape(top.cols() == bottom.cols() || top.empty() || bottom.empty(), "vconcat");
  const std::size_t cols = top.empty() ? bottom.cols() : top.cols();
  std::vector<double> data;
  data.reserve(top.size() + bottom.size());
  data.insert(data.end(), top.data().begin(), top.data().end());
  data.insert(data.end(), bottom.data().begin(), bottom.data().end());
  return Matrix(top.rows() + bottom.rows(), cols, std::move(data));
}

Matrix slice_rows(const Matrix& a, std::size_t begin, std::size_t end) {
  require_shape(begin <= end && end <= a.rows(), "slice_rows");
  std::vector<double> data(a.data().begin() + static_cast<std::ptrdiff_t>(begin * a.cols()),
                           a.data().begin() + static_cast<std::ptrdiff_t>(end * a.cols()));
  return Matrix(end - begin, a.cols(), std::move(data));
}

Matrix densify_rows(const SparseMatrix& s, std::span<const NodeId> rows) {
  Matrix out(rows.size(), s.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto idx = s.row_indices(rows[i]);
    auto val = s.row_values(rows[i]);
    for (std::size_t p = 0; p < idx.size(); ++p) out(i, idx[p]) = val[p];
  }
  return out;
}

Matrix spmm(const SparseMatrix& s, const Matrix& d) {
  require_shape(s.cols() == d.rows(), "spmm");
  Matrix out(s.rows(), d.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto idx = s.row_indices(i);
    auto val = s.row_values(i);
    double* dst = out.row(i).data();
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const double* src = d.row(idx[p]).data();
      for (std::size_t j = 0; j < d.cols(); ++j) dst[j] += val[p] * src[j];
    }
  }
  return out;
}

Matrix spmm_transposed(const SparseMatrix& s, const Matrix& d) {
  require_shape(s.rows() == d.rows(), "spmm_transposed");
  Matrix out(s.cols(), d.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    auto idx = s.row_indices(i);
    auto val = s.row_values(i);
    const double* src = d.row(i).data();
    for (std::size_t p = 0; p < idx.size(); ++p) {
      double* dst = out.row(idx[p]).data();
      for (std::size_t j = 0; j < d.cols(); ++j) dst[j] += val[p] * src[j];
    }
  }
  return out;
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = a.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.all_finite()) throw NumericError("non-finite values in " + what);
}

Matrix affine(const Matrix& input, const Matrix& weight, const Matrix& bias) {
  require_shape(bias.rows() == 1 && bias.cols() == weight.cols(), "bias");
  Matrix out = matmul(input, weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias(0, j);
  }
  return out;
}

Matrix mlp_forward(std::span<const DenseLayer> layers, const Matrix& input,
                   MlpCache* cache) {
  if (cache) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Matrix h = input;
  for (const auto& layer : layers) {
    Matrix z = affine(h, *layer.weight, *layer.bias);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre_activations.push_back(z);
    }
    for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
    h = std::move(z);
  }
  return h;
}

Matrix mlp_backward(std::span<const DenseLayer> layers, const MlpCache& cache,
                    const Matrix& grad_output, std::vector<LayerGrad>& grads) {
  require_shape(cache.inputs.size() == layers.size(), "mlp cache");
  grads.resize(layers.size());
  Matrix g = grad_output;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Matrix& z = cache.pre_activations[l];
    require_shape(g.same_shape(z), "mlp backward");
    for (std::size_t k = 0; k < g.size(); ++k)
      if (z.data()[k] <= 0.0) g.data()[k] = 0.0;
    grads[l].weight = matmul_tn(cache.inputs[l], g);
    grads[l].bias = column_sums(g);
    g = matmul_nt(g, *layers[l].weight);
  }
  return g;
}

Matrix activation_apply(Activation kind, const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  if (kind == Activation::Sigmoid) {
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const double z = logits.data()[k];
      // Split by sign so exp never overflows.
      out.data()[k] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                               : std::exp(z) / (1.0 + std::exp(z));
    }
    return out;
  }
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto in = logits.row(i);
    auto dst = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      dst[j] = std::exp(in[j] - mx);
      total += dst[j];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

Matrix activation_backward(Activation kind, const Matrix& probs, const Matrix& grad_probs) {
  require_shape(probs.same_shape(grad_probs), "activation backward");
  Matrix out(probs.rows(), probs.cols());
  if (kind == Activation::Sigmoid) {
    for (std::size_t k = 0; k < probs.size(); ++k) {
      const double p = probs.data()[k];
      out.data()[k] = grad_probs.data()[k] * p * (1.0 - p);
    }
    return out;
  }
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto p = probs.row(i);
    auto g = grad_probs.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * g[j];
    auto dst = out.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) dst[j] = p[j] * (g[j] - dot);
  }
  return out;
}

double cross_entropy(const Matrix& pred, const Matrix& truth, LabelMode mode) {
  require_shape(pred.same_shape(truth), "cross_entropy");
  if (pred.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double p = clamp_prob(pred.data()[k]);
    const double y = truth.data()[k];
    if (mode == LabelMode::MultiClass) {
      total -= y * std::log(p);
    } else {
      total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  }
  const double denom = mode == LabelMode::MultiClass
                           ? static_cast<double>(pred.rows())
                           : static_cast<double>(pred.size());
  return total / denom;
}

Matrix cross_entropy_grad(const Matrix& pred, const Matrix& truth, LabelMode mode) {
  require_shape(pred.same_shape(truth), "cross_entropy_grad");
  Matrix g(pred.rows(), pred.cols());
  if (pred.rows() == 0) return g;
  const double denom = mode == LabelMode::MultiClass
                           ? static_cast<double>(pred.rows())
                           : static_cast<double>(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double p = pred.data()[k];
    if (clamp_active(p)) continue;
    const double y = truth.data()[k];
    double d = -y / p;
    if (mode == LabelMode::MultiLabel) d += (1.0 - y) / (1.0 - p);
    g.data()[k] = d / denom;
  }
  return g;
}

void ParamStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw ValidationError("duplicate parameter " + name);
  velocities_[name] = Matrix(value.rows(), value.cols());
  values_[name] = std::move(value);
}

Matrix& ParamStore::value(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("unknown parameter " + name);
  return it->second;
}

const Matrix& ParamStore::value(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ValidationError("unknown parameter " + name);
  return it->second;
}

Matrix& ParamStore::velocity(const std::string& name) {
  auto it = velocities_.find(name);
  if (it == velocities_.end()) throw ValidationError("unknown parameter " + name);
  return it->second;
}

const Matrix& ParamStore::velocity(const std::string& name) const {
  auto it = velocities_.find(name);
  if (it == velocities_.end()) throw ValidationError("unknown parameter " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : values_) n += v.size();
  return n;
}

void accumulate(Gradients& grads, const std::string& name, const Matrix& delta,
                double scale) {
  auto it = grads.find(name);
  if (it == grads.end()) {
    Matrix m = delta;
    if (scale != 1.0) m *= scale;
    grads.emplace(name, std::move(m));
    return;
  }
  require_shape(it->second.same_shape(delta), "gradient accumulate");
  auto& dst = it->second.data();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * delta.data()[k];
}

void sgd_momentum_step(ParamStore& store, const Gradients& grads, double lr,
                       double momentum) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) throw NumericError("non-finite gradient for parameter " + name);
    Matrix& theta = store.value(name);
    Matrix& v = store.velocity(name);
    require_shape(theta.same_shape(g), "gradient vs parameter");
    for (std::size_t k = 0; k < g.size(); ++k) {
      v.data()[k] = momentum * v.data()[k] + g.data()[k];
      theta.data()[k] -= lr * v.data()[k];
    }
  }
}

Matrix scaled_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(fan_in, fan_out);
  for (double& v : w.data()) v = dist(rng);
  return w;
}

std::string layer_prefix(const std::string& prefix, std::size_t layer) {
  return prefix + ".layer" + std::to_string(layer);
}

void init_dense(ParamStore& store, const std::string& prefix, std::size_t in,
                std::size_t out, std::mt19937_64& rng) {
  store.add(prefix + ".weight", scaled_uniform(in, out, rng));
  store.add(prefix + ".bias", Matrix(1, out));
}

void init_mlp(ParamStore& store, const std::string& prefix,
              std::span<const std::size_t> widths, std::mt19937_64& rng) {
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    init_dense(store, layer_prefix(prefix, l), widths[l], widths[l + 1], rng);
}

DenseLayer dense_layer(const ParamStore& store, const std::string& prefix) {
  return {&store.value(prefix + ".weight"), &store.value(prefix + ".bias")};
}

std::vector<DenseLayer> mlp_layers(const ParamStore& store, const std::string& prefix,
                                   std::size_t count) {
  std::vector<DenseLayer> layers;
  layers.reserve(count);
  for (std::size_t l = 0; l < count; ++l)
    layers.push_back(dense_layer(store, layer_prefix(prefix, l)));
  return layers;
}

FiniteDifferenceReport finite_difference_check(
    const std::function<double(const ParamStore&)>& loss, const ParamStore& store,
    const Gradients& analytic, const FiniteDifferenceOptions& options) {
  const double base = loss(store);
  if (loss(store) != base)
    throw ValidationError("finite_difference_check: loss function is not deterministic");

  FiniteDifferenceReport report;
  ParamStore work = store;
  std::mt19937_64 rng(options.seed);
  for (const auto& name : store.names()) {
    if (!options.prefixes.empty() &&
        std::none_of(options.prefixes.begin(), options.prefixes.end(),
                     [&](const std::string& p) { return name.rfind(p, 0) == 0; }))
      continue;
    Matrix& theta = work.value(name);
    const auto git = analytic.find(name);
    std::vector<std::size_t> coords(theta.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param != 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t k : coords) {
      const double orig = theta.data()[k];
      theta.data()[k] = orig + options.epsilon;
      const double up = loss(work);
      theta.data()[k] = orig - options.epsilon;
      const double down = loss(work);
      theta.data()[k] = orig;
      const double fd = (up - down) / (2.0 * options.epsilon);
      const double an = git == analytic.end() ? 0.0 : git->second.data()[k];
      const double err =
          std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
      ++report.coordinates_checked;
      if (report.worst_param.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = name;
        report.worst_index = k;
      }
    }
  }
  return report;
}

}  // namespace dmgnn
