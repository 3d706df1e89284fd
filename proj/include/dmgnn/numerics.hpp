#pragma once

// Dense kernels shared by the encoder, classifier and discriminator:
// row-major matrices, MLP forward/backward, output activations,
// cross-entropy, SGD with momentum and a finite-difference checker.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dmgnn/sparse.hpp"

namespace dmgnn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix row_vector(std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a bᵀ
Matrix column_sums(const Matrix& a);                 // 1 x cols
Matrix hconcat(const Matrix& left, const Matrix& right);
Matrix vconcat(const Matrix& top, const Matrix& bottom);
Matrix slice_rows(const Matrix& a, std::size_t begin, std::size_t end);
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows);

/// Dense copy of the listed rows of a sparse matrix.
Matrix densify_rows(const SparseMatrix& s, std::span<const NodeId> rows);
/// s * d for sparse s.
Matrix spmm(const SparseMatrix& s, const Matrix& d);
/// sᵀ * d for sparse s.
Matrix spmm_transposed(const SparseMatrix& s, const Matrix& d);

/// Throws NumericError naming `what` if any value is NaN or Inf.
void require_finite(const Matrix& m, const std::string& what);

struct DenseLayer {
  const Matrix* weight;  // in x out
  const Matrix* bias;    // 1 x out
};

struct MlpCache {
  std::vector<Matrix> inputs;           // input to each layer
  std::vector<Matrix> pre_activations;  // affine output of each layer
};

/// Chained affine + ReLU layers. `cache`, when given, receives what
/// mlp_backward needs.
Matrix mlp_forward(std::span<const DenseLayer> layers, const Matrix& input,
                   MlpCache* cache = nullptr);

struct LayerGrad {
  Matrix weight;
  Matrix bias;
};

/// Backward through mlp_forward. Writes one LayerGrad per layer and returns
/// the gradient with respect to the MLP input.
Matrix mlp_backward(std::span<const DenseLayer> layers, const MlpCache& cache,
                    const Matrix& grad_output, std::vector<LayerGrad>& grads);

/// Single affine layer without activation.
Matrix affine(const Matrix& input, const Matrix& weight, const Matrix& bias);

enum class Activation { Softmax, Sigmoid };
enum class LabelMode { MultiClass, MultiLabel };

inline Activation activation_for(LabelMode mode) {
  return mode == LabelMode::MultiClass ? Activation::Softmax : Activation::Sigmoid;
}

Matrix activation_apply(Activation kind, const Matrix& logits);

/// Given probabilities p = activation(z) and dL/dp, returns dL/dz.
Matrix activation_backward(Activation kind, const Matrix& probs, const Matrix& grad_probs);

inline constexpr double kProbEpsilon = 1e-12;

/// Mean cross-entropy. Multi-class: mean over rows of -Σ y log p.
/// Multi-label: mean over rows and labels of binary cross-entropy.
double cross_entropy(const Matrix& pred, const Matrix& truth, LabelMode mode);

/// dL/dpred of cross_entropy (zero where the clamp is active).
Matrix cross_entropy_grad(const Matrix& pred, const Matrix& truth, LabelMode mode);

/// Named trainable tensors with matching momentum buffers. Iteration order
/// is the lexicographic order of names.
class ParamStore {
 public:
  void add(const std::string& name, Matrix value);
  bool contains(const std::string& name) const { return values_.count(name) != 0; }

  Matrix& value(const std::string& name);
  const Matrix& value(const std::string& name) const;
  Matrix& velocity(const std::string& name);
  const Matrix& velocity(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  const std::map<std::string, Matrix>& values() const { return values_; }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::map<std::string, Matrix> values_;
  std::map<std::string, Matrix> velocities_;
};

using Gradients = std::map<std::string, Matrix>;

/// Adds `scale * delta` into grads[name], creating the entry if missing.
void accumulate(Gradients& grads, const std::string& name, const Matrix& delta,
                double scale = 1.0);

/// v <- momentum v + g ; theta <- theta - lr v. Parameters without a
/// gradient entry are left untouched.
void sgd_momentum_step(ParamStore& store, const Gradients& grads, double lr,
                       double momentum);

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
Matrix scaled_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

/// Adds `prefix.layer<l>.weight/bias` for an MLP with the given widths.
void init_mlp(ParamStore& store, const std::string& prefix,
              std::span<const std::size_t> widths, std::mt19937_64& rng);
void init_dense(ParamStore& store, const std::string& prefix, std::size_t in,
                std::size_t out, std::mt19937_64& rng);

std::string layer_prefix(const std::string& prefix, std::size_t layer);
std::vector<DenseLayer> mlp_layers(const ParamStore& store, const std::string& prefix,
                                   std::size_t count);
DenseLayer dense_layer(const ParamStore& store, const std::string& prefix);

struct FiniteDifferenceReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
};

struct FiniteDifferenceOptions {
  double epsilon = 1e-5;
  /// Coordinates sampled per parameter tensor; 0 checks all of them.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  /// Restrict to parameters whose name starts with one of these prefixes.
  std::vector<std::string> prefixes;
};

/// Central differences of `loss` against `analytic`, relative error
/// |fd - an| / max(1, |fd|, |an|). Throws ValidationError when `loss` is not
/// deterministic.
FiniteDifferenceReport finite_difference_check(
    const std::function<double(const ParamStore&)>& loss, const ParamStore& store,
    const Gradients& analytic, const FiniteDifferenceOptions& options = {});

}  // namespace dmgnn
