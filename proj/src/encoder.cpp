#include "dmgnn/encoder.hpp"

#include "dmgnn/error.hpp"

namespace dmgnn {

namespace {

std::vector<std::size_t> branch_widths(const EncoderConfig& cfg) {
  std::vector<std::size_t> w{cfg.input_dim};
  w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
  return w;
}

std::size_t branch_out(const EncoderConfig& cfg) {
  return cfg.hidden.empty() ? cfg.input_dim : cfg.hidden.back();
}

void add_layer_grads(Gradients& grads, const std::string& prefix,
                     const std::vector<LayerGrad>& lg, double scale) {
  for (std::size_t l = 0; l < lg.size(); ++l) {
    accumulate(grads, layer_prefix(prefix, l) + ".weight", lg[l].weight, scale);
    accumulate(grads, layer_prefix(prefix, l) + ".bias", lg[l].bias, scale);
  }
}

}  // namespace

void init_encoder(ParamStore& store, const EncoderConfig& cfg, std::mt19937_64& rng) {
  if (cfg.input_dim == 0 || cfg.embed_dim == 0)
    throw ValidationError("encoder dimensions must be positive");
  const auto widths = branch_widths(cfg);
  init_mlp(store, "fe1", widths, rng);
  init_mlp(store, "fe2", widths, rng);
  init_dense(store, "combiner", 2 * branch_out(cfg), cfg.embed_dim, rng);
}

SparseMatrix aggregate_neighbor_attributes(const SparseMatrix& attrs,
                                           const PropagationWeights& weights) {
  if (weights.size() != attrs.rows())
    throw ValidationError("aggregate_neighbor_attributes: weights do not cover the graph");
  const SparseMatrix mixed = weights.rows.multiply(attrs);
  std::vector<std::vector<SparseEntry>> rows(attrs.rows());
  for (std::size_t i = 0; i < attrs.rows(); ++i) {
    const SparseMatrix& src = weights.row_empty(i) ? attrs : mixed;
    auto idx = src.row_indices(i);
    auto val = src.row_values(i);
    rows[i].reserve(idx.size());
    for (std::size_t p = 0; p < idx.size(); ++p) rows[i].push_back({idx[p], val[p]});
  }
  return SparseMatrix::from_rows(attrs.cols(), std::move(rows));
}

EncoderCache encode_forward(const ParamStore& store, const EncoderConfig& cfg,
                            const Matrix& attrs, const Matrix& neighbor_attrs,
                            EncoderAblation ablation) {
  if (attrs.cols() != cfg.input_dim || neighbor_attrs.cols() != cfg.input_dim ||
      attrs.rows() != neighbor_attrs.rows())
    throw ValidationError("encode: input shape mismatch");
  const std::size_t n = attrs.rows();
  const auto fe1 = mlp_layers(store, "fe1", cfg.hidden.size());
  const auto fe2 = mlp_layers(store, "fe2", cfg.hidden.size());

  EncoderCache cache;
  Matrix h1 = ablation.no_fe1 ? Matrix(n, branch_out(cfg)) : mlp_forward(fe1, attrs, &cache.fe1);
  Matrix h2 = ablation.no_fe2 ? Matrix(n, branch_out(cfg))
                              : mlp_forward(fe2, neighbor_attrs, &cache.fe2);
  cache.combined = hconcat(h1, h2);
  cache.pre = affine(cache.combined, store.value("combiner.weight"), store.value("combiner.bias"));
  cache.embeddings = cache.pre;
  for (double& v : cache.embeddings.data()) v = v > 0.0 ? v : 0.0;
  return cache;
}

void encoder_backward(const ParamStore& store, const EncoderConfig& cfg,
                      const EncoderCache& cache, const Matrix& grad_embeddings,
                      Gradients& grads, EncoderAblation ablation, double scale) {
  Matrix g = grad_embeddings;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (cache.pre.data()[k] <= 0.0) g.data()[k] = 0.0;
  accumulate(grads, "combiner.weight", matmul_tn(cache.combined, g), scale);
  accumulate(grads, "combiner.bias", column_sums(g), scale);

  const Matrix g_combined = matmul_nt(g, store.value("combiner.weight"));
  const std::size_t width = branch_out(cfg);
  std::vector<LayerGrad> lg;
  if (!ablation.no_fe1) {
    Matrix g1(g_combined.rows(), width);
    for (std::size_t i = 0; i < g1.rows(); ++i)
      for (std::size_t j = 0; j < width; ++j) g1(i, j) = g_combined(i, j);
    mlp_backward(mlp_layers(store, "fe1", cfg.hidden.size()), cache.fe1, g1, lg);
    add_layer_grads(grads, "fe1", lg, scale);
  }
  if (!ablation.no_fe2) {
    Matrix g2(g_combined.rows(), width);
    for (std::size_t i = 0; i < g2.rows(); ++i)
      for (std::size_t j = 0; j < width; ++j) g2(i, j) = g_combined(i, width + j);
    mlp_backward(mlp_layers(store, "fe2", cfg.hidden.size()), cache.fe2, g2, lg);
    add_layer_grads(grads, "fe2", lg, scale);
  }
}

double propagation_residual_loss(const Matrix& embeddings, const PropagationWeights& weights,
                                 Matrix* grad) {
  const std::size_t n = embeddings.rows();
  if (weights.size() != n) throw ValidationError("propagation loss: weights size mismatch");
  if (grad) *grad = Matrix(n, embeddings.cols());
  if (n == 0) return 0.0;

  Matrix residual = spmm(weights.rows, embeddings);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto r = residual.row(i);
    if (weights.row_empty(i)) {
      std::fill(r.begin(), r.end(), 0.0);
      continue;
    }
    auto e = embeddings.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      r[j] = e[j] - r[j];
      total += r[j] * r[j];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  if (grad) {
    // dL/dE = (2/n) (R - Wᵀ R)
    Matrix back = spmm_transposed(weights.rows, residual);
    for (std::size_t k = 0; k < grad->size(); ++k)
      grad->data()[k] = 2.0 * inv_n * (residual.data()[k] - back.data()[k]);
  }
  return total * inv_n;
}

double feature_propagation_loss(const Matrix& source_embeddings,
                                const PropagationWeights& source_weights,
                                const Matrix& target_embeddings,
                                const PropagationWeights& target_weights, Matrix* grad_source,
                                Matrix* grad_target) {
  return propagation_residual_loss(source_embeddings, source_weights, grad_source) +
         propagation_residual_loss(target_embeddings, target_weights, grad_target);
}

}  // namespace dmgnn
