#include "dmgnn/classifier.hpp"

#include "dmgnn/error.hpp"

namespace dmgnn {

void init_classifier(ParamStore& store, std::size_t embed_dim, std::size_t num_labels,
                     std::mt19937_64& rng) {
  init_dense(store, "classifier", embed_dim, num_labels, rng);
}

ClassifierCache classify_forward(const ParamStore& store, const Matrix& embeddings,
                                 const PropagationWeights* weights, Activation phi) {
  ClassifierCache c;
  c.logits = affine(embeddings, store.value("classifier.weight"), store.value("classifier.bias"));
  c.propagated = c.logits;
  if (weights) {
    if (weights->size() != embeddings.rows())
      throw ValidationError("classifier: weights size does not match batch");
    c.propagated += spmm(weights->rows, c.logits);
  }
  c.probs = activation_apply(phi, c.propagated);
  return c;
}

Matrix classifier_backward(const ParamStore& store, const ClassifierCache& cache,
                           const Matrix& embeddings, const PropagationWeights* weights,
                           Activation phi, const Matrix& grad_probs, Gradients& grads,
                           double scale) {
  const Matrix g_prop = activation_backward(phi, cache.probs, grad_probs);
  Matrix g_logits = g_prop;
  if (weights) g_logits += spmm_transposed(weights->rows, g_prop);
  accumulate(grads, "classifier.weight", matmul_tn(embeddings, g_logits), scale);
  accumulate(grads, "classifier.bias", column_sums(g_logits), scale);
  Matrix g_emb = matmul_nt(g_logits, store.value("classifier.weight"));
  if (scale != 1.0) g_emb *= scale;
  return g_emb;
}

double classification_loss(const Matrix& probs, const Matrix& truth, LabelMode mode) {
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    double s = 0.0;
    for (double v : truth.row(i)) s += v;
    if (s == 0.0) throw ValidationError("classification_loss: unlabeled source row " + std::to_string(i));
  }
  return cross_entropy(probs, truth, mode);
}

}  // namespace dmgnn
