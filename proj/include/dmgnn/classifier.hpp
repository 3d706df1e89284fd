#pragma once

#include <cstddef>
#include <random>

#include "dmgnn/numerics.hpp"
#include "dmgnn/proximity.hpp"

namespace dmgnn {

// Label-propagation node classifier. Each node's logits z_i = e_i W_y + b_y
// are refined by adding the proximity-weighted logits of its neighbors
// before the output activation:  ŷ_i = φ(z_i + Σ_j w_ij z_j).
// Parameters: classifier.{weight,bias}.

void init_classifier(ParamStore& store, std::size_t embed_dim, std::size_t num_labels,
                     std::mt19937_64& rng);

struct ClassifierCache {
  Matrix logits;      // z
  Matrix propagated;  // z + W z
  Matrix probs;       // φ(z + W z)
};

/// `weights == nullptr` disables the neighbor term.
ClassifierCache classify_forward(const ParamStore& store, const Matrix& embeddings,
                                 const PropagationWeights* weights, Activation phi);

inline Matrix propagate_predictions(const ParamStore& store, const Matrix& embeddings,
                                    const PropagationWeights* weights, Activation phi) {
  return classify_forward(store, embeddings, weights, phi).probs;
}

/// Backward from dL/dŷ. Accumulates scale * parameter gradients and returns
/// scale * dL/dE.
Matrix classifier_backward(const ParamStore& store, const ClassifierCache& cache,
                           const Matrix& embeddings, const PropagationWeights* weights,
                           Activation phi, const Matrix& grad_probs, Gradients& grads,
                           double scale = 1.0);

/// Cross-entropy of source predictions; every truth row must carry a label.
double classification_loss(const Matrix& probs, const Matrix& truth, LabelMode mode);

}  // namespace dmgnn
