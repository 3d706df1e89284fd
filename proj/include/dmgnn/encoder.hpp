#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "dmgnn/numerics.hpp"
#include "dmgnn/proximity.hpp"

namespace dmgnn {

/// Dual feature extractor encoder. FE1 maps a node's own attributes, FE2
/// maps its aggregated neighbor attributes; both share `hidden` widths but
/// not weights. The deepest layers are concatenated and passed through one
/// ReLU layer of width `embed_dim`.
///
/// Parameter names: fe1.layer<l>.{weight,bias}, fe2.layer<l>.{weight,bias},
/// combiner.{weight,bias}.
struct EncoderConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{512, 128};
  std::size_t embed_dim = 128;
};

/// Replaces a branch's output with zeros; its parameters get no gradient.
struct EncoderAblation {
  bool no_fe1 = false;
  bool no_fe2 = false;
};

void init_encoder(ParamStore& store, const EncoderConfig& cfg, std::mt19937_64& rng);

/// n_i = Σ_j w_ij x_j over the whole graph; a node with an empty weight row
/// gets its own attributes.
SparseMatrix aggregate_neighbor_attributes(const SparseMatrix& attrs,
                                           const PropagationWeights& weights);

struct EncoderCache {
  MlpCache fe1;
  MlpCache fe2;
  Matrix combined;  // [h1 || h2]
  Matrix pre;       // combined W_c + b_c
  Matrix embeddings;
};

EncoderCache encode_forward(const ParamStore& store, const EncoderConfig& cfg,
                            const Matrix& attrs, const Matrix& neighbor_attrs,
                            EncoderAblation ablation = {});

inline Matrix encode(const ParamStore& store, const EncoderConfig& cfg, const Matrix& attrs,
                     const Matrix& neighbor_attrs, EncoderAblation ablation = {}) {
  return encode_forward(store, cfg, attrs, neighbor_attrs, ablation).embeddings;
}

/// Accumulates scale * dL/dθ for every encoder parameter into `grads`.
void encoder_backward(const ParamStore& store, const EncoderConfig& cfg,
                      const EncoderCache& cache, const Matrix& grad_embeddings,
                      Gradients& grads, EncoderAblation ablation = {}, double scale = 1.0);

/// (1/n) Σ_i ||e_i - Σ_j w_ij e_j||² with empty rows contributing zero.
/// `grad`, when given, receives dL/dE.
double propagation_residual_loss(const Matrix& embeddings, const PropagationWeights& weights,
                                 Matrix* grad = nullptr);

/// Source term (label-masked weights) plus target term (plain weights).
double feature_propagation_loss(const Matrix& source_embeddings,
                                const PropagationWeights& source_weights,
                                const Matrix& target_embeddings,
                                const PropagationWeights& target_weights,
                                Matrix* grad_source = nullptr, Matrix* grad_target = nullptr);

}  // namespace dmgnn
