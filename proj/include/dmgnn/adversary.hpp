#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "dmgnn/numerics.hpp"

namespace dmgnn {

/// Conditional domain discriminator: an MLP over the flattened outer product
/// e ⊗ ŷ followed by a two-way softmax head (column 1 = "target").
/// Parameters: disc.layer<l>.{weight,bias}, disc.head.{weight,bias}.
struct DiscriminatorConfig {
  std::size_t embed_dim = 128;
  std::size_t num_labels = 0;
  std::vector<std::size_t> hidden{128, 128};

  std::size_t input_dim() const { return embed_dim * num_labels; }
};

void init_discriminator(ParamStore& store, const DiscriminatorConfig& cfg, std::mt19937_64& rng);

/// Row-wise flattened outer product, column a * C + c holds e_a * ŷ_c.
Matrix conditioning_input(const Matrix& embeddings, const Matrix& probs);

/// Splits dL/d(e ⊗ ŷ) into dL/de and dL/dŷ.
void conditioning_backward(const Matrix& embeddings, const Matrix& probs,
                           const Matrix& grad_input, Matrix& grad_embeddings,
                           Matrix& grad_probs);

struct DiscriminatorCache {
  MlpCache mlp;
  Matrix hidden;  // output of the last hidden layer
  Matrix probs;   // n x 2 softmax
};

/// Probability that each row comes from the target network.
std::vector<double> discriminator_predict(const ParamStore& store, const DiscriminatorConfig& cfg,
                                          const Matrix& conditioned,
                                          DiscriminatorCache* cache = nullptr);

/// Mean binary cross-entropy; d_true holds 0 for source rows, 1 for target.
double domain_loss(const std::vector<double>& d_hat, const std::vector<double>& d_true);

struct AdversarialGradients {
  double loss = 0.0;
  Gradients discriminator;  // +dL_D/dθ_D, the discriminator minimizes L_D
  Matrix grad_embeddings;   // grl_scale * dL_D/de
  Matrix grad_probs;        // grl_scale * dL_D/dŷ
  double grl_scale = 1.0;
};

/// Forward and backward through the discriminator for one batch. With
/// `reversal` on, the gradients handed back to the encoder and classifier
/// are multiplied by -lambda (gradient reversal); with it off they are the
/// plain dL_D gradients.
AdversarialGradients adversarial_gradients(const ParamStore& store,
                                           const DiscriminatorConfig& cfg,
                                           const Matrix& embeddings, const Matrix& probs,
                                           const std::vector<double>& d_true, double lambda,
                                           bool reversal = true);

}  // namespace dmgnn
