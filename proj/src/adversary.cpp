#include "dmgnn/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "dmgnn/error.hpp"

namespace dmgnn {

void init_discriminator(ParamStore& store, const DiscriminatorConfig& cfg, std::mt19937_64& rng) {
  if (cfg.input_dim() == 0) throw ValidationError("discriminator input width must be positive");
  std::vector<std::size_t> widths{cfg.input_dim()};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  init_mlp(store, "disc", widths, rng);
  init_dense(store, "disc.head", widths.back(), 2, rng);
}

Matrix conditioning_input(const Matrix& embeddings, const Matrix& probs) {
  if (embeddings.rows() != probs.rows())
    throw ValidationError("conditioning_input: row count mismatch");
  const std::size_t d = embeddings.cols();
  const std::size_t c = probs.cols();
  Matrix out(embeddings.rows(), d * c);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    auto e = embeddings.row(i);
    auto y = probs.row(i);
    auto dst = out.row(i);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t k = 0; k < c; ++k) dst[a * c + k] = e[a] * y[k];
  }
  return out;
}

void conditioning_backward(const Matrix& embeddings, const Matrix& probs,
                           const Matrix& grad_input, Matrix& grad_embeddings,
                           Matrix& grad_probs) {
  const std::size_t d = embeddings.cols();
  const std::size_t c = probs.cols();
  if (grad_input.rows() != embeddings.rows() || grad_input.cols() != d * c)
    throw ValidationError("conditioning_backward: gradient shape mismatch");
  grad_embeddings = Matrix(embeddings.rows(), d);
  grad_probs = Matrix(probs.rows(), c);
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    auto e = embeddings.row(i);
    auto y = probs.row(i);
    auto g = grad_input.row(i);
    auto ge = grad_embeddings.row(i);
    auto gy = grad_probs.row(i);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t k = 0; k < c; ++k) {
        ge[a] += g[a * c + k] * y[k];
        gy[k] += g[a * c + k] * e[a];
      }
  }
}

std::vector<double> discriminator_predict(const ParamStore& store, const DiscriminatorConfig& cfg,
                                          const Matrix& conditioned, DiscriminatorCache* cache) {
  if (conditioned.cols() != cfg.input_dim())
    throw ValidationError("discriminator: input width " + std::to_string(conditioned.cols()) +
                          " != " + std::to_string(cfg.input_dim()));
  DiscriminatorCache local;
  DiscriminatorCache& c = cache ? *cache : local;
  c.hidden = mlp_forward(mlp_layers(store, "disc", cfg.hidden.size()), conditioned, &c.mlp);
  c.probs = activation_apply(
      Activation::Softmax,
      affine(c.hidden, store.value("disc.head.weight"), store.value("disc.head.bias")));
  std::vector<double> d_hat(conditioned.rows());
  for (std::size_t i = 0; i < d_hat.size(); ++i) d_hat[i] = c.probs(i, 1);
  return d_hat;
}

double domain_loss(const std::vector<double>& d_hat, const std::vector<double>& d_true) {
  if (d_hat.size() != d_true.size()) throw ValidationError("domain_loss: size mismatch");
  if (d_hat.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < d_hat.size(); ++i) {
    const double p = std::clamp(d_hat[i], kProbEpsilon, 1.0 - kProbEpsilon);
    total -= d_true[i] * std::log(p) + (1.0 - d_true[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(d_hat.size());
}

AdversarialGradients adversarial_gradients(const ParamStore& store,
                                           const DiscriminatorConfig& cfg,
                                           const Matrix& embeddings, const Matrix& probs,
                                           const std::vector<double>& d_true, double lambda,
                                           bool reversal) {
  if (lambda < 0.0) throw ValidationError("adversarial_gradients: lambda must be >= 0");
  const Matrix input = conditioning_input(embeddings, probs);
  DiscriminatorCache cache;
  const auto d_hat = discriminator_predict(store, cfg, input, &cache);

  AdversarialGradients out;
  out.loss = domain_loss(d_hat, d_true);
  out.grl_scale = reversal ? -lambda : 1.0;

  // Softmax + cross-entropy: dL/dlogits = (p - onehot(d)) / n.
  const double inv_n = 1.0 / static_cast<double>(d_hat.size());
  Matrix g_logits(d_hat.size(), 2);
  for (std::size_t i = 0; i < d_hat.size(); ++i) {
    g_logits(i, 0) = (cache.probs(i, 0) - (1.0 - d_true[i])) * inv_n;
    g_logits(i, 1) = (cache.probs(i, 1) - d_true[i]) * inv_n;
  }
  accumulate(out.discriminator, "disc.head.weight", matmul_tn(cache.hidden, g_logits));
  accumulate(out.discriminator, "disc.head.bias", column_sums(g_logits));
  const Matrix g_hidden = matmul_nt(g_logits, store.value("disc.head.weight"));

  std::vector<LayerGrad> lg;
  const Matrix g_input =
      mlp_backward(mlp_layers(store, "disc", cfg.hidden.size()), cache.mlp, g_hidden, lg);
  for (std::size_t l = 0; l < lg.size(); ++l) {
    accumulate(out.discriminator, layer_prefix("disc", l) + ".weight", lg[l].weight);
    accumulate(out.discriminator, layer_prefix("disc", l) + ".bias", lg[l].bias);
  }

  conditioning_backward(embeddings, probs, g_input, out.grad_embeddings, out.grad_probs);
  if (out.grl_scale != 1.0) {
    out.grad_embeddings *= out.grl_scale;
    out.grad_probs *= out.grl_scale;
  }
  return out;
}

}  // namespace dmgnn
