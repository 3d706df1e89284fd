#include <doctest.h>

#include <cmath>
#include <random>

#include "dmgnn/adversary.hpp"
#include "dmgnn/error.hpp"
#include "support.hpp"

using namespace dmgnn;
using testing::random_matrix;

namespace {

DiscriminatorConfig small_config() { return {4, 3, {6, 5}}; }

Matrix random_probs(std::size_t n, std::size_t c, std::mt19937_64& rng) {
  return activation_apply(Activation::Softmax, random_matrix(n, c, rng, -2, 2));
}

}  // namespace

TEST_CASE("conditioning layout") {
  auto x = conditioning_input(Matrix::row_vector({1.0, 2.0}), Matrix::row_vector({0.5, 0.5}));
  CHECK(x == Matrix::row_vector({0.5, 0.5, 1.0, 1.0}));

  auto onehot = conditioning_input(Matrix::row_vector({3.0, -1.0, 2.0}),
                                   Matrix::row_vector({0.0, 1.0}));
  CHECK(onehot == Matrix::row_vector({0.0, 3.0, 0.0, -1.0, 0.0, 2.0}));

  std::mt19937_64 rng(1);
  CHECK(conditioning_input(Matrix(2, 3), random_probs(2, 4, rng)) == Matrix(2, 12));
}

TEST_CASE("zero discriminator is undecided") {
  ParamStore store;
  std::mt19937_64 rng(1);
  auto cfg = small_config();
  init_discriminator(store, cfg, rng);
  for (const auto& name : store.names()) {
    Matrix& m = store.value(name);
    m = Matrix(m.rows(), m.cols());
  }
  auto d = discriminator_predict(store, cfg, random_matrix(5, 12, rng));
  for (double v : d) CHECK(v == 0.5);
  CHECK(domain_loss(d, {0, 1, 0, 1, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("discriminator matches the layer-by-layer transcription") {
  ParamStore store;
  std::mt19937_64 rng(2);
  auto cfg = small_config();
  init_discriminator(store, cfg, rng);
  for (const auto& name : store.names())
    if (name.ends_with("bias")) store.value(name) = random_matrix(1, store.value(name).cols(), rng);
  Matrix in = random_matrix(4, 12, rng);
  auto got = discriminator_predict(store, cfg, in);

  auto layer = [&](const std::vector<double>& h, const std::string& p, bool relu) {
    const Matrix& W = store.value(p + ".weight");
    const Matrix& b = store.value(p + ".bias");
    std::vector<double> out(W.cols());
    for (std::size_t j = 0; j < W.cols(); ++j) {
      double s = b(0, j);
      for (std::size_t k = 0; k < h.size(); ++k) s += h[k] * W(k, j);
      out[j] = relu ? std::max(s, 0.0) : s;
    }
    return out;
  };
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<double> h(in.row(i).begin(), in.row(i).end());
    h = layer(h, "disc.layer0", true);
    h = layer(h, "disc.layer1", true);
    h = layer(h, "disc.head", false);
    const double target = std::exp(h[1]) / (std::exp(h[0]) + std::exp(h[1]));
    CHECK(std::abs(got[i] - target) < 1e-12);
  }
}

TEST_CASE("domain loss") {
  CHECK(domain_loss({0.0, 1.0}, {0.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-10));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::vector<double> d(20), t(20);
  double expect = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    d[i] = u(rng);
    t[i] = i % 2;
    expect -= t[i] * std::log(d[i]) + (1 - t[i]) * std::log(1 - d[i]);
  }
  CHECK(std::abs(domain_loss(d, t) - expect / 20) < 1e-12);
  CHECK_THROWS_AS(domain_loss(d, {1.0}), ValidationError);
}

TEST_CASE("adversarial gradients") {
  ParamStore store;
  std::mt19937_64 rng(4);
  auto cfg = small_config();
  init_discriminator(store, cfg, rng);
  store.add("e", random_matrix(6, 4, rng));
  store.add("p", random_probs(6, 3, rng));
  const std::vector<double> d_true{0, 0, 0, 1, 1, 1};
  auto loss = [&](const ParamStore& s) {
    return domain_loss(
        discriminator_predict(s, cfg, conditioning_input(s.value("e"), s.value("p"))), d_true);
  };

  SUBCASE("plain gradients match finite differences through both factors") {
    auto g = adversarial_gradients(store, cfg, store.value("e"), store.value("p"), d_true, 0.7,
                                   false);
    CHECK(g.loss == doctest::Approx(loss(store)).epsilon(1e-15));
    Gradients all = g.discriminator;
    all["e"] = g.grad_embeddings;
    all["p"] = g.grad_probs;
    CHECK(finite_difference_check(loss, store, all).max_rel_error < 1e-6);
  }
  SUBCASE("reversal scales the upstream gradients by -lambda") {
    const double lambda = 0.37;
    auto plain = adversarial_gradients(store, cfg, store.value("e"), store.value("p"), d_true,
                                       lambda, false);
    auto rev = adversarial_gradients(store, cfg, store.value("e"), store.value("p"), d_true,
                                     lambda, true);
    CHECK(rev.grl_scale == -lambda);
    for (std::size_t k = 0; k < plain.grad_embeddings.size(); ++k)
      CHECK(rev.grad_embeddings.data()[k] == -lambda * plain.grad_embeddings.data()[k]);
    for (std::size_t k = 0; k < plain.grad_probs.size(); ++k)
      CHECK(rev.grad_probs.data()[k] == -lambda * plain.grad_probs.data()[k]);
    // The discriminator itself always descends.
    CHECK(rev.discriminator == plain.discriminator);
  }
  SUBCASE("lambda zero cuts the upstream path") {
    auto g = adversarial_gradients(store, cfg, store.value("e"), store.value("p"), d_true, 0.0);
    for (double v : g.grad_embeddings.data()) CHECK(v == 0.0);
    for (double v : g.grad_probs.data()) CHECK(v == 0.0);
    CHECK_THROWS_AS(adversarial_gradients(store, cfg, store.value("e"), store.value("p"), d_true,
                                          -0.1),
                    ValidationError);
  }
}
