#include <doctest.h>

#include <cmath>
#include <random>

#include "dmgnn/classifier.hpp"
#include "dmgnn/error.hpp"
#include "support.hpp"

using namespace dmgnn;
using testing::random_matrix;

namespace {

ParamStore classifier_with(Matrix weight, Matrix bias) {
  ParamStore s;
  s.add("classifier.weight", std::move(weight));
  s.add("classifier.bias", std::move(bias));
  return s;
}

}  // namespace

TEST_CASE("isolated node keeps its own logits") {
  auto store = classifier_with(Matrix(1, 2, std::vector<double>{1.0, -1.0}), Matrix(1, 2));
  Matrix e(1, 1, 0.8);
  PropagationWeights w{SparseMatrix::from_rows(1, {{}}), false};
  auto with = propagate_predictions(store, e, &w, Activation::Softmax);
  auto without = propagate_predictions(store, e, nullptr, Activation::Softmax);
  CHECK(with == without);
}

TEST_CASE("mutual neighbors with equal logits double them") {
  auto store = classifier_with(Matrix(1, 2, std::vector<double>{1.0, -0.5}), Matrix(1, 2));
  Matrix e(2, 1, 0.6);
  PropagationWeights w{SparseMatrix::from_rows(2, {{{1, 1.0}}, {{0, 1.0}}}), false};
  for (auto phi : {Activation::Softmax, Activation::Sigmoid}) {
    auto probs = propagate_predictions(store, e, &w, phi);
    auto doubled = activation_apply(phi, Matrix(1, 2, std::vector<double>{1.2, -0.6}));
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(probs(0, c) == doctest::Approx(doubled(0, c)).epsilon(1e-15));
      CHECK(probs(1, c) == doctest::Approx(doubled(0, c)).epsilon(1e-15));
    }
  }
}

TEST_CASE("label propagation matches the dense transcription") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto net = testing::random_network(12, 2, 3, 0.3, rng);
    auto w = propagation_weights(compute_proximity(net, 2), std::nullopt, &*net.labels);
    auto store = classifier_with(random_matrix(4, 3, rng), random_matrix(1, 3, rng));
    Matrix e = random_matrix(12, 4, rng);
    auto probs = propagate_predictions(store, e, &w, Activation::Softmax);
    auto dense = w.rows.to_dense();
    const Matrix& W = store.value("classifier.weight");
    const Matrix& b = store.value("classifier.bias");
    std::vector<std::vector<double>> z(12, std::vector<double>(3));
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        z[i][c] = b(0, c);
        for (std::size_t a = 0; a < 4; ++a) z[i][c] += e(i, a) * W(a, c);
      }
    for (std::size_t i = 0; i < 12; ++i) {
      double s[3], total = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        s[c] = z[i][c];
        for (std::size_t j = 0; j < 12; ++j) s[c] += dense[i][j] * z[j][c];
      }
      for (double& v : s) total += std::exp(v);
      for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(probs(i, c) - std::exp(s[c]) / total) < 1e-12);
    }
  }
}

TEST_CASE("classification loss") {
  Matrix truth(2, 2, std::vector<double>{1, 0, 0, 1});
  CHECK(classification_loss(truth, truth, LabelMode::MultiClass) == doctest::Approx(0.0));
  CHECK(classification_loss(Matrix(2, 2, 0.5), truth, LabelMode::MultiClass) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Matrix unlabeled(2, 2, std::vector<double>{1, 0, 0, 0});
  CHECK_THROWS_AS(classification_loss(Matrix(2, 2, 0.5), unlabeled, LabelMode::MultiClass),
                  ValidationError);

  std::mt19937_64 rng(9);
  Matrix logits = random_matrix(6, 4, rng, -3, 3);
  Matrix p = activation_apply(Activation::Softmax, logits);
  Matrix q = activation_apply(Activation::Sigmoid, logits);
  Matrix onehot(6, 4), multi(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    onehot(i, i % 4) = 1;
    multi(i, i % 4) = 1;
    multi(i, (i + 1) % 4) = 1;
  }
  double ce = 0, bce = 0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 4; ++c) {
      ce -= onehot(i, c) * std::log(p(i, c));
      bce -= multi(i, c) * std::log(q(i, c)) + (1 - multi(i, c)) * std::log(1 - q(i, c));
    }
  CHECK(std::abs(classification_loss(p, onehot, LabelMode::MultiClass) - ce / 6) < 1e-12);
  CHECK(std::abs(classification_loss(q, multi, LabelMode::MultiLabel) - bce / 24) < 1e-12);
}

TEST_CASE("classifier gradients match finite differences") {
  std::mt19937_64 rng(13);
  auto net = testing::random_network(9, 2, 3, 0.35, rng, true);
  auto w = propagation_weights(compute_proximity(net, 2));
  Matrix truth = net.labels->to_dense();
  for (auto mode : {LabelMode::MultiClass, LabelMode::MultiLabel}) {
    Matrix y = truth;
    if (mode == LabelMode::MultiClass) {
      y = Matrix(9, 3);
      for (std::size_t i = 0; i < 9; ++i) y(i, i % 3) = 1;
    }
    const Activation phi = activation_for(mode);
    auto store = classifier_with(random_matrix(5, 3, rng), random_matrix(1, 3, rng));
    store.add("embeddings", random_matrix(9, 5, rng));
    const PropagationWeights* choices[] = {&w, nullptr};
    for (const PropagationWeights* wp : choices) {
      auto loss = [&](const ParamStore& s) {
        return classification_loss(
            propagate_predictions(s, s.value("embeddings"), wp, phi), y, mode);
      };
      const Matrix& e = store.value("embeddings");
      auto cache = classify_forward(store, e, wp, phi);
      Gradients grads;
      Matrix ge = classifier_backward(store, cache, e, wp, phi,
                                      cross_entropy_grad(cache.probs, y, mode), grads);
      grads["embeddings"] = ge;
      CHECK(finite_difference_check(loss, store, grads).max_rel_error < 1e-6);
    }
  }
}
