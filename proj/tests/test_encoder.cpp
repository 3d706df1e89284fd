#include <doctest.h>

#include <random>

#include "dmgnn/encoder.hpp"
#include "dmgnn/error.hpp"
#include "support.hpp"

using namespace dmgnn;
using testing::random_matrix;

namespace {

PropagationWeights weights_from(std::size_t n, std::vector<std::vector<SparseEntry>> rows) {
  return {SparseMatrix::from_rows(n, std::move(rows)), false};
}

EncoderConfig small_config() { return {6, {5, 4}, 3}; }

}  // namespace

TEST_CASE("neighbor aggregation") {
  auto attrs = SparseMatrix::from_rows(2, {{{0, 1.0}}, {{1, 3.0}}, {{0, 2.0}, {1, 2.0}}});
  // Node 0 sees only node 1; node 1 averages 0 and 2; node 2 has no row.
  auto w = weights_from(3, {{{1, 1.0}}, {{0, 0.5}, {2, 0.5}}, {}});
  auto n = aggregate_neighbor_attributes(attrs, w);
  CHECK(n.at(0, 0) == 0.0);
  CHECK(n.at(0, 1) == 3.0);
  CHECK(n.at(1, 0) == 1.5);
  CHECK(n.at(1, 1) == 1.0);
  CHECK(n.at(2, 0) == 2.0);
  CHECK(n.at(2, 1) == 2.0);
  CHECK_THROWS_AS(aggregate_neighbor_attributes(attrs, weights_from(2, {{}, {}})), ValidationError);
}

TEST_CASE("encoder is a function of its inputs") {
  std::mt19937_64 rng(1);
  ParamStore store;
  auto cfg = small_config();
  init_encoder(store, cfg, rng);
  Matrix x = random_matrix(4, 6, rng, 0.0, 1.0), nb = random_matrix(4, 6, rng, 0.0, 1.0);
  for (std::size_t j = 0; j < 6; ++j) {
    x(3, j) = x(0, j);
    nb(3, j) = nb(0, j);
  }
  Matrix e = encode(store, cfg, x, nb);
  CHECK(e.rows() == 4);
  CHECK(e.cols() == 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(e(3, j) == e(0, j));
  for (double v : e.data()) CHECK(v >= 0.0);

  Matrix zero(4, 6);
  CHECK(encode(store, cfg, zero, zero) == Matrix(4, 3));
}

TEST_CASE("ablated branches ignore their input") {
  std::mt19937_64 rng(2);
  ParamStore store;
  auto cfg = small_config();
  init_encoder(store, cfg, rng);
  Matrix x = random_matrix(3, 6, rng, 0.0, 1.0), nb = random_matrix(3, 6, rng, 0.0, 1.0);
  Matrix other = random_matrix(3, 6, rng, 0.0, 1.0);
  CHECK(encode(store, cfg, x, nb, {true, false}) == encode(store, cfg, other, nb, {true, false}));
  CHECK(encode(store, cfg, x, nb, {false, true}) == encode(store, cfg, x, other, {false, true}));
}

TEST_CASE("feature propagation loss") {
  auto mutual = weights_from(2, {{{1, 1.0}}, {{0, 1.0}}});
  Matrix e(2, 1, std::vector<double>{0.0, 2.0});
  CHECK(propagation_residual_loss(e, mutual) == 4.0);
  CHECK(propagation_residual_loss(Matrix(2, 1, 7.0), mutual) == 0.0);

  // A label-masked source pair with different labels has no rows.
  auto empty = weights_from(2, {{}, {}});
  CHECK(feature_propagation_loss(e, empty, e, mutual) == 4.0);
  CHECK(feature_propagation_loss(e, mutual, e, mutual) == 8.0);
}

TEST_CASE("feature propagation loss matches the per-node sum") {
  std::mt19937_64 rng(7);
  auto net = testing::random_network(15, 2, 2, 0.25, rng);
  auto w = propagation_weights(compute_proximity(net, 2));
  Matrix e = random_matrix(15, 4, rng);
  auto dense = w.rows.to_dense();
  double expect = 0.0;
  for (std::size_t i = 0; i < 15; ++i) {
    if (w.row_empty(i)) continue;
    for (std::size_t a = 0; a < 4; ++a) {
      double mix = 0.0;
      for (std::size_t j = 0; j < 15; ++j) mix += dense[i][j] * e(j, a);
      expect += (e(i, a) - mix) * (e(i, a) - mix);
    }
  }
  CHECK(propagation_residual_loss(e, w) == doctest::Approx(expect / 15).epsilon(1e-13));
}

TEST_CASE("encoder gradients match finite differences") {
  std::mt19937_64 rng(3);
  ParamStore store;
  auto cfg = small_config();
  init_encoder(store, cfg, rng);
  Matrix x = random_matrix(7, 6, rng, 0.0, 1.0), nb = random_matrix(7, 6, rng, 0.0, 1.0);
  auto net = testing::random_network(7, 2, 2, 0.4, rng);
  auto w = propagation_weights(compute_proximity(net, 2));
  Matrix probe = random_matrix(7, 3, rng);

  for (EncoderAblation ab : {EncoderAblation{}, EncoderAblation{true, false},
                             EncoderAblation{false, true}}) {
    auto loss = [&](const ParamStore& s) {
      Matrix e = encode(s, cfg, x, nb, ab);
      double t = propagation_residual_loss(e, w);
      for (std::size_t k = 0; k < e.size(); ++k) t += e.data()[k] * probe.data()[k];
      return t;
    };
    auto cache = encode_forward(store, cfg, x, nb, ab);
    Matrix g;
    propagation_residual_loss(cache.embeddings, w, &g);
    g += probe;
    Gradients grads;
    encoder_backward(store, cfg, cache, g, grads, ab);
    CHECK(finite_difference_check(loss, store, grads).max_rel_error < 1e-6);
    if (ab.no_fe1) CHECK(grads.count("fe1.layer0.weight") == 0);
  }
}
