#include <doctest.h>

#include <random>

#include "dmgnn/error.hpp"
#include "dmgnn/evaluation.hpp"
#include "support.hpp"

using namespace dmgnn;

namespace {

LabelMatrix one_hot(const std::vector<int>& classes, std::size_t c) {
  LabelMatrix m(classes.size(), c);
  for (std::size_t i = 0; i < classes.size(); ++i) m.set(i, classes[i]);
  return m;
}

}  // namespace

TEST_CASE("decision rules") {
  auto mc = decide_labels(Matrix::row_vector({0.1, 0.7, 0.2}), LabelMode::MultiClass);
  CHECK(mc.labels_of(0) == std::vector<std::uint32_t>{1});
  auto tie = decide_labels(Matrix::row_vector({0.5, 0.5}), LabelMode::MultiClass);
  CHECK(tie.labels_of(0) == std::vector<std::uint32_t>{0});
  auto ml = decide_labels(Matrix::row_vector({0.9, 0.1, 0.6}), LabelMode::MultiLabel);
  CHECK(ml.labels_of(0) == std::vector<std::uint32_t>{0, 2});
  auto fallback = decide_labels(Matrix::row_vector({0.2, 0.4, 0.1}), LabelMode::MultiLabel);
  CHECK(fallback.labels_of(0) == std::vector<std::uint32_t>{1});
}

TEST_CASE("hand confusion matrix") {
  auto m = f1_scores(one_hot({0, 1, 1}, 2), one_hot({0, 0, 1}, 2));
  // Class 0: tp 1, fp 0, fn 1. Class 1: tp 1, fp 1, fn 0.
  CHECK(m.per_class[0].counts.tp == 1);
  CHECK(m.per_class[0].counts.fn == 1);
  CHECK(m.per_class[1].counts.fp == 1);
  CHECK(m.micro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.macro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("extreme predictions") {
  auto truth = one_hot({0, 1, 2, 1}, 3);
  auto perfect = f1_scores(truth, truth);
  CHECK(perfect.micro_f1 == 1.0);
  CHECK(perfect.macro_f1 == 1.0);
  auto wrong = f1_scores(one_hot({1, 1, 1}, 2), one_hot({0, 0, 0}, 2));
  CHECK(wrong.micro_f1 == 0.0);
  CHECK(wrong.macro_f1 == 0.0);
  CHECK_THROWS_AS(f1_scores(one_hot({0}, 2), one_hot({0, 1}, 2)), ValidationError);
}

TEST_CASE("micro F1 equals accuracy for single-label predictions") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> cls(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> p(40), t(40);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < 40; ++i) {
      p[i] = cls(rng);
      t[i] = cls(rng);
      hits += p[i] == t[i];
    }
    auto m = f1_scores(one_hot(p, 4), one_hot(t, 4));
    CHECK(m.micro_f1 == doctest::Approx(hits / 40.0).epsilon(1e-14));
    CHECK(metrics_from_counts({m.per_class[0].counts, m.per_class[1].counts,
                               m.per_class[2].counts, m.per_class[3].counts})
              .macro_f1 == m.macro_f1);
  }
}

TEST_CASE("labels absent from both sides score zero in the macro average") {
  auto m = f1_scores(one_hot({0, 0}, 3), one_hot({0, 0}, 3));
  CHECK(m.micro_f1 == 1.0);
  CHECK(m.macro_f1 == doctest::Approx(1.0 / 3.0));
}
