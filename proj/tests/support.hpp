#pragma once

// Small builders shared by the test binaries.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <random>
#include <vector>

#include "dmgnn/graph.hpp"
#include "dmgnn/numerics.hpp"
#include "dmgnn/trainer.hpp"

namespace testing {

using namespace dmgnn;

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("dmgnn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
  }
};

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (double& v : m.data()) v = u(rng);
  return m;
}

// Single-label network from an edge list and one class per node.
inline AttributedNetwork make_network(std::size_t n, const std::vector<Edge>& edges,
                                      const std::vector<int>& classes, std::size_t num_labels,
                                      std::size_t num_attrs = 2,
                                      const std::vector<AttributeTriplet>& attrs = {}) {
  std::optional<LabelMatrix> labels;
  if (!classes.empty()) {
    labels = LabelMatrix(n, num_labels);
    for (std::size_t i = 0; i < n; ++i) labels->set(i, classes[i]);
  }
  return build_network({n, num_attrs, num_labels, false}, edges, attrs, labels);
}

// Erdős–Rényi graph with uniform random classes and Bernoulli attributes.
inline AttributedNetwork random_network(std::size_t n, std::size_t w, std::size_t c, double p,
                                        std::mt19937_64& rng, bool multi_label = false) {
  std::bernoulli_distribution edge(p), attr(0.3);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(c) - 1);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (edge(rng)) edges.push_back({i, j});
  std::vector<AttributeTriplet> attrs;
  for (NodeId i = 0; i < n; ++i)
    for (std::uint32_t a = 0; a < w; ++a)
      if (attr(rng)) attrs.push_back({i, a, 1.0});
  LabelMatrix labels(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    labels.set(i, cls(rng));
    if (multi_label && attr(rng)) labels.set(i, cls(rng));
  }
  return build_network({n, w, c, multi_label}, edges, attrs, labels);
}

inline TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.K = 2;
  cfg.embed_dim = 8;
  cfg.hidden = {16, 8};
  cfg.disc_hidden = {16, 8};
  cfg.batch_size = 20;
  cfg.epochs = 2;
  return cfg;
}

// Whole-network batch of a prepared pair, useful for objective checks.
inline Minibatch full_batch(std::size_t ns, std::size_t nt) {
  Minibatch b;
  for (NodeId i = 0; i < ns; ++i) b.source.push_back(i);
  for (NodeId i = 0; i < nt; ++i) b.target.push_back(i);
  return b;
}

}  // namespace testing
