#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "dmgnn/numerics.hpp"
#include "dmgnn/sparse.hpp"

namespace dmgnn {

/// Dense 0/1 node-by-label matrix (multi-hot rows).
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool has(std::size_t node, std::size_t label) const { return bits_[node * cols_ + label] != 0; }
  void set(std::size_t node, std::size_t label, bool on = true) {
    bits_[node * cols_ + label] = on ? 1 : 0;
  }

  std::size_t count(std::size_t node) const;
  std::vector<std::uint32_t> labels_of(std::size_t node) const;
  /// True when the two rows have at least one label in common.
  bool shares_label(std::size_t a, std::size_t b) const;
  Matrix to_dense() const;
  Matrix to_dense(std::span<const std::size_t> rows) const;

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Edge {
  NodeId u;
  NodeId v;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected attributed graph. Edges are stored once with u < v, sorted.
struct AttributedNetwork {
  std::size_t num_nodes = 0;
  std::size_t num_attrs = 0;
  std::size_t num_labels = 0;
  bool multi_label = false;
  std::vector<Edge> edges;
  SparseMatrix attributes;  // num_nodes x num_attrs, nonnegative
  std::optional<LabelMatrix> labels;

  /// Symmetric 0/1 adjacency.
  SparseMatrix adjacency() const;
  bool fully_labeled() const;

  friend bool operator==(const AttributedNetwork&, const AttributedNetwork&) = default;
};

struct AttributeTriplet {
  NodeId node;
  std::uint32_t attr;
  double value;
};

struct NetworkMeta {
  std::size_t num_nodes = 0;
  std::size_t num_attrs = 0;
  std::size_t num_labels = 0;
  bool multi_label = false;
};

struct LoadReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_dropped = 0;
};

/// Normalizes and validates raw parts into a network: edges are symmetrized,
/// self-loops and duplicates dropped (counted in `report`).
AttributedNetwork build_network(const NetworkMeta& meta, std::vector<Edge> raw_edges,
                                const std::vector<AttributeTriplet>& attrs,
                                std::optional<LabelMatrix> labels,
                                LoadReport* report = nullptr);

/// Reads meta.json, edges.tsv, attrs.tsv and optional labels.tsv.
AttributedNetwork load_network(const std::filesystem::path& dir, LoadReport* report = nullptr);
void save_network(const AttributedNetwork& net, const std::filesystem::path& dir);

/// Fraction of edges whose endpoints share at least one label.
double homophily_ratio(const AttributedNetwork& net);

struct DatasetPair {
  AttributedNetwork source;
  AttributedNetwork target;
};

DatasetPair validate_pair(AttributedNetwork source, AttributedNetwork target);

/// Row-wise L2 normalization of the attribute matrix.
AttributedNetwork normalize_attributes(AttributedNetwork net);

/// Two stochastic-block-model graphs with class-prototype Bernoulli
/// attributes. Each class owns `signal_attrs_per_class` attributes that fire
/// with probability `p_signal`; every other attribute fires with `p_noise`.
/// In the target network a `shift` fraction of each class's signal
/// attributes is relocated to attribute slots no source class uses.
struct SynthConfig {
  std::size_t num_nodes = 300;
  std::size_t num_classes = 3;
  std::size_t num_attrs = 60;
  std::size_t signal_attrs_per_class = 10;
  double p_intra = 0.05;
  double p_inter = 0.005;
  double p_signal = 0.3;
  double p_noise = 0.02;
  double shift = 0.0;
  std::uint64_t seed = 1;
};

/// Bernoulli firing probabilities, one row per class.
struct ClassPrototypes {
  std::vector<std::vector<double>> source;
  std::vector<std::vector<double>> target;
};

ClassPrototypes synthetic_prototypes(const SynthConfig& cfg);
DatasetPair generate_synthetic_pair(const SynthConfig& cfg);

}  // namespace dmgnn
