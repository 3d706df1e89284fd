#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>

#include "dmgnn/graph.hpp"
#include "dmgnn/sparse.hpp"

namespace dmgnn {

/// Positive PMI proximities over aggregated K-step random-walk transitions.
/// Only strictly positive values are stored. Diagonal entries are kept here
/// and dropped when propagation weights are derived.
struct ProximityMatrix {
  SparseMatrix entries;
  std::size_t K = 0;

  std::size_t size() const { return entries.rows(); }
};

/// Row-normalized propagation weights without diagonal. Row and column
/// indices are positions in the node subset the weights were built for
/// (the whole graph when no subset was given).
struct PropagationWeights {
  SparseMatrix rows;
  bool label_masked = false;

  std::size_t size() const { return rows.rows(); }
  bool row_empty(std::size_t i) const { return rows.row_nnz(i) == 0; }
};

/// One-step transition matrix: adjacency divided by degree; isolated nodes
/// get an empty row.
SparseMatrix transition_matrix(const AttributedNetwork& net);

/// Σ_{k=1..K} T^k / k.
SparseMatrix aggregate_transitions(const SparseMatrix& t1, std::size_t K);

/// PPMI of an aggregated transition matrix, natural log.
ProximityMatrix ppmi(const SparseMatrix& aggregated, std::size_t K = 0);

/// transition_matrix -> aggregate_transitions -> ppmi.
ProximityMatrix compute_proximity(const AttributedNetwork& net, std::size_t K);

/// Keeps a_ij for j != i (by node id), j inside `restrict_to` when given and
/// sharing a label with i when `label_mask` is given, then normalizes every
/// row to sum 1. Rows with no kept mass stay empty. Duplicate node ids in
/// `restrict_to` are allowed and each occurrence is a separate position.
PropagationWeights propagation_weights(const ProximityMatrix& p,
                                       std::optional<std::span<const NodeId>> restrict_to = {},
                                       const LabelMatrix* label_mask = nullptr);

struct PairStats {
  std::size_t connected_pairs = 0;
  std::size_t unordered_pairs = 0;  // {i, j} with a_ij > 0 or a_ji > 0
  std::size_t same_class_pairs = 0;
  double same_class_fraction = 0.0;
};

/// Ordered pairs (i, j), i != j, with a_ij > 0, and how many share a label.
PairStats proximity_pair_stats(const ProximityMatrix& p, const LabelMatrix& labels);

/// "#K=<k>" header then "i\tj\tvalue" lines.
void write_ppmi_tsv(const ProximityMatrix& p, const std::filesystem::path& path);
ProximityMatrix read_ppmi_tsv(const std::filesystem::path& path, std::size_t num_nodes);

}  // namespace dmgnn
