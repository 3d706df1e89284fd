#pragma once

#include <cstddef>
#include <vector>

#include "dmgnn/graph.hpp"
#include "dmgnn/numerics.hpp"

namespace dmgnn {

struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct ClassMetrics {
  ClassCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

/// Multi-class: argmax, lowest index on ties. Multi-label: every probability
/// >= 0.5, or the argmax alone when none reaches it.
LabelMatrix decide_labels(const Matrix& probs, LabelMode mode);

/// Micro-F1 pools TP/FP/FN over all cells; macro-F1 averages per-label F1,
/// where a label with precision + recall = 0 scores 0.
Metrics f1_scores(const LabelMatrix& pred, const LabelMatrix& truth);

/// Recomputes every rate from the stored confusion counts.
Metrics metrics_from_counts(const std::vector<ClassCounts>& counts);

}  // namespace dmgnn
