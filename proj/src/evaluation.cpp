#include "dmgnn/evaluation.hpp"

#include "dmgnn/error.hpp"

namespace dmgnn {

namespace {

double f1_of(std::size_t tp, std::size_t fp, std::size_t fn) {
  const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

}  // namespace

LabelMatrix decide_labels(const Matrix& probs, LabelMode mode) {
  LabelMatrix out(probs.rows(), probs.cols());
  if (probs.cols() == 0) return out;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto p = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
      if (p[c] > p[best]) best = c;
    if (mode == LabelMode::MultiClass) {
      out.set(i, best);
      continue;
    }
    bool any = false;
    for (std::size_t c = 0; c < p.size(); ++c)
      if (p[c] >= 0.5) {
        out.set(i, c);
        any = true;
      }
    if (!any) out.set(i, best);
  }
  return out;
}

Metrics metrics_from_counts(const std::vector<ClassCounts>& counts) {
  Metrics m;
  std::size_t tp = 0, fp = 0, fn = 0;
  double macro = 0.0;
  for (const auto& c : counts) {
    ClassMetrics cm;
    cm.counts = c;
    cm.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    cm.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    cm.f1 = cm.precision + cm.recall == 0.0 ? 0.0 : f1_of(c.tp, c.fp, c.fn);
    macro += cm.f1;
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    m.per_class.push_back(cm);
  }
  m.micro_f1 = f1_of(tp, fp, fn);
  m.macro_f1 = counts.empty() ? 0.0 : macro / static_cast<double>(counts.size());
  return m;
}

Metrics f1_scores(const LabelMatrix& pred, const LabelMatrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw ValidationError("f1_scores: prediction and truth shapes differ");
  std::vector<ClassCounts> counts(truth.cols());
  for (std::size_t i = 0; i < truth.rows(); ++i)
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      const bool p = pred.has(i, c), t = truth.has(i, c);
      counts[c].tp += p && t;
      counts[c].fp += p && !t;
      counts[c].fn += !p && t;
    }
  return metrics_from_counts(counts);
}

}  // namespace dmgnn
