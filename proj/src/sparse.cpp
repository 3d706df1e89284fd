#include "dmgnn/sparse.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmgnn {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_rows(
    std::size_t cols, std::vector<std::vector<SparseEntry>> rows) {
  SparseMatrix m(rows.size(), cols);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  m.indices_.reserve(total);
  m.values_.reserve(total);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& entries = rows[r];
    std::stable_sort(entries.begin(), entries.end(),
                     [](const SparseEntry& a, const SparseEntry& b) {
                       return a.col < b.col;
                     });
    for (const auto& e : entries) {
      if (e.col >= cols) throw std::out_of_range("sparse column out of range");
      if (m.indices_.size() > m.offsets_[r] && m.indices_.back() == e.col) {
        m.values_.back() += e.value;
      } else {
        m.indices_.push_back(e.col);
        m.values_.push_back(e.value);
      }
    }
    m.offsets_[r + 1] = m.indices_.size();
  }
  return m;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  auto idx = row_indices(r);
  auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<NodeId>(c));
  if (it == idx.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - idx.begin())];
}

double SparseMatrix::row_sum(std::size_t r) const {
  double s = 0.0;
  for (double v : row_values(r)) s += v;
  return s;
}

SparseMatrix SparseMatrix::multiply(const SparseMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw std::invalid_argument("sparse multiply shape mismatch");
  SparseMatrix out(rows_, rhs.cols_);
  std::vector<double> acc(rhs.cols_, 0.0);
  std::vector<char> touched(rhs.cols_, 0);
  std::vector<NodeId> pattern;
  for (std::size_t i = 0; i < rows_; ++i) {
    pattern.clear();
    auto ai = row_indices(i);
    auto av = row_values(i);
    for (std::size_t p = 0; p < ai.size(); ++p) {
      const double a = av[p];
      auto bi = rhs.row_indices(ai[p]);
      auto bv = rhs.row_values(ai[p]);
      for (std::size_t q = 0; q < bi.size(); ++q) {
        const NodeId j = bi[q];
        if (!touched[j]) {
          touched[j] = 1;
          pattern.push_back(j);
        }
        acc[j] += a * bv[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (NodeId j : pattern) {
      if (acc[j] != 0.0) {
        out.indices_.push_back(j);
        out.values_.push_back(acc[j]);
      }
      acc[j] = 0.0;
      touched[j] = 0;
    }
    out.offsets_[i + 1] = out.indices_.size();
  }
  return out;
}

SparseMatrix SparseMatrix::add_scaled(const SparseMatrix& rhs, double scale) const {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw std::invalid_argument("sparse add shape mismatch");
  SparseMatrix out(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto ai = row_indices(r), bi = rhs.row_indices(r);
    auto av = row_values(r), bv = rhs.row_values(r);
    std::size_t p = 0, q = 0;
    while (p < ai.size() || q < bi.size()) {
      NodeId col;
      double v;
      if (q == bi.size() || (p < ai.size() && ai[p] < bi[q])) {
        col = ai[p];
        v = av[p++];
      } else if (p == ai.size() || bi[q] < ai[p]) {
        col = bi[q];
        v = scale * bv[q++];
      } else {
        col = ai[p];
        v = av[p++] + scale * bv[q++];
      }
      if (v != 0.0) {
        out.indices_.push_back(col);
        out.values_.push_back(v);
      }
    }
    out.offsets_[r + 1] = out.indices_.size();
  }
  return out;
}

std::vector<std::vector<double>> SparseMatrix::to_dense() const {
  std::vector<std::vector<double>> d(rows_, std::vector<double>(cols_, 0.0));
  for (std::size_t r = 0; r < rows_; ++r) {
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t p = 0; p < idx.size(); ++p) d[r][idx[p]] = val[p];
  }
  return d;
}

}  // namespace dmgnn
