#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dmgnn {

using NodeId = std::uint32_t;

struct SparseEntry {
  NodeId col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within every row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  /// Builds from per-row entry lists. Entries are sorted by column and
  /// duplicate columns are summed.
  static SparseMatrix from_rows(std::size_t cols,
                                std::vector<std::vector<SparseEntry>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const NodeId> row_indices(std::size_t r) const {
    return {indices_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::size_t row_nnz(std::size_t r) const {
    return offsets_[r + 1] - offsets_[r];
  }

  /// Value at (r, c); zero when not stored.
  double at(std::size_t r, std::size_t c) const;
  double row_sum(std::size_t r) const;

  /// Sparse product this * rhs. Accumulation order is fixed by the operand
  /// layouts so the result is reproducible bit for bit.
  SparseMatrix multiply(const SparseMatrix& rhs) const;

  /// this + scale * rhs, same shape required.
  SparseMatrix add_scaled(const SparseMatrix& rhs, double scale) const;

  /// Row-major dense copy, for tests and small oracles.
  std::vector<std::vector<double>> to_dense() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> indices_;
  std::vector<double> values_;
};

}  // namespace dmgnn
