#include "dmgnn/proximity.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "dmgnn/error.hpp"

namespace dmgnn {

SparseMatrix transition_matrix(const AttributedNetwork& net) {
  const SparseMatrix adj = net.adjacency();
  std::vector<std::vector<SparseEntry>> rows(net.num_nodes);
  for (std::size_t i = 0; i < net.num_nodes; ++i) {
    auto idx = adj.row_indices(i);
    const double degree = static_cast<double>(idx.size());
    for (NodeId j : idx) rows[i].push_back({j, 1.0 / degree});
  }
  return SparseMatrix::from_rows(net.num_nodes, std::move(rows));
}

SparseMatrix aggregate_transitions(const SparseMatrix& t1, std::size_t K) {
  if (K == 0) throw ValidationError("aggregate_transitions: K must be >= 1");
  SparseMatrix power = t1;
  SparseMatrix total = t1;
  for (std::size_t k = 2; k <= K; ++k) {
    power = power.multiply(t1);
    total = total.add_scaled(power, 1.0 / static_cast<double>(k));
  }
  return total;
}

ProximityMatrix ppmi(const SparseMatrix& t, std::size_t K) {
  const std::size_t n = t.rows();
  std::vector<double> row_sum(n);
  for (std::size_t i = 0; i < n; ++i) row_sum[i] = t.row_sum(i);

  // Column means of the row-normalized matrix.
  std::vector<double> col_mean(t.cols(), 0.0);
  for (std::size_t g = 0; g < n; ++g) {
    if (row_sum[g] <= 0.0) continue;
    auto idx = t.row_indices(g);
    auto val = t.row_values(g);
    for (std::size_t p = 0; p < idx.size(); ++p) col_mean[idx[p]] += val[p] / row_sum[g];
  }
  for (double& c : col_mean) c /= static_cast<double>(n);

  std::vector<std::vector<SparseEntry>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (row_sum[i] <= 0.0) continue;
    auto idx = t.row_indices(i);
    auto val = t.row_values(i);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      if (val[p] <= 0.0) continue;
      const double a = std::log((val[p] / row_sum[i]) / col_mean[idx[p]]);
      if (a > 0.0) rows[i].push_back({idx[p], a});
    }
  }
  return {SparseMatrix::from_rows(t.cols(), std::move(rows)), K};
}

ProximityMatrix compute_proximity(const AttributedNetwork& net, std::size_t K) {
  return ppmi(aggregate_transitions(transition_matrix(net), K), K);
}

PropagationWeights propagation_weights(const ProximityMatrix& p,
                                       std::optional<std::span<const NodeId>> restrict_to,
                                       const LabelMatrix* label_mask) {
  const SparseMatrix& a = p.entries;
  if (label_mask && label_mask->rows() != a.rows())
    throw ValidationError("propagation_weights: label mask does not cover all nodes");

  std::unordered_map<NodeId, std::vector<NodeId>> positions;
  std::size_t out_size = a.rows();
  if (restrict_to) {
    out_size = restrict_to->size();
    for (std::size_t q = 0; q < out_size; ++q) {
      if ((*restrict_to)[q] >= a.rows())
        throw ValidationError("propagation_weights: subset node out of range");
      positions[(*restrict_to)[q]].push_back(static_cast<NodeId>(q));
    }
  }

  std::vector<std::vector<SparseEntry>> rows(out_size);
  for (std::size_t pos = 0; pos < out_size; ++pos) {
    const NodeId u = restrict_to ? (*restrict_to)[pos] : static_cast<NodeId>(pos);
    auto idx = a.row_indices(u);
    auto val = a.row_values(u);
    auto& row = rows[pos];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const NodeId v = idx[k];
      if (v == u) continue;
      if (label_mask && !label_mask->shares_label(u, v)) continue;
      if (restrict_to) {
        auto it = positions.find(v);
        if (it == positions.end()) continue;
        for (NodeId q : it->second) row.push_back({q, val[k]});
      } else {
        row.push_back({v, val[k]});
      }
    }
    double total = 0.0;
    for (const auto& e : row) total += e.value;
    if (total > 0.0) {
      for (auto& e : row) e.value /= total;
    } else {
      row.clear();
    }
  }
  return {SparseMatrix::from_rows(out_size, std::move(rows)), label_mask != nullptr};
}

PairStats proximity_pair_stats(const ProximityMatrix& p, const LabelMatrix& labels) {
  if (labels.rows() != p.size()) throw ValidationError("pair stats: label rows mismatch");
  PairStats s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto idx = p.entries.row_indices(i);
    auto val = p.entries.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] == i || val[k] <= 0.0) continue;
      ++s.connected_pairs;
      s.same_class_pairs += labels.shares_label(i, idx[k]);
      if (idx[k] > i || p.entries.at(idx[k], i) <= 0.0) ++s.unordered_pairs;
    }
  }
  s.same_class_fraction = s.connected_pairs == 0
                              ? 0.0
                              : static_cast<double>(s.same_class_pairs) /
                                    static_cast<double>(s.connected_pairs);
  return s;
}

void write_ppmi_tsv(const ProximityMatrix& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "#K=" << p.K << '\n';
  char buf[64];
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto idx = p.entries.row_indices(i);
    auto val = p.entries.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, val[k]);
      out << i << '\t' << idx[k] << '\t' << std::string_view(buf, end - buf) << '\n';
    }
  }
}

ProximityMatrix read_ppmi_tsv(const std::filesystem::path& path, std::size_t num_nodes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t K = 0;
  std::vector<std::vector<SparseEntry>> rows(num_nodes);
  const auto fail = [&](const std::string& msg) {
    throw ValidationError(path.filename().string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("#K=", 0) == 0) K = std::stoul(line.substr(3));
      continue;
    }
    std::istringstream ss(line);
    std::size_t i = 0, j = 0;
    std::string v;
    if (!(ss >> i >> j >> v)) fail("expected 'i<TAB>j<TAB>value'");
    if (i >= num_nodes || j >= num_nodes) fail("node index out of range");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size() || !(value > 0.0))
      fail("malformed proximity value");
    rows[i].push_back({static_cast<NodeId>(j), value});
  }
  if (K == 0) throw ValidationError(path.string() + ": missing '#K=' header");
  return {SparseMatrix::from_rows(num_nodes, std::move(rows)), K};
}

}  // namespace dmgnn
