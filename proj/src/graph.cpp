#include "dmgnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dmgnn/error.hpp"

namespace dmgnn {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::size_t LabelMatrix::count(std::size_t node) const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < cols_; ++c) n += has(node, c);
  return n;
}

std::vector<std::uint32_t> LabelMatrix::labels_of(std::size_t node) const {
  std::vector<std::uint32_t> out;
  for (std::size_t c = 0; c < cols_; ++c)
    if (has(node, c)) out.push_back(static_cast<std::uint32_t>(c));
  return out;
}

bool LabelMatrix::shares_label(std::size_t a, std::size_t b) const {
  const auto* ra = bits_.data() + a * cols_;
  const auto* rb = bits_.data() + b * cols_;
  for (std::size_t c = 0; c < cols_; ++c)
    if (ra[c] && rb[c]) return true;
  return false;
}

Matrix LabelMatrix::to_dense() const {
  Matrix m(rows_, cols_);
  for (std::size_t k = 0; k < bits_.size(); ++k) m.data()[k] = bits_[k];
  return m;
}

Matrix LabelMatrix::to_dense(std::span<const std::size_t> rows) const {
  Matrix m(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < cols_; ++c) m(i, c) = has(rows[i], c);
  return m;
}

SparseMatrix AttributedNetwork::adjacency() const {
  std::vector<std::vector<SparseEntry>> rows(num_nodes);
  for (const auto& e : edges) {
    rows[e.u].push_back({e.v, 1.0});
    rows[e.v].push_back({e.u, 1.0});
  }
  return SparseMatrix::from_rows(num_nodes, std::move(rows));
}

bool AttributedNetwork::fully_labeled() const {
  if (!labels) return false;
  for (std::size_t i = 0; i < num_nodes; ++i)
    if (labels->count(i) == 0) return false;
  return true;
}

AttributedNetwork build_network(const NetworkMeta& meta, std::vector<Edge> raw_edges,
                                const std::vector<AttributeTriplet>& attrs,
                                std::optional<LabelMatrix> labels, LoadReport* report) {
  AttributedNetwork net;
  net.num_nodes = meta.num_nodes;
  net.num_attrs = meta.num_attrs;
  net.num_labels = meta.num_labels;
  net.multi_label = meta.multi_label;

  LoadReport local;
  for (auto& e : raw_edges) {
    if (e.u >= meta.num_nodes || e.v >= meta.num_nodes)
      throw ValidationError("edge endpoint out of range");
    if (e.u == e.v) {
      ++local.self_loops_dropped;
      continue;
    }
    if (e.u > e.v) std::swap(e.u, e.v);
    net.edges.push_back(e);
  }
  std::sort(net.edges.begin(), net.edges.end());
  const auto before = net.edges.size();
  net.edges.erase(std::unique(net.edges.begin(), net.edges.end()), net.edges.end());
  local.duplicate_edges_dropped = before - net.edges.size();

  std::vector<std::vector<SparseEntry>> rows(meta.num_nodes);
  for (const auto& t : attrs) {
    if (t.node >= meta.num_nodes || t.attr >= meta.num_attrs)
      throw ValidationError("attribute index out of range");
    if (!std::isfinite(t.value) || t.value < 0.0)
      throw ValidationError("attribute values must be finite and nonnegative");
    if (t.value != 0.0) rows[t.node].push_back({t.attr, t.value});
  }
  for (auto& r : rows) {
    std::sort(r.begin(), r.end(), [](auto& a, auto& b) { return a.col < b.col; });
    if (std::adjacent_find(r.begin(), r.end(), [](auto& a, auto& b) {
          return a.col == b.col;
        }) != r.end())
      throw ValidationError("duplicate attribute entry");
  }
  net.attributes = SparseMatrix::from_rows(meta.num_attrs, std::move(rows));

  if (labels) {
    if (labels->rows() != meta.num_nodes || labels->cols() != meta.num_labels)
      throw ValidationError("label matrix shape does not match meta");
    if (!meta.multi_label)
      for (std::size_t i = 0; i < meta.num_nodes; ++i)
        if (labels->count(i) > 1)
          throw ValidationError("node " + std::to_string(i) +
                                " has more than one label but multi_label is false");
    net.labels = std::move(labels);
  }
  if (report) *report = local;
  return net;
}

namespace {

struct LineReader {
  fs::path path;
  std::ifstream in;
  std::size_t line_no = 0;

  explicit LineReader(const fs::path& p) : path(p), in(p) {
    if (!in) throw ValidationError("missing file: " + p.string());
  }

  // Next non-blank, non-comment line split on whitespace.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      fields.clear();
      std::istringstream ss(line);
      std::string f;
      while (ss >> f) fields.push_back(f);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError(path.filename().string() + ":" + std::to_string(line_no) + ": " + msg);
  }

  std::uint64_t index(const std::string& s, std::size_t bound, const char* what) const {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      fail(std::string("malformed ") + what + " '" + s + "'");
    if (v >= bound)
      fail(std::string(what) + " " + s + " out of range [0, " + std::to_string(bound) + ")");
    return v;
  }

  double real(const std::string& s) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("malformed value '" + s + "'");
    return v;
  }
};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

AttributedNetwork load_network(const fs::path& dir, LoadReport* report) {
  NetworkMeta meta;
  {
    const auto p = dir / "meta.json";
    std::ifstream in(p);
    if (!in) throw ValidationError("missing file: " + p.string());
    json j;
    try {
      in >> j;
      meta.num_nodes = j.at("num_nodes").get<std::size_t>();
      meta.num_attrs = j.at("num_attrs").get<std::size_t>();
      meta.num_labels = j.at("num_labels").get<std::size_t>();
      meta.multi_label = j.at("multi_label").get<bool>();
    } catch (const json::exception& e) {
      throw ValidationError("meta.json: " + std::string(e.what()));
    }
  }

  std::vector<std::string> f;
  std::vector<Edge> edges;
  {
    LineReader r(dir / "edges.tsv");
    while (r.next(f)) {
      if (f.size() != 2) r.fail("expected 'u<TAB>v'");
      edges.push_back({static_cast<NodeId>(r.index(f[0], meta.num_nodes, "node")),
                       static_cast<NodeId>(r.index(f[1], meta.num_nodes, "node"))});
    }
  }

  std::vector<AttributeTriplet> attrs;
  {
    LineReader r(dir / "attrs.tsv");
    std::vector<std::vector<std::uint32_t>> seen(meta.num_nodes);
    while (r.next(f)) {
      if (f.size() != 3) r.fail("expected 'node<TAB>attr<TAB>value'");
      AttributeTriplet t{static_cast<NodeId>(r.index(f[0], meta.num_nodes, "node")),
                         static_cast<std::uint32_t>(r.index(f[1], meta.num_attrs, "attribute")),
                         r.real(f[2])};
      if (!std::isfinite(t.value) || t.value < 0.0) r.fail("attribute value must be finite and >= 0");
      auto& s = seen[t.node];
      if (std::find(s.begin(), s.end(), t.attr) != s.end()) r.fail("duplicate attribute entry");
      s.push_back(t.attr);
      attrs.push_back(t);
    }
  }

  std::optional<LabelMatrix> labels;
  if (fs::exists(dir / "labels.tsv")) {
    LineReader r(dir / "labels.tsv");
    LabelMatrix lm(meta.num_nodes, meta.num_labels);
    while (r.next(f)) {
      if (f.size() != 2) r.fail("expected 'node<TAB>label'");
      const auto node = r.index(f[0], meta.num_nodes, "node");
      const auto label = r.index(f[1], meta.num_labels, "label");
      if (!meta.multi_label && lm.count(node) > 0 && !lm.has(node, label))
        r.fail("node " + f[0] + " has more than one label but multi_label is false");
      lm.set(node, label);
    }
    labels = std::move(lm);
  }

  return build_network(meta, std::move(edges), attrs, std::move(labels), report);
}

void save_network(const AttributedNetwork& net, const fs::path& dir) {
  fs::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (dir / name).string());
    return out;
  };
  {
    json meta = {{"num_nodes", net.num_nodes},
                 {"num_attrs", net.num_attrs},
                 {"num_labels", net.num_labels},
                 {"multi_label", net.multi_label}};
    auto out = open("meta.json");
    out << meta.dump(2) << '\n';
  }
  {
    auto out = open("edges.tsv");
    for (const auto& e : net.edges) out << e.u << '\t' << e.v << '\n';
  }
  {
    auto out = open("attrs.tsv");
    for (std::size_t i = 0; i < net.num_nodes; ++i) {
      auto idx = net.attributes.row_indices(i);
      auto val = net.attributes.row_values(i);
      for (std::size_t p = 0; p < idx.size(); ++p)
        out << i << '\t' << idx[p] << '\t' << format_double(val[p]) << '\n';
    }
  }
  if (net.labels) {
    auto out = open("labels.tsv");
    for (std::size_t i = 0; i < net.num_nodes; ++i)
      for (auto c : net.labels->labels_of(i)) out << i << '\t' << c << '\n';
  } else if (fs::exists(dir / "labels.tsv")) {
    fs::remove(dir / "labels.tsv");
  }
}

double homophily_ratio(const AttributedNetwork& net) {
  if (net.edges.empty()) throw ValidationError("homophily_ratio: network has no edges");
  if (!net.fully_labeled()) throw ValidationError("homophily_ratio: every node needs a label");
  std::size_t same = 0;
  for (const auto& e : net.edges) same += net.labels->shares_label(e.u, e.v);
  return static_cast<double>(same) / static_cast<double>(net.edges.size());
}

DatasetPair validate_pair(AttributedNetwork source, AttributedNetwork target) {
  if (source.num_attrs != target.num_attrs)
    throw ValidationError("attribute dimension mismatch: source " +
                          std::to_string(source.num_attrs) + ", target " +
                          std::to_string(target.num_attrs));
  if (source.num_labels != target.num_labels)
    throw ValidationError("label dimension mismatch: source " +
                          std::to_string(source.num_labels) + ", target " +
                          std::to_string(target.num_labels));
  if (source.multi_label != target.multi_label)
    throw ValidationError("multi_label flag differs between source and target");
  if (!source.labels) throw ValidationError("source network has no labels");
  for (std::size_t i = 0; i < source.num_nodes; ++i)
    if (source.labels->count(i) == 0)
      throw ValidationError("source node " + std::to_string(i) + " is unlabeled");
  if (source.num_nodes == 0 || target.num_nodes == 0)
    throw ValidationError("source and target must be nonempty");
  return {std::move(source), std::move(target)};
}

AttributedNetwork normalize_attributes(AttributedNetwork net) {
  std::vector<std::vector<SparseEntry>> rows(net.num_nodes);
  for (std::size_t i = 0; i < net.num_nodes; ++i) {
    auto idx = net.attributes.row_indices(i);
    auto val = net.attributes.row_values(i);
    double norm = 0.0;
    for (double v : val) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t p = 0; p < idx.size(); ++p)
      rows[i].push_back({idx[p], norm > 0.0 ? val[p] / norm : val[p]});
  }
  net.attributes = SparseMatrix::from_rows(net.num_attrs, std::move(rows));
  return net;
}

namespace {

void check_synth(const SynthConfig& cfg) {
  if (cfg.num_nodes == 0) throw ValidationError("synthetic config: num_nodes must be > 0");
  if (cfg.num_classes < 2) throw ValidationError("synthetic config: need at least 2 classes");
  if (cfg.num_attrs == 0 || cfg.signal_attrs_per_class == 0)
    throw ValidationError("synthetic config: attribute counts must be > 0");
  for (double p : {cfg.p_intra, cfg.p_inter, cfg.p_signal, cfg.p_noise, cfg.shift})
    if (!(p >= 0.0 && p <= 1.0))
      throw ValidationError("synthetic config: probabilities and shift must lie in [0,1]");
}

std::size_t relocated_per_class(const SynthConfig& cfg) {
  return static_cast<std::size_t>(
      std::lround(cfg.shift * static_cast<double>(cfg.signal_attrs_per_class)));
}

AttributedNetwork sample_network(const SynthConfig& cfg,
                                 const std::vector<std::vector<double>>& prototypes,
                                 std::mt19937_64& rng) {
  const std::size_t n = cfg.num_nodes;
  std::vector<std::uint32_t> cls(n);
  for (std::size_t i = 0; i < n; ++i) cls[i] = static_cast<std::uint32_t>(i % cfg.num_classes);
  std::shuffle(cls.begin(), cls.end(), rng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = cls[u] == cls[v] ? cfg.p_intra : cfg.p_inter;
      if (unif(rng) < p) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }

  std::vector<AttributeTriplet> attrs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& proto = prototypes[cls[i]];
    for (std::size_t a = 0; a < cfg.num_attrs; ++a)
      if (unif(rng) < proto[a])
        attrs.push_back({static_cast<NodeId>(i), static_cast<std::uint32_t>(a), 1.0});
  }

  LabelMatrix labels(n, cfg.num_classes);
  for (std::size_t i = 0; i < n; ++i) labels.set(i, cls[i]);

  NetworkMeta meta{n, cfg.num_attrs, cfg.num_classes, false};
  return build_network(meta, std::move(edges), attrs, std::move(labels));
}

}  // namespace

ClassPrototypes synthetic_prototypes(const SynthConfig& cfg) {
  check_synth(cfg);
  const std::size_t c = cfg.num_classes;
  const std::size_t m = cfg.signal_attrs_per_class;
  const std::size_t moved = relocated_per_class(cfg);
  if (c * (m + moved) > cfg.num_attrs)
    throw ValidationError("synthetic config: num_attrs too small for signal blocks and shift");

  ClassPrototypes p;
  p.source.assign(c, std::vector<double>(cfg.num_attrs, cfg.p_noise));
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t a = 0; a < m; ++a) p.source[k][k * m + a] = cfg.p_signal;

  // The last `moved` attributes of each class block move to fresh slots
  // after all source blocks.
  p.target = p.source;
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t r = 0; r < moved; ++r) {
      p.target[k][k * m + (m - moved) + r] = cfg.p_noise;
      p.target[k][c * m + k * moved + r] = cfg.p_signal;
    }
  return p;
}

DatasetPair generate_synthetic_pair(const SynthConfig& cfg) {
  const auto protos = synthetic_prototypes(cfg);
  std::mt19937_64 rng(cfg.seed);
  auto source = sample_network(cfg, protos.source, rng);
  auto target = sample_network(cfg, protos.target, rng);
  return validate_pair(std::move(source), std::move(target));
}

}  // namespace dmgnn
