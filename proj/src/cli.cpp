#include "dmgnn/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmgnn/checkpoint.hpp"
#include "dmgnn/error.hpp"
#include "dmgnn/evaluation.hpp"
#include "dmgnn/graph.hpp"
#include "dmgnn/proximity.hpp"
#include "dmgnn/trainer.hpp"

namespace dmgnn::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

AttributedNetwork load_reporting(const std::string& dir, std::ostream& err) {
  LoadReport report;
  auto net = load_network(dir, &report);
  if (report.self_loops_dropped || report.duplicate_edges_dropped)
    err << "warning: " << dir << ": dropped " << report.self_loops_dropped << " self-loops and "
        << report.duplicate_edges_dropped << " duplicate edges\n";
  return net;
}

void write_matrix_tsv(const fs::path& path, const Matrix& m, const json& config) {
  auto out = open_out(path);
  out << "# config: " << config.dump() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << i;
    for (double v : m.row(i)) out << '\t' << fmt(v);
    out << '\n';
  }
}

void add_train_flags(CLI::App* app, TrainConfig& cfg) {
  app->add_option("--K", cfg.K, "random-walk steps for PPMI")->capture_default_str();
  app->add_option("--d", cfg.embed_dim, "embedding dimension")->capture_default_str();
  app->add_option("--hidden", cfg.hidden, "feature extractor hidden widths")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--disc-hidden", cfg.disc_hidden, "discriminator hidden widths")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--beta", cfg.beta, "feature propagation loss weight")->capture_default_str();
  app->add_option("--batch-size", cfg.batch_size, "mini-batch size (even)")->capture_default_str();
  app->add_option("--mu0", cfg.mu0, "initial learning rate")->capture_default_str();
  app->add_option("--momentum", cfg.momentum, "SGD momentum")->capture_default_str();
  app->add_option("--epochs", cfg.epochs, "passes over the larger network")->capture_default_str();
  app->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app->add_flag("--no-fe1", cfg.ablation.no_fe1, "drop the ego-embedding extractor");
  app->add_flag("--no-fe2", cfg.ablation.no_fe2, "drop the neighbor-embedding extractor");
  app->add_flag("--no-feat-prop", cfg.ablation.no_feat_prop, "drop the feature propagation loss");
  app->add_flag("--no-label-prop", cfg.ablation.no_label_prop, "drop label propagation");
  app->add_flag("--no-discriminator", cfg.ablation.no_discriminator,
                "drop the conditional domain discriminator");
  app->add_flag("--normalize-attrs", cfg.normalize_attrs, "L2-normalize attribute rows");
}

struct PairArgs {
  std::string source;
  std::string target;
};

void add_pair_flags(CLI::App* app, PairArgs& p) {
  app->add_option("--source", p.source, "source dataset directory")->required();
  app->add_option("--target", p.target, "target dataset directory")->required();
}

int cmd_synth(const SynthConfig& cfg, const std::string& out_dir, std::ostream& out) {
  const DatasetPair pair = generate_synthetic_pair(cfg);
  save_network(pair.source, fs::path(out_dir) / "source");
  save_network(pair.target, fs::path(out_dir) / "target");
  const json config = {{"command", "synth"}, {"synth", to_json(cfg)}};
  write_json(fs::path(out_dir) / "config.json", config);
  out << "source homophily " << fmt(homophily_ratio(pair.source)) << ", target homophily "
      << fmt(homophily_ratio(pair.target)) << '\n';
  return 0;
}

int cmd_ppmi(const std::string& net_dir, std::size_t K, std::string out_path, std::ostream& out,
             std::ostream& err) {
  const auto net = load_reporting(net_dir, err);
  const auto p = compute_proximity(net, K);
  if (out_path.empty()) out_path = (fs::path(net_dir) / "ppmi.tsv").string();
  write_ppmi_tsv(p, out_path);
  {
    // Config echo goes after the mandatory header line.
    std::ifstream in(out_path);
    std::stringstream body;
    body << in.rdbuf();
    std::string text = body.str();
    const auto nl = text.find('\n');
    const json config = {{"command", "ppmi"}, {"net", net_dir}, {"K", K}};
    text.insert(nl + 1, "# config: " + config.dump() + "\n");
    open_out(out_path) << text;
  }
  out << "wrote " << p.entries.nnz() << " entries to " << out_path << '\n';
  return 0;
}

int cmd_train(const PairArgs& pa, TrainConfig cfg, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  DatasetPair pair =
      validate_pair(load_reporting(pa.source, err), load_reporting(pa.target, err));
  cfg.multi_label = pair.source.multi_label;
  cfg.validate();
  fs::create_directories(out_dir);
  const json config = {{"command", "train"},
                       {"source", pa.source},
                       {"target", pa.target},
                       {"train", to_json(cfg)}};
  write_json(fs::path(out_dir) / "config.json", config);

  auto log = open_out(fs::path(out_dir) / "train_log.jsonl");
  const FitResult r =
      fit(pair, cfg, [&](const IterationLog& l) { log << to_json(l).dump() << '\n'; });
  save_checkpoint({r.config, pair.source.num_attrs, pair.source.num_labels, r.params},
                  fs::path(out_dir) / "checkpoint.json");
  out << "trained " << r.trace.size() << " iterations; checkpoint "
      << (fs::path(out_dir) / "checkpoint.json").string() << '\n';
  return 0;
}

struct Loaded {
  Checkpoint ckpt;
  PreparedPair data;
};

Loaded load_for_inference(const std::string& ckpt_path, const PairArgs& pa, std::ostream& err) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  DatasetPair pair =
      validate_pair(load_reporting(pa.source, err), load_reporting(pa.target, err));
  if (pair.source.num_attrs != ckpt.num_attrs || pair.source.num_labels != ckpt.num_labels)
    throw ValidationError("dataset dimensions do not match the checkpoint");
  PreparedPair data = prepare_pair(pair, ckpt.config);
  return {std::move(ckpt), std::move(data)};
}

int cmd_eval(const std::string& ckpt_path, const PairArgs& pa, const std::string& out_dir,
             bool dump_predictions, std::ostream& out, std::ostream& err) {
  const Loaded l = load_for_inference(ckpt_path, pa, err);
  const auto& target = l.data.pair.target;
  if (!target.fully_labeled())
    throw ValidationError("evaluation needs labels for every target node");
  const ModelConfig model = l.ckpt.model();
  const Inference inf = infer(l.ckpt.params, model, target, l.data.target_ppmi,
                              l.data.target_neighbor_attrs, l.ckpt.config.ablation);
  const Metrics m = f1_scores(decide_labels(inf.probs, model.mode), *target.labels);

  const json config = {{"command", "eval"},
                       {"checkpoint", ckpt_path},
                       {"source", pa.source},
                       {"target", pa.target},
                       {"train", to_json(l.ckpt.config)}};
  json metrics = to_json(m);
  metrics["config"] = config;
  metrics["seed"] = l.ckpt.config.seed;
  metrics["notes"] =
      "macro_f1 averages per-label F1 over all labels; a label with no true or predicted "
      "positives scores 0";
  fs::create_directories(out_dir);
  write_json(fs::path(out_dir) / "metrics.json", metrics);
  write_json(fs::path(out_dir) / "config.json", config);
  if (dump_predictions) write_matrix_tsv(fs::path(out_dir) / "predictions.tsv", inf.probs, config);
  out << "micro_f1 " << fmt(m.micro_f1) << " macro_f1 " << fmt(m.macro_f1) << '\n';
  return 0;
}

int cmd_export(const std::string& ckpt_path, const PairArgs& pa, const std::string& out_dir,
               std::ostream& out, std::ostream& err) {
  const Loaded l = load_for_inference(ckpt_path, pa, err);
  const ModelConfig model = l.ckpt.model();
  const json config = {{"command", "export-embeddings"},
                       {"checkpoint", ckpt_path},
                       {"source", pa.source},
                       {"target", pa.target},
                       {"train", to_json(l.ckpt.config)}};
  const auto& ab = l.ckpt.config.ablation;
  const Inference s = infer(l.ckpt.params, model, l.data.pair.source, l.data.source_ppmi,
                            l.data.source_neighbor_attrs, ab);
  const Inference t = infer(l.ckpt.params, model, l.data.pair.target, l.data.target_ppmi,
                            l.data.target_neighbor_attrs, ab);
  fs::create_directories(out_dir);
  write_matrix_tsv(fs::path(out_dir) / "source_embeddings.tsv", s.embeddings, config);
  write_matrix_tsv(fs::path(out_dir) / "target_embeddings.tsv", t.embeddings, config);
  write_json(fs::path(out_dir) / "config.json", config);
  out << "wrote embeddings to " << out_dir << '\n';
  return 0;
}

int cmd_stats(const std::string& net_dir, const std::vector<std::size_t>& ks,
              const std::string& out_path, std::ostream& out, std::ostream& err) {
  const auto net = load_reporting(net_dir, err);
  if (!net.fully_labeled()) throw ValidationError("stats need labels for every node");
  json report = {{"config", {{"command", "stats"}, {"net", net_dir}, {"K", ks}}},
                 {"num_nodes", net.num_nodes},
                 {"num_edges", net.edges.size()}};
  if (!net.edges.empty()) {
    report["homophily_ratio"] = homophily_ratio(net);
    out << "homophily_ratio\t" << fmt(homophily_ratio(net)) << '\n';
  }
  out << "K\tconnected_pairs\tunordered_pairs\tsame_class_pairs\tsame_class_fraction\n";
  json rows = json::array();
  for (std::size_t K : ks) {
    const PairStats s = proximity_pair_stats(compute_proximity(net, K), *net.labels);
    out << K << '\t' << s.connected_pairs << '\t' << s.unordered_pairs << '\t' << s.same_class_pairs << '\t'
        << fmt(s.same_class_fraction) << '\n';
    rows.push_back({{"K", K},
                    {"connected_pairs", s.connected_pairs},
                    {"unordered_pairs", s.unordered_pairs},
                    {"same_class_pairs", s.same_class_pairs},
                    {"same_class_fraction", s.same_class_fraction}});
  }
  report["per_K"] = rows;
  if (!out_path.empty()) write_json(out_path, report);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-network node classification with dual feature extractors, label-aware "
               "propagation and conditional adversarial adaptation"};
  app.name("dmgnn");
  app.require_subcommand(1);

  SynthConfig synth;
  std::string synth_out;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic source/target pair");
  c_synth->add_option("--out", synth_out, "output directory")->required();
  c_synth->add_option("--nodes", synth.num_nodes)->capture_default_str();
  c_synth->add_option("--classes", synth.num_classes)->capture_default_str();
  c_synth->add_option("--attrs", synth.num_attrs)->capture_default_str();
  c_synth->add_option("--signal-attrs", synth.signal_attrs_per_class)->capture_default_str();
  c_synth->add_option("--p-intra", synth.p_intra)->capture_default_str();
  c_synth->add_option("--p-inter", synth.p_inter)->capture_default_str();
  c_synth->add_option("--p-signal", synth.p_signal)->capture_default_str();
  c_synth->add_option("--p-noise", synth.p_noise)->capture_default_str();
  c_synth->add_option("--shift", synth.shift, "fraction of signal attributes relocated in target")
      ->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();

  std::string ppmi_net, ppmi_out;
  std::size_t ppmi_k = 3;
  auto* c_ppmi = app.add_subcommand("ppmi", "write the PPMI proximity matrix of a network");
  c_ppmi->add_option("--net", ppmi_net, "dataset directory")->required();
  c_ppmi->add_option("--K", ppmi_k)->capture_default_str();
  c_ppmi->add_option("--out", ppmi_out, "output file (default <net>/ppmi.tsv)");

  TrainConfig train_cfg;
  PairArgs train_pair;
  std::string train_out;
  auto* c_train = app.add_subcommand("train", "train on a source/target pair");
  add_pair_flags(c_train, train_pair);
  c_train->add_option("--out", train_out, "output directory")->required();
  add_train_flags(c_train, train_cfg);

  PairArgs eval_pair;
  std::string eval_ckpt, eval_out;
  bool dump_predictions = false;
  auto* c_eval = app.add_subcommand("eval", "classify the target network and score it");
  c_eval->add_option("--checkpoint", eval_ckpt, "checkpoint.json from train")->required();
  add_pair_flags(c_eval, eval_pair);
  c_eval->add_option("--out", eval_out, "output directory")->required();
  c_eval->add_flag("--dump-predictions", dump_predictions, "also write predictions.tsv");

  PairArgs export_pair;
  std::string export_ckpt, export_out;
  auto* c_export = app.add_subcommand("export-embeddings", "write node embeddings as TSV");
  c_export->add_option("--checkpoint", export_ckpt)->required();
  add_pair_flags(c_export, export_pair);
  c_export->add_option("--out", export_out, "output directory")->required();

  std::string stats_net, stats_out;
  std::vector<std::size_t> stats_k{1, 2, 3};
  auto* c_stats = app.add_subcommand("stats", "homophily and proximity pair statistics");
  c_stats->add_option("--net", stats_net, "dataset directory")->required();
  c_stats->add_option("--K", stats_k, "comma-separated K values")->delimiter(',')->capture_default_str();
  c_stats->add_option("--out", stats_out, "optional JSON report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*c_synth) return cmd_synth(synth, synth_out, out);
    if (*c_ppmi) return cmd_ppmi(ppmi_net, ppmi_k, ppmi_out, out, err);
    if (*c_train) return cmd_train(train_pair, train_cfg, train_out, out, err);
    if (*c_eval) return cmd_eval(eval_ckpt, eval_pair, eval_out, dump_predictions, out, err);
    if (*c_export) return cmd_export(export_ckpt, export_pair, export_out, out, err);
    if (*c_stats) return cmd_stats(stats_net, stats_k, stats_out, out, err);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 1;
  }
  return 1;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace dmgnn::cli
