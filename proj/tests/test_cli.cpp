#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dmgnn/cli.hpp"
#include "dmgnn/graph.hpp"
#include "dmgnn/proximity.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dmgnn::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("end-to-end through the command line") {
  testing::TempDir d;
  const std::string data = (d.path / "data").string();
  const std::string src = data + "/source", tgt = data + "/target";
  const std::string run_dir = (d.path / "run").string();

  REQUIRE(run({"synth", "--out", data, "--nodes", "60", "--shift", "0.3", "--seed", "2"}).code == 0);
  CHECK(fs::exists(fs::path(src) / "meta.json"));
  CHECK(fs::exists(fs::path(data) / "config.json"));

  auto train = run({"train", "--source", src, "--target", tgt, "--out", run_dir, "--K", "3",
                    "--beta", "0.1", "--epochs", "5", "--seed", "7", "--hidden", "16,8", "--d",
                    "8", "--disc-hidden", "8,8", "--batch-size", "20"});
  REQUIRE(train.code == 0);
  CHECK(fs::exists(fs::path(run_dir) / "checkpoint.json"));
  std::ifstream log(fs::path(run_dir) / "train_log.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("loss_y"));
    CHECK(j.contains("lambda"));
    ++lines;
  }
  CHECK(lines == 5 * 6);  // 60 nodes, 10 per half-batch
  auto cfg = nlohmann::json::parse(slurp(fs::path(run_dir) / "config.json"));
  CHECK(cfg["train"]["seed"] == 7);

  const std::string ckpt = run_dir + "/checkpoint.json";
  const std::string e1 = (d.path / "eval1").string(), e2 = (d.path / "eval2").string();
  auto eval = run({"eval", "--checkpoint", ckpt, "--source", src, "--target", tgt, "--out", e1,
                   "--dump-predictions"});
  REQUIRE(eval.code == 0);
  REQUIRE(run({"eval", "--checkpoint", ckpt, "--source", src, "--target", tgt, "--out", e2}).code == 0);
  CHECK(slurp(fs::path(e1) / "metrics.json") == slurp(fs::path(e2) / "metrics.json"));
  auto metrics = nlohmann::json::parse(slurp(fs::path(e1) / "metrics.json"));
  CHECK(metrics["micro_f1"].get<double>() >= 0.0);
  CHECK(metrics["per_class"].size() == 3);
  CHECK(metrics["seed"] == 7);

  std::ifstream preds(fs::path(e1) / "predictions.tsv");
  std::getline(preds, line);
  CHECK(line.rfind("# config:", 0) == 0);
  std::size_t rows = 0;
  while (std::getline(preds, line)) {
    std::istringstream ss(line);
    std::size_t id;
    double a, b, c;
    CHECK(static_cast<bool>(ss >> id >> a >> b >> c));
    CHECK(a + b + c == doctest::Approx(1.0));
    ++rows;
  }
  CHECK(rows == 60);

  const std::string emb = (d.path / "emb").string();
  REQUIRE(run({"export-embeddings", "--checkpoint", ckpt, "--source", src, "--target", tgt,
               "--out", emb}).code == 0);
  CHECK(fs::exists(fs::path(emb) / "source_embeddings.tsv"));
  CHECK(fs::exists(fs::path(emb) / "target_embeddings.tsv"));
}

TEST_CASE("ppmi and stats subcommands") {
  testing::TempDir d;
  auto net = testing::make_network(3, {{0, 1}, {1, 2}}, {0, 1, 0}, 2);
  dmgnn::save_network(net, d.path / "net");
  const std::string dir = (d.path / "net").string();

  REQUIRE(run({"ppmi", "--net", dir, "--K", "2"}).code == 0);
  auto p = dmgnn::read_ppmi_tsv(d.path / "net" / "ppmi.tsv", 3);
  CHECK(p.K == 2);
  CHECK(p.entries == dmgnn::compute_proximity(net, 2).entries);

  auto stats = run({"stats", "--net", dir, "--K", "1,2", "--out", (d.path / "s.json").string()});
  REQUIRE(stats.code == 0);
  CHECK(stats.out.find("homophily_ratio\t0") != std::string::npos);
  auto report = nlohmann::json::parse(slurp(d.path / "s.json"));
  CHECK(report["per_K"].size() == 2);
  CHECK(report["per_K"][0]["connected_pairs"] == 4);
  CHECK(report["per_K"][0]["unordered_pairs"] == 2);
  CHECK(report["per_K"][0]["same_class_fraction"] == 0.0);
}

TEST_CASE("usage and validation failures exit with 1") {
  testing::TempDir d;
  auto missing = run({"eval", "--source", "x", "--target", "y", "--out", d.path.string()});
  CHECK(missing.code == 1);
  CHECK_FALSE(missing.err.empty());

  auto absent = run({"eval", "--checkpoint", (d.path / "nope.json").string(), "--source", "x",
                     "--target", "y", "--out", d.path.string()});
  CHECK(absent.code == 1);
  CHECK(absent.err.find("checkpoint") != std::string::npos);

  CHECK(run({}).code == 1);
  CHECK(run({"train", "--bogus"}).code == 1);
  CHECK(run({"stats", "--net", (d.path / "none").string()}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("odd batch size is rejected before training") {
  testing::TempDir d;
  const std::string data = (d.path / "data").string();
  REQUIRE(run({"synth", "--out", data, "--nodes", "30"}).code == 0);
  auto r = run({"train", "--source", data + "/source", "--target", data + "/target", "--out",
                (d.path / "run").string(), "--batch-size", "9"});
  CHECK(r.code == 1);
  CHECK(r.err.find("batch") != std::string::npos);
}
