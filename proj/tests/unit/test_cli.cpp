#include <doctest.h>

#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "revtrack/cli.hpp"
#include "revtrack/digest.hpp"
#include "revtrack/graph_io.hpp"
#include "revtrack/model.hpp"

using namespace revtrack;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("revtrack_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_config(const fs::path& path) {
  write_text_file(path, R"({"num_entities": 6000, "num_suspicious": 100, "num_licit_subgraphs": 300,
                           "background_noise_edges": 3000, "feature_dim": 4, "seed": 3})");
}

}  // namespace

TEST_CASE("missing required flag is a usage error") {
  const Run r = run({"eval-cls"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--model") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
}

TEST_CASE("unknown flags and commands exit 1") {
  CHECK(run({"train", "--bogus"}).code == 1);
  CHECK(run({"launch"}).code == 1);
  CHECK(run({}).code == 1);
}

TEST_CASE("help and version exit 0") {
  const Run h = run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("bench-rec") != std::string::npos);
  CHECK(run({"--version"}).code == 0);
}

TEST_CASE("unreadable inputs and bad values exit 1, failed writes exit 2") {
  const auto dir = scratch("errors");
  CHECK(run({"eval-cls", "--model", (dir / "nope.json").string(), "--data-dir", dir.string()}).code == 1);
  write_config(dir / "gen.json");
  REQUIRE(run({"generate", "--config", (dir / "gen.json").string(), "--out-dir", (dir / "d").string()}).code == 0);
  CHECK(run({"train", "--data-dir", (dir / "d").string(), "--arch", "cnn", "--out", (dir / "m.json").string()}).code ==
        1);
  write_text_file(dir / "bad.json", R"({"num_entities": 10, "num_suspicious": 100})");
  CHECK(run({"generate", "--config", (dir / "bad.json").string(), "--out-dir", (dir / "x").string()}).code == 1);
  write_text_file(dir / "blocker", "");
  const Run r = run({"graphlets", "--subgraphs", (dir / "d" / "subgraphs.jsonl").string(), "--out",
                     (dir / "blocker" / "g.json").string()});
  CHECK(r.code == 2);
  CHECK(!r.err.empty());
}

TEST_CASE("pipeline commands chain and are reproducible") {
  const auto dir = scratch("pipeline");
  write_config(dir / "gen.json");
  const std::string d = (dir / "data").string();
  REQUIRE(run({"generate", "--config", (dir / "gen.json").string(), "--out-dir", d}).code == 0);
  CHECK(fs::exists(dir / "data" / "manifest.json"));

  const Run g = run({"graphlets", "--subgraphs", d + "/subgraphs.jsonl", "--out", (dir / "glets.json").string()});
  REQUIRE(g.code == 0);
  const auto glets = nlohmann::json::parse(read_text_file(dir / "glets.json"));
  CHECK(glets["counts"]["edge"].get<int>() > 0);
  CHECK(glets["by_label"].contains("suspicious"));

  // Flags from --config apply, explicit flags override them.
  write_text_file(dir / "train.json", R"({"epochs": 1, "hidden": 8, "batch_size": 64})");
  const std::vector<std::string> train_args{"train",     "--config", (dir / "train.json").string(),
                                            "--data-dir", d,          "--epochs",
                                            "6",          "--out",    (dir / "m.json").string()};
  REQUIRE(run(train_args).code == 0);
  const Model m = load_checkpoint(dir / "m.json");
  CHECK(m.config().hidden_dim == 8);
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "m.json.manifest.json"));
  CHECK(manifest["config"]["--epochs"] == "6");
  CHECK(manifest["input_digests"].size() == 3);
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["seeds"]["split_seed"] == 0);

  const std::string first = sha256_file(dir / "m.json");
  std::vector<std::string> again = train_args;
  again.back() = (dir / "m2.json").string();
  REQUIRE(run(again).code == 0);
  CHECK(sha256_file(dir / "m2.json") == first);

  REQUIRE(run({"finetune", "--model", (dir / "m.json").string(), "--data-dir", d, "--epochs", "2", "--out",
               (dir / "f.json").string()})
              .code == 0);

  const Run ev = run({"eval-cls", "--model", (dir / "f.json").string(), "--data-dir", d});
  REQUIRE(ev.code == 0);
  const auto metrics = nlohmann::json::parse(ev.out);
  CHECK(metrics["pr_auc"].get<double>() >= 0.0);
  CHECK(metrics["pr_auc"].get<double>() <= 1.0);

  REQUIRE(run({"classify", "--model", (dir / "f.json").string(), "--data-dir", d, "--out",
               (dir / "scores.csv").string()})
              .code == 0);
  CHECK(read_text_file(dir / "scores.csv").rfind("subgraph_id,score,label_pred\n", 0) == 0);

  write_text_file(dir / "s.txt", "0\n1\n2\n3\n4\n");
  write_text_file(dir / "r.txt", "5\n6\n7\n");
  REQUIRE(run({"filter", "--model", (dir / "f.json").string(), "--data-dir", d, "--senders",
               (dir / "s.txt").string(), "--receivers", (dir / "r.txt").string(), "--k", "4", "--out",
               (dir / "links.csv").string()})
              .code == 0);
  const std::string links = read_text_file(dir / "links.csv");
  CHECK(links.rfind("rank,sender,receiver,score\n", 0) == 0);
  CHECK(std::count(links.begin(), links.end(), '\n') == 5);
  write_text_file(dir / "bad.txt", "0\n999999\n");
  CHECK(run({"filter", "--model", (dir / "f.json").string(), "--data-dir", d, "--senders",
             (dir / "bad.txt").string(), "--receivers", (dir / "r.txt").string(), "--out",
             (dir / "l2.csv").string()})
            .code == 1);

  const std::vector<std::string> bench{"bench-rec",     "--model",  (dir / "f.json").string(),
                                       "--data-dir",    d,          "--settings",
                                       "1+3@1,1+5@3",   "--n-instances", "8",
                                       "--pool",        "all",      "--out",
                                       (dir / "r1.json").string()};
  REQUIRE(run(bench).code == 0);
  auto bench2 = bench;
  bench2.back() = (dir / "r2.json").string();
  REQUIRE(run(bench2).code == 0);
  CHECK(read_text_file(dir / "r1.json") == read_text_file(dir / "r2.json"));
  const auto results = nlohmann::json::parse(read_text_file(dir / "r1.json"));
  REQUIRE(results["results"].size() == 2);
  for (const char* key : {"hr_mean", "hr_se", "ndcg_mean", "ndcg_se", "density_mean"}) {
    CHECK(results["results"][0].contains(key));
  }
  CHECK(fs::exists(dir / "r1.json.manifest.json"));
}
