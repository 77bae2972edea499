// Acceptance suite: one pass/fail line per criterion.
//
//   revtrack_acceptance [--only ID]... [--workdir DIR] [--threads N]
//
// Exit status is 0 when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revtrack/classifier.hpp"
#include "revtrack/cli.hpp"
#include "revtrack/error.hpp"
#include "revtrack/graph.hpp"
#include "revtrack/graph_io.hpp"
#include "revtrack/graphlets.hpp"
#include "revtrack/model.hpp"
#include "revtrack/nn.hpp"
#include "revtrack/parallel.hpp"
#include "revtrack/random.hpp"
#include "revtrack/rec_eval.hpp"
#include "revtrack/rev_filter.hpp"
#include "revtrack/synth.hpp"
#include "support.hpp"

using namespace revtrack;
namespace fs = std::filesystem;
namespace rt = revtrack::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Datasets and models shared by the trained criteria; built on first use.
class Workspace {
 public:
  explicit Workspace(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }

  // 5000 labeled subgraphs, class means 2 sigma apart.
  const SynthDataset& data() {
    if (!data_) {
      SynthConfig config;
      config.num_entities = 50000;
      config.num_suspicious = 1000;
      config.num_licit_subgraphs = 4000;
      config.feature_noise_sigma = 1.0;
      config.class_means = default_class_means(config.feature_dim, 2.0);
      config.seed = 1;
      data_ = generate(config);
      pairs_ = make_pairs(data_->graph, data_->subgraphs);
    }
    return *data_;
  }

  const PairSet& pairs() {
    data();
    return pairs_;
  }

  SplitIndices split_for(std::uint64_t seed, double few_shot) {
    SplitSpec spec;
    spec.seed = seed;
    spec.few_shot = few_shot;
    return split(pairs().pairs, spec);
  }

  static TrainConfig train_config(std::size_t feature_dim, std::uint64_t seed) {
    TrainConfig config;
    config.model.feature_dim = feature_dim;
    config.max_epochs = 60;
    config.patience = 15;
    config.seed = seed;
    return config;
  }

  const Model& base_model() {
    if (!base_) {
      const auto idx = split_for(0, 1.0);
      const auto train_set = select(pairs().pairs, idx.train);
      const auto valid_set = select(pairs().pairs, idx.valid);
      base_ = train(train_set, valid_set, graph_features(data().graph),
                    train_config(data().graph.feature_dim(), 0))
                  .model;
    }
    return *base_;
  }

  const Model& tuned_model() {
    if (!tuned_) {
      const auto idx = split_for(0, 1.0);
      const auto train_set = select(pairs().pairs, idx.train);
      const auto valid_set = select(pairs().pairs, idx.valid);
      FinetuneConfig config;
      config.train.seed = 0;
      tuned_ = finetune(base_model(), train_set, valid_set, graph_features(data().graph), config).model;
    }
    return *tuned_;
  }

  // Recommendation pool built from the test-split subgraphs only.
  const RecPool& test_pool() {
    if (!test_pool_) {
      const auto idx = split_for(0, 1.0);
      std::set<std::string> keep;
      for (std::size_t i : idx.test) {
        for (const auto& id : pairs().pairs[i].origin) keep.insert(id);
      }
      std::vector<Subgraph> subset;
      for (const auto& sg : data().subgraphs) {
        if (keep.contains(sg.id)) subset.push_back(sg);
      }
      test_pool_ = RecPool::build(data().graph, subset);
    }
    return *test_pool_;
  }

 private:
  fs::path dir_;
  std::optional<SynthDataset> data_;
  PairSet pairs_;
  std::optional<Model> base_;
  std::optional<Model> tuned_;
  std::optional<RecPool> test_pool_;
};

// --- 1: boundary extraction --------------------------------------------------

Outcome boundary_oracle(Workspace&) {
  const auto start = Clock::now();
  Rng rng(101);
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  std::size_t max_nodes = 0;
  for (int g = 0; g < 10; ++g) {
    const std::size_t n = 1000 + uniform_index(rng, 9001);
    max_nodes = std::max(max_nodes, n);
    const BackgroundGraph graph = rt::random_graph(n, (2 + uniform_index(rng, 3)) * n, rng);
    for (int i = 0; i < 100; ++i) {
      const Subgraph h = rt::random_subgraph(graph, 40, rng);
      mismatches += extract_boundary(graph, h) != rt::naive_boundary(graph, h);
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && checked == 1000 && elapsed < 60.0,
          std::to_string(checked) + " subgraphs on backgrounds of <= " + std::to_string(max_nodes) + " nodes, " +
              std::to_string(mismatches) + " mismatches, " + fmt(elapsed, 1) + " s (limit 60 s)"};
}

// --- 2: cycle breaking --------------------------------------------------------

Subgraph random_cyclic_subgraph(Rng& rng) {
  const std::size_t n = 2 + uniform_index(rng, 14);
  std::vector<NodeId> nodes(n);
  for (std::size_t i = 0; i < n; ++i) nodes[i] = static_cast<NodeId>(i);
  std::vector<Edge> edges;
  const double p = uniform(rng, 0.05, 0.5);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u != v && uniform01(rng) < p) edges.push_back({u, v});
    }
  }
  // Plant one directed cycle through a random subset.
  std::vector<NodeId> ring = nodes;
  shuffle(std::span<NodeId>(ring), rng);
  ring.resize(2 + uniform_index(rng, n - 1));
  for (std::size_t i = 0; i < ring.size(); ++i) edges.push_back({ring[i], ring[(i + 1) % ring.size()]});
  shuffle(std::span<Edge>(edges), rng);
  return rt::make_subgraph(nodes, edges);
}

Outcome cycle_breaking(Workspace&) {
  const auto start = Clock::now();
  Rng rng(202);
  std::size_t failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const Subgraph h = random_cyclic_subgraph(rng);
    if (rt::is_acyclic(h.nodes, h.edges)) {
      ++failures;  // generator bug: input must be cyclic
      continue;
    }
    const Subgraph dag = break_cycles(h);
    bool ok = rt::is_acyclic(dag.nodes, dag.edges) && dag.nodes == h.nodes;
    // Surviving edges form a subsequence of the input edges.
    std::size_t j = 0;
    for (const Edge& e : h.edges) {
      if (j < dag.edges.size() && dag.edges[j] == e) ++j;
    }
    ok = ok && j == dag.edges.size() && dag.edges.size() < h.edges.size();
    ok = ok && break_cycles(dag) == dag;
    failures += !ok;
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < 30.0,
          "1000 cyclic subgraphs, " + std::to_string(failures) + " failures, " + fmt(elapsed, 2) + " s (limit 30 s)"};
}

// --- 3: graphlets -------------------------------------------------------------

Outcome graphlet_oracle(Workspace&) {
  Rng rng(303);
  std::size_t mismatches = 0;
  std::uint64_t total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 10);
    const double p = uniform(rng, 0.05, 0.95);
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        if (uniform01(rng) >= p) continue;
        adj[u][v] = adj[v][u] = true;
        const double dir = uniform01(rng);
        if (dir < 0.4) {
          edges.push_back({u, v});
        } else if (dir < 0.8) {
          edges.push_back({v, u});
        } else {
          edges.push_back({u, v});
          edges.push_back({v, u});
        }
      }
    }
    std::vector<NodeId> nodes(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = static_cast<NodeId>(i);
    const std::vector<Subgraph> sg{rt::make_subgraph(nodes, edges)};
    const auto census = graphlet_census(sg);
    const auto expected = rt::brute_force_graphlets(adj);
    mismatches += census.counts != expected;
    for (auto c : expected) total += c;
  }
  return {mismatches == 0,
          "200 graphs of <= 10 nodes, " + std::to_string(total) + " graphlets, " + std::to_string(mismatches) +
              " mismatched histograms"};
}

// --- 4: neural correctness ----------------------------------------------------

Outcome neural_correctness(Workspace&) {
  Rng rng(404);
  double worst_grad = 0.0;
  std::size_t configs = 0;
  for (Arch arch : {Arch::kDeepSets, Arch::kBipartite}) {
    for (int trial = 0; trial < 25; ++trial) {
      rt::FdCase c = rt::random_case(arch, rng);
      worst_grad = std::max(worst_grad, rt::gradient_error(c));
      ++configs;
    }
  }

  // Shuffling rows within each set leaves embeddings and model scores fixed.
  double worst_perm = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 2 + uniform_index(rng, 5);
    const std::size_t h = 3 + uniform_index(rng, 8);
    const nn::Pool pool = std::array{nn::Pool::kSum, nn::Pool::kMean, nn::Pool::kMax}[trial % 3];
    const std::vector<std::size_t> d1{d, h, h};
    const std::vector<std::size_t> d2{h, h, h};
    nn::DeepSets ds{nn::Mlp::glorot(d1, nn::Activation::kRelu, nn::Activation::kRelu, rng), pool,
                    nn::Mlp::glorot(d2, nn::Activation::kRelu, nn::Activation::kIdentity, rng)};
    nn::Bipartite bp{uniform(rng, -0.5, 0.5), nn::Mlp::glorot(d1, nn::Activation::kRelu, nn::Activation::kRelu, rng),
                     pool, nn::Mlp::glorot(d2, nn::Activation::kRelu, nn::Activation::kIdentity, rng)};
    const auto ns = static_cast<nn::Index>(1 + uniform_index(rng, 12));
    const auto nr = static_cast<nn::Index>(1 + uniform_index(rng, 12));
    nn::Matrix s(ns, static_cast<nn::Index>(d));
    nn::Matrix r(nr, static_cast<nn::Index>(d));
    for (nn::Index i = 0; i < s.size(); ++i) s.data()[i] = standard_normal(rng);
    for (nn::Index i = 0; i < r.size(); ++i) r.data()[i] = standard_normal(rng);
    auto permuted = [&](const nn::Matrix& m) {
      std::vector<nn::Index> order(static_cast<std::size_t>(m.rows()));
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<nn::Index>(i);
      shuffle(std::span<nn::Index>(order), rng);
      nn::Matrix out(m.rows(), m.cols());
      for (nn::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(order[static_cast<std::size_t>(i)]);
      return out;
    };
    const nn::Matrix sp = permuted(s);
    const nn::Matrix rp = permuted(r);
    worst_perm = std::max(worst_perm, (nn::deepsets_embed(ds, s) - nn::deepsets_embed(ds, sp)).cwiseAbs().maxCoeff());
    worst_perm =
        std::max(worst_perm, (nn::bipartite_embed(bp, s, r) - nn::bipartite_embed(bp, sp, rp)).cwiseAbs().maxCoeff());
  }
  return {worst_grad < 1e-4 && worst_perm < 1e-6 && configs >= 40,
          std::to_string(configs) + " gradient configs, worst relative error " + sci(worst_grad) +
              " (limit 1e-4); worst permutation change " + sci(worst_perm) + " (limit 1e-6)"};
}

// --- 5: classification --------------------------------------------------------

Outcome classification(Workspace& ws) {
  const auto start = Clock::now();
  const auto& pairs = ws.pairs().pairs;
  const FeatureFn features = graph_features(ws.data().graph);
  const std::size_t dim = ws.data().graph.feature_dim();

  auto run = [&](std::uint64_t seed, double p) {
    const auto idx = ws.split_for(seed, p);
    const auto train_set = select(pairs, idx.train);
    const auto valid_set = select(pairs, idx.valid);
    const auto test_set = select(pairs, idx.test);
    const Model model = train(train_set, valid_set, features, Workspace::train_config(dim, seed)).model;
    return evaluate(model, test_set, features, 0.5);
  };

  const ClassifierMetrics full = run(0, 1.0);
  const double full_time = seconds_since(start);
  const bool full_ok = full.pr_auc >= 0.95 && full.f1 >= 0.90 && full_time < 300.0;

  const std::vector<double> fractions{0.03, 0.1, 0.3, 1.0};
  std::vector<double> means;
  for (double p : fractions) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) sum += run(seed, p).pr_auc;
    means.push_back(sum / 3.0);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < means.size(); ++i) monotone = monotone && means[i] >= means[i - 1];

  std::string curve;
  for (std::size_t i = 0; i < means.size(); ++i) {
    curve += (i ? ", " : "") + fmt(fractions[i], 2) + ":" + fmt(means[i]);
  }
  return {full_ok && monotone,
          "ds PR-AUC " + fmt(full.pr_auc) + " (>= 0.95), F1 " + fmt(full.f1) + " (>= 0.90) on " +
              std::to_string(full.positives + full.negatives) + " test pairs in " + fmt(full_time, 1) +
              " s; few-shot mean PR-AUC {" + curve + "}" + (monotone ? " non-decreasing" : " NOT monotone")};
}

// --- 6: oracle completeness ---------------------------------------------------

Outcome oracle_completeness(Workspace& ws) {
  const RecPool pool = RecPool::build(ws.data().graph, ws.data().subgraphs);
  std::string detail;
  bool ok = true;
  for (const RecSetting setting : {RecSetting{1, 10, 1}, RecSetting{3, 100, 10}}) {
    std::size_t hits = 0;
    std::size_t wanted = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
      const RecTestInstance inst = build_rec_instance(pool, setting.n_plus, setting.n_minus, 6000 + i);
      std::set<std::pair<NodeId, NodeId>> truth;
      for (const Link& l : inst.truth_links) truth.insert({l.sender, l.receiver});
      const rt::OracleScorer scorer(truth);
      BenchmarkConfig config;
      const auto ranked = recommend(inst, setting.k, config, scorer);
      for (const Link& l : inst.truth_links) {
        hits += std::find(ranked.begin(), ranked.end(), l) != ranked.end();
      }
      wanted += inst.truth_links.size();
      ok = ok && hit_ratio(ranked, inst.truth_links, setting.k) == 1.0;
    }
    detail += (detail.empty() ? "" : "; ") + setting.to_string() + " HR " +
              fmt(static_cast<double>(hits) / static_cast<double>(wanted)) + " over 100 instances";
  }
  return {ok, detail + " (must be exactly 1)"};
}

// --- 7 and 8: trained filtering ---------------------------------------------

SettingResult bench(Workspace& ws, const RecSetting& setting, Variant variant, const Model& model) {
  BenchmarkConfig config;
  config.variant = variant;
  config.n_instances = 64;
  config.seed = 7000;
  const ModelScorer scorer(model, graph_features(ws.data().graph));
  const std::vector<RecSetting> settings{setting};
  return run_benchmark(ws.test_pool(), settings, config, scorer).front();
}

std::string describe(const SettingResult& r) {
  return r.setting.to_string() + " HR " + fmt(r.hr_mean) + " +- " + fmt(r.hr_se) + " at density " +
         fmt(r.density_mean * 100.0, 3) + "%";
}

const RecSetting kDenseSetting{1, 8, 3};
const RecSetting kSparseSetting{1, 30, 10};

Outcome trained_filter(Workspace& ws) {
  const auto start = Clock::now();
  const Model& tuned = ws.tuned_model();
  const SettingResult r = bench(ws, kDenseSetting, Variant::kFull, tuned);
  const double elapsed = seconds_since(start);
  const bool density_ok = r.density_mean >= 0.005 && r.density_mean <= 0.02;
  return {r.hr_mean >= 0.80 && density_ok && elapsed < 600.0,
          "fine-tuned " + describe(r) + " over " + std::to_string(r.n_instances) + " instances (HR >= 0.80), " +
              fmt(elapsed, 1) + " s including training (limit 600 s)"};
}

Outcome ablation_finetune(Workspace& ws) {
  const SettingResult full = bench(ws, kSparseSetting, Variant::kFull, ws.tuned_model());
  const SettingResult nf = bench(ws, kSparseSetting, Variant::kNoFinetune, ws.base_model());
  const double gap = full.hr_mean - nf.hr_mean;
  return {full.density_mean <= 0.002 && gap >= 0.10,
          "full " + describe(full) + " vs no-finetune HR " + fmt(nf.hr_mean) + ": gap " + fmt(gap) + " (>= 0.10)"};
}

Outcome ablation_iterations(Workspace& ws) {
  const SettingResult full = bench(ws, kSparseSetting, Variant::kFull, ws.tuned_model());
  const SettingResult ni = bench(ws, kSparseSetting, Variant::kNoIterations, ws.tuned_model());
  const double gap = full.hr_mean - ni.hr_mean;
  return {full.density_mean <= 0.002 && gap >= 0.10,
          "full " + describe(full) + " vs no-iter HR " + fmt(ni.hr_mean) + ": gap " + fmt(gap) + " (>= 0.10)"};
}

// --- 9: ranking metrics -------------------------------------------------------

Outcome metric_oracles(Workspace&) {
  std::vector<Link> universe;
  for (NodeId i = 0; i < 6; ++i) universe.push_back({i, i + 100});
  std::vector<std::vector<Link>> truths;
  for (unsigned mask = 1; mask < 64; ++mask) {
    std::vector<Link> t;
    for (unsigned i = 0; i < 6; ++i) {
      if (mask >> i & 1u) t.push_back(universe[i]);
    }
    if (t.size() <= 3) truths.push_back(t);
  }
  std::vector<Link> ranked;
  std::vector<bool> used(6, false);
  std::size_t lists = 0;
  std::size_t mismatches = 0;
  std::function<void()> visit = [&] {
    ++lists;
    for (const auto& t : truths) {
      for (std::size_t k = 1; k <= 6; ++k) {
        mismatches += hit_ratio(ranked, t, k) != rt::def_hr(ranked, t, k);
        mismatches += std::abs(ndcg(ranked, t, k) - rt::def_ndcg(ranked, t, k)) > 1e-12;
      }
    }
    if (ranked.size() == 6) return;
    for (std::size_t i = 0; i < 6; ++i) {
      if (used[i]) continue;
      used[i] = true;
      ranked.push_back(universe[i]);
      visit();
      ranked.pop_back();
      used[i] = false;
    }
  };
  visit();
  const std::vector<Link> truth{{1, 1}, {2, 2}};
  const std::vector<Link> worked{{1, 1}, {9, 9}, {2, 2}};
  const double value = ndcg(worked, truth, 3);
  const bool worked_ok = std::abs(value - 0.91972) < 1e-5;
  return {mismatches == 0 && worked_ok,
          std::to_string(lists) + " ranked lists x " + std::to_string(truths.size()) + " truth sets x k 1..6, " +
              std::to_string(mismatches) + " mismatches; worked NDCG " + fmt(value, 6) + " (0.91972)"};
}

// --- 10: merge-count distribution ---------------------------------------------

Outcome augmentation_distribution(Workspace&) {
  AugmentConfig config;
  config.gamma = 0.4;
  config.merge_range = {1, 20};
  // Reference pmf computed directly.
  std::vector<double> expected;
  double z = 0.0;
  for (int t = 1; t <= 20; ++t) z += std::exp(-0.4 * t);
  for (int t = 1; t <= 20; ++t) expected.push_back(std::exp(-0.4 * t) / z);

  const auto pmf = merge_pmf(config);
  Rng rng(1010);
  std::vector<std::size_t> hist(20, 0);
  const std::size_t draws = 100000;
  bool in_range = true;
  for (std::size_t i = 0; i < draws; ++i) {
    const int t = draw_merge_count(pmf, 1, rng);
    if (t < 1 || t > 20) {
      in_range = false;
      continue;
    }
    ++hist[static_cast<std::size_t>(t - 1)];
  }
  double worst = 0.0;
  double pmf_gap = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(hist[i]) / draws - expected[i]));
    pmf_gap = std::max(pmf_gap, std::abs(pmf[i] - expected[i]));
  }
  return {in_range && worst < 0.01 && pmf_gap < 1e-12,
          "100000 draws, gamma 0.4 on [1,20]: max |empirical - pmf| " + fmt(worst, 5) + " (limit 0.01)"};
}

// --- 11: determinism ----------------------------------------------------------

int dispatch(std::vector<std::string> args, std::string& log) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::dispatch(std::move(args), out, err);
  log += err.str();
  return code;
}

std::vector<std::string> write_id_files(const fs::path& data_dir, const fs::path& dir) {
  const SynthDataset data = load_dataset(data_dir);
  const RecTestInstance inst = plant_rec_instance(data, 2, 10, 11);
  std::ostringstream s;
  std::ostringstream r;
  for (NodeId v : inst.senders) s << data.graph.external_id(v) << '\n';
  for (NodeId v : inst.receivers) r << data.graph.external_id(v) << '\n';
  write_text_file(dir / "senders.txt", s.str());
  write_text_file(dir / "receivers.txt", r.str());
  return {(dir / "senders.txt").string(), (dir / "receivers.txt").string()};
}

// Runs generate -> train -> finetune -> filter -> bench-rec into `dir`.
// Returns the produced artifacts, or nothing when a step failed.
std::optional<std::vector<fs::path>> run_pipeline(const fs::path& dir, const fs::path& config_dir, std::string& log) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = (dir / "data").string();
  const std::string base = (dir / "base.json").string();
  const std::string tuned = (dir / "tuned.json").string();
  if (dispatch({"generate", "--config", (config_dir / "demo.json").string(), "--out-dir", data}, log) != 0) {
    return std::nullopt;
  }
  if (dispatch({"train", "--config", (config_dir / "demo-train.json").string(), "--data-dir", data, "--seed", "3",
                "--out", base},
               log) != 0) {
    return std::nullopt;
  }
  if (dispatch({"finetune", "--model", base, "--data-dir", data, "--epochs", "5", "--seed", "4", "--out", tuned},
               log) != 0) {
    return std::nullopt;
  }
  const auto ids = write_id_files(data, dir);
  if (dispatch({"filter", "--model", tuned, "--data-dir", data, "--senders", ids[0], "--receivers", ids[1], "--k",
                "5", "--split", "random", "--seed", "9", "--out", (dir / "links.csv").string()},
               log) != 0) {
    return std::nullopt;
  }
  if (dispatch({"bench-rec", "--model", tuned, "--data-dir", data, "--settings", "1+5@1,2+20@5", "--n-instances",
                "16", "--seed", "5", "--out", (dir / "bench.json").string()},
               log) != 0) {
    return std::nullopt;
  }
  return std::vector<fs::path>{"data/edges.csv", "data/nodes.csv", "data/subgraphs.jsonl", "base.json",
                               "tuned.json",     "links.csv",      "bench.json"};
}

fs::path find_config_dir() {
  for (fs::path p : {fs::path(REVTRACK_SOURCE_DIR) / "configs", fs::current_path() / "configs"}) {
    if (fs::exists(p / "demo.json")) return p;
  }
  throw revtrack::Error("configs/demo.json not found");
}

Outcome determinism(Workspace& ws) {
  const auto start = Clock::now();
  const fs::path config_dir = find_config_dir();
  std::string log;
  const auto a = run_pipeline(ws.dir() / "pipeline_a", config_dir, log);
  const auto b = run_pipeline(ws.dir() / "pipeline_b", config_dir, log);
  if (!a || !b) return {false, "pipeline step failed: " + log};
  std::size_t differing = 0;
  std::string names;
  for (const auto& rel : *a) {
    const bool same = read_text_file(ws.dir() / "pipeline_a" / rel) == read_text_file(ws.dir() / "pipeline_b" / rel);
    differing += !same;
    if (!same) names += " " + rel.string();
  }
  return {differing == 0, std::to_string(a->size()) + " artifacts compared, " + std::to_string(differing) +
                              " differ" + names + "; two runs in " + fmt(seconds_since(start), 1) + " s"};
}

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome(Workspace&)> run;
};

std::vector<Criterion> criteria() {
  return {
      {"1", "boundary extraction oracle", boundary_oracle},
      {"2", "cycle breaking", cycle_breaking},
      {"3", "graphlet census oracle", graphlet_oracle},
      {"4", "gradients and permutation invariance", neural_correctness},
      {"5", "subgraph classification", classification},
      {"6", "filter completeness with an oracle scorer", oracle_completeness},
      {"7", "trained filter at 1% density", trained_filter},
      {"8a", "ablation: full beats no-finetune", ablation_finetune},
      {"8b", "ablation: full beats no-iterations", ablation_iterations},
      {"9", "ranking metric oracles", metric_oracles},
      {"10", "merge-count distribution", augmentation_distribution},
      {"11", "pipeline determinism", determinism},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RevTrack acceptance suite"};
  std::vector<std::string> only;
  std::string workdir = (fs::temp_directory_path() / "revtrack_acceptance").string();
  std::size_t threads = 0;
  bool list = false;
  app.add_option("--only", only, "Run only these criterion ids (repeatable)");
  app.add_option("--workdir", workdir, "Scratch directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker thread cap");
  app.add_flag("--list", list, "List criteria and exit");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_max_threads(threads);

  const auto all = criteria();
  if (list) {
    for (const auto& c : all) std::cout << c.id << "  " << c.title << "\n";
    return 0;
  }
  for (const auto& id : only) {
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; })) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
  }

  Workspace ws(workdir);
  fs::create_directories(workdir);
  std::size_t failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome outcome;
    try {
      outcome = c.run(ws);
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failed += !outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << "  [" << c.id << "] " << c.title << ": " << outcome.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
