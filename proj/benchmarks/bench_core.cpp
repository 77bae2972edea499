#include <benchmark/benchmark.h>

#include <vector>

#include "revtrack/classifier.hpp"
#include "revtrack/graph.hpp"
#include "revtrack/graphlets.hpp"
#include "revtrack/rec_eval.hpp"
#include "revtrack/rev_filter.hpp"
#include "revtrack/synth.hpp"

namespace {

using namespace revtrack;

const SynthDataset& dataset() {
  static const SynthDataset data = [] {
    SynthConfig config;
    config.num_entities = 50000;
    config.num_suspicious = 1000;
    config.num_licit_subgraphs = 4000;
    config.seed = 1;
    return generate(config);
  }();
  return data;
}

Model untrained_model(std::size_t dim) {
  ModelConfig cfg;
  cfg.feature_dim = dim;
  return Model::create(cfg, 1);
}

void BM_Generate(benchmark::State& state) {
  SynthConfig config;
  config.num_entities = static_cast<std::size_t>(state.range(0));
  config.num_suspicious = config.num_entities / 100;
  config.num_licit_subgraphs = config.num_entities / 25;
  for (auto _ : state) benchmark::DoNotOptimize(generate(config));
}
BENCHMARK(BM_Generate)->Arg(20000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_ExtractBoundary(benchmark::State& state) {
  const auto& data = dataset();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_boundary(data.graph, data.subgraphs[i]));
    i = (i + 1) % data.subgraphs.size();
  }
}
BENCHMARK(BM_ExtractBoundary);

void BM_GraphletCensus(benchmark::State& state) {
  const auto& data = dataset();
  for (auto _ : state) benchmark::DoNotOptimize(graphlet_census(data.subgraphs));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * data.subgraphs.size()));
}
BENCHMARK(BM_GraphletCensus)->Unit(benchmark::kMillisecond);

void BM_ScorePairs(benchmark::State& state) {
  const auto& data = dataset();
  const PairSet pairs = make_pairs(data.graph, data.subgraphs);
  std::vector<SRPair> batch;
  for (const auto& p : pairs.pairs) batch.push_back(p.pair);
  const Model model = untrained_model(data.graph.feature_dim());
  const FeatureFn features = graph_features(data.graph);
  for (auto _ : state) benchmark::DoNotOptimize(score_pairs(model, batch, features));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}
BENCHMARK(BM_ScorePairs)->Unit(benchmark::kMillisecond);

// Iterative filtering against the one-pass baseline on the same instance.
void filter_bench(benchmark::State& state, bool iterative) {
  const auto& data = dataset();
  const RecPool pool = RecPool::build(data.graph, data.subgraphs);
  const RecTestInstance inst = build_rec_instance(pool, 1, static_cast<std::size_t>(state.range(0)), 3);
  const Model model = untrained_model(data.graph.feature_dim());
  FilterConfig config;
  config.k = 10;
  for (auto _ : state) {
    // A fresh scorer per run so the encoding cache starts cold.
    const ModelScorer scorer(model, graph_features(data.graph));
    if (iterative) {
      benchmark::DoNotOptimize(rev_filter(inst.candidates(), config, scorer));
    } else {
      benchmark::DoNotOptimize(one_pass_top_k(inst.candidates(), config.k, scorer));
    }
  }
  state.counters["links"] = static_cast<double>(inst.senders.size() * inst.receivers.size());
}
void BM_RevFilter(benchmark::State& state) { filter_bench(state, true); }
void BM_OnePass(benchmark::State& state) { filter_bench(state, false); }
BENCHMARK(BM_RevFilter)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OnePass)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_FinetuneSet(benchmark::State& state) {
  const auto& data = dataset();
  const PairSet pairs = make_pairs(data.graph, data.subgraphs);
  AugmentConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(make_finetune_set(pairs.pairs, config));
}
BENCHMARK(BM_FinetuneSet)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
