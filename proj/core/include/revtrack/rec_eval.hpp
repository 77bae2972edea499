#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "revtrack/graph.hpp"
#include "revtrack/pair.hpp"
#include "revtrack/rev_filter.hpp"

namespace revtrack {

struct Link {
  NodeId sender = 0;
  NodeId receiver = 0;
  friend auto operator<=>(const Link&, const Link&) = default;
};

/// Candidate bipartite structure for one recommendation query.
struct RecTestInstance {
  std::vector<NodeId> senders;    // sorted, unique
  std::vector<NodeId> receivers;  // sorted, unique
  std::vector<Link> truth_links;  // sorted, size n_plus
  std::size_t n_plus = 0;
  std::size_t n_minus = 0;
  double density = 0.0;  // n_plus / (|S| * |R|)

  SRPair candidates() const { return {senders, receivers}; }
};

/// Sampling pools derived from labeled subgraphs: suspicious subgraphs that
/// induce a single link, and licit subgraphs with both boundary sides.
class RecPool {
 public:
  static RecPool build(const BackgroundGraph& graph, std::span<const Subgraph> subgraphs);

  const std::vector<Link>& positives() const { return positives_; }
  const std::vector<SRPair>& negatives() const { return negatives_; }

 private:
  std::vector<Link> positives_;    // deduplicated by link
  std::vector<SRPair> negatives_;
};

/// Samples n_plus positive links and n_minus licit subgraphs without
/// replacement and merges their boundaries. Throws ValidationError when a
/// pool is too small.
RecTestInstance build_rec_instance(const RecPool& pool, std::size_t n_plus, std::size_t n_minus,
                                   std::uint64_t seed);
RecTestInstance build_rec_instance(std::span<const Subgraph> subgraphs, std::size_t n_plus,
                                   std::size_t n_minus, std::uint64_t seed, const BackgroundGraph& graph);

/// |top-k ∩ truth| / |truth|. Throws ValidationError on empty truth.
double hit_ratio(std::span<const Link> ranked, std::span<const Link> truth, std::size_t k);

/// Binary-relevance DCG with a log2(i + 1) discount, over the ideal DCG of
/// min(|truth|, k) hits.
double ndcg(std::span<const Link> ranked, std::span<const Link> truth, std::size_t k);

struct RecMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
  std::size_t k = 0;
};

RecMetrics rank_metrics(std::span<const Link> ranked, std::span<const Link> truth, std::size_t k);

/// "n_plus+n_minus@k", e.g. "1+5@1".
struct RecSetting {
  std::size_t n_plus = 1;
  std::size_t n_minus = 0;
  std::size_t k = 1;

  std::string to_string() const;
  static RecSetting parse(std::string_view text);
  friend bool operator==(const RecSetting&, const RecSetting&) = default;
};

/// Comma-separated list of settings.
std::vector<RecSetting> parse_settings(std::string_view text);

enum class Variant : std::uint8_t { kFull, kNoIterations, kNoFinetune, kKeepOne };

std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view text);

struct BenchmarkConfig {
  FilterConfig filter;  // k is taken from each setting
  Variant variant = Variant::kFull;
  std::size_t n_instances = 256;
  std::uint64_t seed = 0;  // instance i uses seed + i
  std::size_t senders_partition = 1;
};

struct SettingResult {
  RecSetting setting;
  std::size_t n_instances = 0;
  double hr_mean = 0.0;
  double hr_se = 0.0;
  double ndcg_mean = 0.0;
  double ndcg_se = 0.0;
  double density_mean = 0.0;
  std::size_t scorer_failures = 0;
};

/// Ranks one instance with the method selected by `config.variant`. The
/// no-finetune variant differs only in the scorer the caller passes.
std::vector<Link> recommend(const RecTestInstance& instance, std::size_t k, const BenchmarkConfig& config,
                            const PairScorer& scorer, FilterStats* stats = nullptr);

/// Runs n_instances seeded instances per setting; instances run in parallel.
std::vector<SettingResult> run_benchmark(const RecPool& pool, std::span<const RecSetting> settings,
                                         const BenchmarkConfig& config, const PairScorer& scorer);

nlohmann::json to_json(const SettingResult& result);
SettingResult setting_result_from_json(const nlohmann::json& j);

}  // namespace revtrack
