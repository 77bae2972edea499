#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "revtrack/classifier.hpp"
#include "revtrack/pair.hpp"
#include "revtrack/random.hpp"

namespace revtrack {

enum class SplitRule : std::uint8_t { kSortedId, kSeededRandom };

SplitRule parse_split_rule(std::string_view text);

struct FilterConfig {
  std::size_t k = 10;
  double alpha_keep = 1.5;
  SplitRule split_rule = SplitRule::kSortedId;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Candidate {
  SRPair pair;
  std::optional<double> score;
};

/// Working list of candidate pairs. Products S_i x R_i are pairwise disjoint
/// subsets of the initial S x R.
struct CandidateList {
  std::vector<Candidate> entries;
  std::size_t iteration = 0;
};

struct SplitHalves {
  std::vector<NodeId> senders_first;
  std::vector<NodeId> senders_second;
  std::vector<NodeId> receivers_first;
  std::vector<NodeId> receivers_second;
};

/// Halves both sides; the first half gets ceil(n/2) members. Under
/// kSortedId the first half holds the lowest ids; under kSeededRandom the
/// assignment is a seeded shuffle. Halves are returned sorted.
SplitHalves split_pair(const SRPair& pair, SplitRule rule, std::uint64_t seed);

/// Replaces every non-1-1 pair by its nonempty quadrants in the order
/// (S1,R1), (S1,R2), (S2,R1), (S2,R2). 1-1 pairs are carried unchanged.
CandidateList expand(const CandidateList& list, SplitRule rule = SplitRule::kSortedId,
                     std::uint64_t seed = 0);

struct FilterStats {
  std::size_t iterations = 0;
  std::size_t scored_pairs = 0;      // classifier evaluations
  std::size_t scorer_failures = 0;   // pairs that fell back to score 0
  std::vector<std::size_t> keep_counts;
};

/// When the list is longer than keep_count, scores unscored entries, stable
/// sorts by score descending and truncates. Otherwise returns the list
/// unchanged. Pairs whose scoring fails (exception or non-finite value)
/// get score 0 and are counted in stats->scorer_failures.
CandidateList filter_step(const CandidateList& list, std::size_t keep_count, const PairScorer& scorer,
                          FilterStats* stats = nullptr);

/// ceil(log2(max(|S|, |R|))): number of halvings until a pair is 1-1.
std::size_t filter_depth(const SRPair& initial);

/// round_half_even(k * (alpha - (alpha - 1) * t / T)); k when T == 0.
std::size_t keep_schedule(const FilterConfig& config, std::size_t t, std::size_t total);

struct ScoredLink {
  NodeId sender = 0;
  NodeId receiver = 0;
  double score = 0.0;

  friend bool operator==(const ScoredLink&, const ScoredLink&) = default;
};

/// Iterative bisection filtering. Returns up to k 1-1 links drawn from the
/// initial S x R, sorted by score descending (stable). When |S| * |R| < k
/// every link is returned.
std::vector<ScoredLink> rev_filter(const SRPair& initial, const FilterConfig& config,
                                   const PairScorer& scorer, FilterStats* stats = nullptr);

/// Runs rev_filter on `partitions` contiguous chunks of the sender set and
/// merges the per-chunk results into a single top-k list.
std::vector<ScoredLink> rev_filter_partitioned(const SRPair& initial, const FilterConfig& config,
                                               const PairScorer& scorer, std::size_t partitions,
                                               FilterStats* stats = nullptr);

/// One-pass baseline: scores every 1-1 pair and keeps the top k (stable on
/// ties, sender-major enumeration order).
std::vector<ScoredLink> one_pass_top_k(const SRPair& initial, std::size_t k, const PairScorer& scorer,
                                       FilterStats* stats = nullptr);

// --- merge-augmented fine-tuning -------------------------------------------

struct AugmentConfig {
  double gamma = 0.4;
  std::pair<int, int> merge_range{1, 20};
  std::uint64_t seed = 0;
  /// Output size; 0 means "same as input".
  std::size_t num_pairs = 0;

  void validate() const;
};

/// P(n_merge = t) proportional to exp(-gamma * t) on the merge range,
/// renormalized. Index i holds P(n_merge = merge_range.first + i).
std::vector<double> merge_pmf(const AugmentConfig& config);

/// Inverse-CDF draw from merge_pmf.
int draw_merge_count(std::span<const double> pmf, int first, Rng& rng);

/// Each output pair is the union of n_merge distinct input pairs; its label
/// is 1 when any component is 1.
std::vector<LabeledPair> make_finetune_set(std::span<const LabeledPair> pairs, const AugmentConfig& config);

struct FinetuneConfig {
  AugmentConfig augment;
  TrainConfig train;  // model config ignored

  FinetuneConfig();
};

/// Continues Adam training on merged pairs built from `train_pairs`, with
/// early stopping on merged pairs built from `valid_pairs`.
TrainResult finetune(const Model& model, std::span<const LabeledPair> train_pairs,
                     std::span<const LabeledPair> valid_pairs, const FeatureFn& features,
                     const FinetuneConfig& config);

}  // namespace revtrack
