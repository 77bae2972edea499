#include "revtrack/rev_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "revtrack/error.hpp"

namespace revtrack {

SplitRule parse_split_rule(std::string_view text) {
  if (text == "sorted" || text == "sorted_id") return SplitRule::kSortedId;
  if (text == "random" || text == "seeded_random") return SplitRule::kSeededRandom;
  throw ValidationError("unknown split rule '" + std::string(text) + "' (expected sorted or random)");
}

void FilterConfig::validate() const {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (!(alpha_keep >= 1.0) || !std::isfinite(alpha_keep)) {
    throw ValidationError("alpha_keep must be a finite value >= 1");
  }
}

SplitHalves split_pair(const SRPair& pair, SplitRule rule, std::uint64_t seed) {
  auto halve = [&](const std::vector<NodeId>& side, std::uint64_t stream, std::vector<NodeId>& first,
                   std::vector<NodeId>& second) {
    std::vector<NodeId> items = side;
    if (rule == SplitRule::kSeededRandom) {
      std::sort(items.begin(), items.end());
      Rng rng(mix_seed(seed, stream));
      shuffle(std::span<NodeId>(items), rng);
    }
    const std::size_t cut = (items.size() + 1) / 2;
    first.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(cut));
    second.assign(items.begin() + static_cast<std::ptrdiff_t>(cut), items.end());
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
  };
  SplitHalves h;
  halve(pair.senders, 0, h.senders_first, h.senders_second);
  halve(pair.receivers, 1, h.receivers_first, h.receivers_second);
  return h;
}

CandidateList expand(const CandidateList& list, SplitRule rule, std::uint64_t seed) {
  CandidateList out;
  out.iteration = list.iteration + 1;
  out.entries.reserve(list.entries.size() * 4);
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const Candidate& c = list.entries[i];
    if (c.pair.one_to_one()) {
      out.entries.push_back(c);
      continue;
    }
    const SplitHalves h = split_pair(c.pair, rule, mix_seed(seed, i));
    for (const auto* s : {&h.senders_first, &h.senders_second}) {
      if (s->empty()) continue;
      for (const auto* r : {&h.receivers_first, &h.receivers_second}) {
        if (r->empty()) continue;
        out.entries.push_back({SRPair{*s, *r}, std::nullopt});
      }
    }
  }
  return out;
}

namespace {

// Scores pairs, isolating failures to single pairs.
std::vector<double> safe_score(std::span<const SRPair> pairs, const PairScorer& scorer, FilterStats* stats) {
  std::vector<double> scores;
  bool batch_ok = true;
  try {
    scores = scorer.score(pairs);
    batch_ok = scores.size() == pairs.size();
  } catch (const std::exception&) {
    batch_ok = false;
  }
  if (!batch_ok) {
    scores.assign(pairs.size(), 0.0);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      try {
        scores[i] = scorer.score(pairs.subspan(i, 1)).at(0);
      } catch (const std::exception&) {
        scores[i] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  for (double& s : scores) {
    if (!std::isfinite(s)) {
      s = 0.0;
      if (stats) ++stats->scorer_failures;
    }
  }
  if (stats) stats->scored_pairs += pairs.size();
  return scores;
}

void score_missing(CandidateList& list, const PairScorer& scorer, FilterStats* stats) {
  std::vector<std::size_t> missing;
  std::vector<SRPair> pairs;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    if (!list.entries[i].score) {
      missing.push_back(i);
      pairs.push_back(list.entries[i].pair);
    }
  }
  if (pairs.empty()) return;
  const auto scores = safe_score(pairs, scorer, stats);
  for (std::size_t j = 0; j < missing.size(); ++j) list.entries[missing[j]].score = scores[j];
}

void sort_by_score(CandidateList& list) {
  std::stable_sort(list.entries.begin(), list.entries.end(),
                   [](const Candidate& a, const Candidate& b) { return *a.score > *b.score; });
}

}  // namespace

CandidateList filter_step(const CandidateList& list, std::size_t keep_count, const PairScorer& scorer,
                          FilterStats* stats) {
  if (keep_count < 1) throw ValidationError("keep count must be at least 1");
  if (list.entries.size() <= keep_count) return list;
  CandidateList out = list;
  score_missing(out, scorer, stats);
  sort_by_score(out);
  out.entries.resize(keep_count);
  return out;
}

std::size_t filter_depth(const SRPair& initial) {
  std::size_t n = std::max(initial.senders.size(), initial.receivers.size());
  std::size_t depth = 0;
  while (n > 1) {
    n = (n + 1) / 2;
    ++depth;
  }
  return depth;
}

std::size_t keep_schedule(const FilterConfig& config, std::size_t t, std::size_t total) {
  if (total == 0) return config.k;
  const double k = static_cast<double>(config.k);
  const double frac = static_cast<double>(std::min(t, total)) / static_cast<double>(total);
  const double keep = std::nearbyint(k * (config.alpha_keep - (config.alpha_keep - 1.0) * frac));
  return std::max<std::size_t>(1, static_cast<std::size_t>(keep));
}

namespace {

std::vector<ScoredLink> to_links(const CandidateList& list) {
  std::vector<ScoredLink> out;
  out.reserve(list.entries.size());
  for (const Candidate& c : list.entries) {
    out.push_back({c.pair.senders.front(), c.pair.receivers.front(), c.score.value_or(0.0)});
  }
  return out;
}

void check_initial(const SRPair& initial) {
  if (initial.senders.empty() || initial.receivers.empty()) {
    throw ValidationError("rev_filter needs nonempty sender and receiver sets");
  }
}

}  // namespace

std::vector<ScoredLink> rev_filter(const SRPair& initial, const FilterConfig& config,
                                   const PairScorer& scorer, FilterStats* stats) {
  config.validate();
  check_initial(initial);
  FilterStats local;
  FilterStats* st = stats ? stats : &local;

  const std::size_t depth = filter_depth(initial);
  CandidateList list{{Candidate{initial, std::nullopt}}, 0};
  std::size_t t = 0;
  auto done = [&] {
    return list.entries.size() <= config.k &&
           std::all_of(list.entries.begin(), list.entries.end(),
                       [](const Candidate& c) { return c.pair.one_to_one(); });
  };
  while (!done()) {
    list = expand(list, config.split_rule, mix_seed(config.seed, t));
    const std::size_t keep = keep_schedule(config, t, depth);
    st->keep_counts.push_back(keep);
    list = filter_step(list, keep, scorer, st);
    ++t;
  }
  st->iterations = t;
  score_missing(list, scorer, st);
  sort_by_score(list);
  return to_links(list);
}

std::vector<ScoredLink> rev_filter_partitioned(const SRPair& initial, const FilterConfig& config,
                                               const PairScorer& scorer, std::size_t partitions,
                                               FilterStats* stats) {
  check_initial(initial);
  partitions = std::clamp<std::size_t>(partitions, 1, initial.senders.size());
  if (partitions == 1) return rev_filter(initial, config, scorer, stats);
  std::vector<ScoredLink> merged;
  const std::size_t n = initial.senders.size();
  for (std::size_t p = 0; p < partitions; ++p) {
    const std::size_t begin = p * n / partitions;
    const std::size_t end = (p + 1) * n / partitions;
    SRPair part{{initial.senders.begin() + static_cast<std::ptrdiff_t>(begin),
                 initial.senders.begin() + static_cast<std::ptrdiff_t>(end)},
                initial.receivers};
    FilterStats part_stats;
    auto links = rev_filter(part, config, scorer, &part_stats);
    if (stats) {
      stats->iterations += part_stats.iterations;
      stats->scored_pairs += part_stats.scored_pairs;
      stats->scorer_failures += part_stats.scorer_failures;
    }
    merged.insert(merged.end(), links.begin(), links.end());
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const ScoredLink& a, const ScoredLink& b) { return a.score > b.score; });
  if (merged.size() > config.k) merged.resize(config.k);
  return merged;
}

std::vector<ScoredLink> one_pass_top_k(const SRPair& initial, std::size_t k, const PairScorer& scorer,
                                       FilterStats* stats) {
  check_initial(initial);
  if (k < 1) throw ValidationError("k must be at least 1");
  const std::size_t nr = initial.receivers.size();
  const std::size_t total = initial.senders.size() * nr;
  std::vector<double> scores(total);
  constexpr std::size_t kChunk = 8192;
  std::vector<SRPair> chunk;
  for (std::size_t begin = 0; begin < total; begin += kChunk) {
    const std::size_t end = std::min(total, begin + kChunk);
    chunk.clear();
    for (std::size_t i = begin; i < end; ++i) {
      chunk.push_back({{initial.senders[i / nr]}, {initial.receivers[i % nr]}});
    }
    const auto s = safe_score(chunk, scorer, stats);
    std::copy(s.begin(), s.end(), scores.begin() + static_cast<std::ptrdiff_t>(begin));
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t top = std::min(k, total);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                    });
  std::vector<ScoredLink> out;
  for (std::size_t i = 0; i < top; ++i) {
    const std::size_t idx = order[i];
    out.push_back({initial.senders[idx / nr], initial.receivers[idx % nr], scores[idx]});
  }
  if (stats) stats->iterations = 1;
  return out;
}

void AugmentConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");
  if (merge_range.first < 1 || merge_range.second < merge_range.first) {
    throw ValidationError("merge range must satisfy 1 <= min <= max");
  }
}

std::vector<double> merge_pmf(const AugmentConfig& config) {
  config.validate();
  std::vector<double> pmf;
  for (int t = config.merge_range.first; t <= config.merge_range.second; ++t) {
    pmf.push_back(config.gamma * std::exp(-config.gamma * t));
  }
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return pmf;
}

int draw_merge_count(std::span<const double> pmf, int first, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    cumulative += pmf[i];
    if (u < cumulative) return first + static_cast<int>(i);
  }
  return first + static_cast<int>(pmf.size()) - 1;
}

std::vector<LabeledPair> make_finetune_set(std::span<const LabeledPair> pairs, const AugmentConfig& config) {
  if (pairs.empty()) throw ValidationError("cannot augment an empty pair set");
  const auto pmf = merge_pmf(config);
  Rng rng(mix_seed(config.seed, 0xa06));
  const std::size_t count = config.num_pairs == 0 ? pairs.size() : config.num_pairs;
  std::vector<LabeledPair> out;
  out.reserve(count);
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < count; ++i) {
    const auto n = std::min<std::size_t>(
        static_cast<std::size_t>(draw_merge_count(pmf, config.merge_range.first, rng)), pairs.size());
    picked.clear();
    while (picked.size() < n) {
      const std::size_t j = uniform_index(rng, pairs.size());
      if (std::find(picked.begin(), picked.end(), j) == picked.end()) picked.push_back(j);
    }
    if (n == 1) {
      out.push_back(pairs[picked.front()]);
      continue;
    }
    LabeledPair merged;
    for (std::size_t j : picked) {
      const LabeledPair& p = pairs[j];
      merged.pair.senders.insert(merged.pair.senders.end(), p.pair.senders.begin(), p.pair.senders.end());
      merged.pair.receivers.insert(merged.pair.receivers.end(), p.pair.receivers.begin(), p.pair.receivers.end());
      merged.label = std::max(merged.label, p.label);
      merged.origin.insert(merged.origin.end(), p.origin.begin(), p.origin.end());
    }
    for (auto* side : {&merged.pair.senders, &merged.pair.receivers}) {
      std::sort(side->begin(), side->end());
      side->erase(std::unique(side->begin(), side->end()), side->end());
    }
    out.push_back(std::move(merged));
  }
  return out;
}

FinetuneConfig::FinetuneConfig() {
  train.max_epochs = 30;
  train.learning_rate = 1e-4;
}

TrainResult finetune(const Model& model, std::span<const LabeledPair> train_pairs,
                     std::span<const LabeledPair> valid_pairs, const FeatureFn& features,
                     const FinetuneConfig& config) {
  if (config.train.max_epochs == 0) return {model, 0, {}};
  const auto augmented_train = make_finetune_set(train_pairs, config.augment);
  std::vector<LabeledPair> augmented_valid;
  if (!valid_pairs.empty()) {
    AugmentConfig valid_cfg = config.augment;
    valid_cfg.seed = mix_seed(config.augment.seed, 1);
    valid_cfg.num_pairs = 0;
    augmented_valid = make_finetune_set(valid_pairs, valid_cfg);
  }
  return continue_training(model, augmented_train, augmented_valid, features, config.train);
}

}  // namespace revtrack
