#include "revtrack/rec_eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "revtrack/error.hpp"
#include "revtrack/parallel.hpp"
#include "revtrack/random.hpp"

namespace revtrack {

RecPool RecPool::build(const BackgroundGraph& graph, std::span<const Subgraph> subgraphs) {
  std::vector<BoundarySets> boundaries(subgraphs.size());
  parallel_for(subgraphs.size(), [&](std::size_t i) {
    if (subgraphs[i].label) boundaries[i] = extract_boundary(graph, subgraphs[i]);
  });
  RecPool pool;
  std::set<Link> seen;
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    const auto& label = subgraphs[i].label;
    const BoundarySets& b = boundaries[i];
    if (!label || b.empty_side()) continue;
    if (*label == SubgraphLabel::kSuspicious) {
      if (b.senders.size() != 1 || b.receivers.size() != 1) continue;
      const Link link{b.senders.front(), b.receivers.front()};
      if (seen.insert(link).second) pool.positives_.push_back(link);
    } else {
      pool.negatives_.push_back({b.senders, b.receivers});
    }
  }
  return pool;
}

namespace {

// First `count` entries of a seeded partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

void sort_unique(std::vector<NodeId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

RecTestInstance build_rec_instance(const RecPool& pool, std::size_t n_plus, std::size_t n_minus,
                                   std::uint64_t seed) {
  if (n_plus < 1) throw ValidationError("n_plus must be at least 1");
  if (pool.positives().size() < n_plus || pool.negatives().size() < n_minus) {
    throw ValidationError("insufficient subgraphs: need " + std::to_string(n_plus) + " single-link suspicious and " +
                          std::to_string(n_minus) + " licit, have " + std::to_string(pool.positives().size()) +
                          " and " + std::to_string(pool.negatives().size()));
  }
  Rng rng(mix_seed(seed, 0x7ec));
  RecTestInstance inst;
  inst.n_plus = n_plus;
  inst.n_minus = n_minus;
  for (std::size_t i : sample_indices(pool.positives().size(), n_plus, rng)) {
    const Link& link = pool.positives()[i];
    inst.truth_links.push_back(link);
    inst.senders.push_back(link.sender);
    inst.receivers.push_back(link.receiver);
  }
  for (std::size_t i : sample_indices(pool.negatives().size(), n_minus, rng)) {
    const SRPair& p = pool.negatives()[i];
    inst.senders.insert(inst.senders.end(), p.senders.begin(), p.senders.end());
    inst.receivers.insert(inst.receivers.end(), p.receivers.begin(), p.receivers.end());
  }
  sort_unique(inst.senders);
  sort_unique(inst.receivers);
  std::sort(inst.truth_links.begin(), inst.truth_links.end());
  inst.density = static_cast<double>(n_plus) /
                 (static_cast<double>(inst.senders.size()) * static_cast<double>(inst.receivers.size()));
  return inst;
}

RecTestInstance build_rec_instance(std::span<const Subgraph> subgraphs, std::size_t n_plus,
                                   std::size_t n_minus, std::uint64_t seed, const BackgroundGraph& graph) {
  return build_rec_instance(RecPool::build(graph, subgraphs), n_plus, n_minus, seed);
}

namespace {

std::size_t top_size(std::span<const Link> ranked, std::span<const Link> truth, std::size_t k) {
  if (truth.empty()) throw ValidationError("truth set is empty");
  return std::min(ranked.size(), k);
}

bool is_hit(const Link& link, std::span<const Link> truth) {
  return std::find(truth.begin(), truth.end(), link) != truth.end();
}

}  // namespace

double hit_ratio(std::span<const Link> ranked, std::span<const Link> truth, std::size_t k) {
  const std::size_t top = top_size(ranked, truth, k);
  std::set<Link> hits;
  for (std::size_t i = 0; i < top; ++i) {
    if (is_hit(ranked[i], truth)) hits.insert(ranked[i]);
  }
  std::set<Link> unique_truth(truth.begin(), truth.end());
  return static_cast<double>(hits.size()) / static_cast<double>(unique_truth.size());
}

double ndcg(std::span<const Link> ranked, std::span<const Link> truth, std::size_t k) {
  const std::size_t top = top_size(ranked, truth, k);
  std::set<Link> unique_truth(truth.begin(), truth.end());
  std::set<Link> counted;
  double dcg = 0.0;
  for (std::size_t i = 0; i < top; ++i) {
    if (unique_truth.contains(ranked[i]) && counted.insert(ranked[i]).second) {
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  double ideal = 0.0;
  const std::size_t n_ideal = std::min(unique_truth.size(), k);
  for (std::size_t i = 0; i < n_ideal; ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return ideal > 0.0 ? dcg / ideal : 0.0;
}

RecMetrics rank_metrics(std::span<const Link> ranked, std::span<const Link> truth, std::size_t k) {
  return {hit_ratio(ranked, truth, k), ndcg(ranked, truth, k), k};
}

std::string RecSetting::to_string() const {
  return std::to_string(n_plus) + "+" + std::to_string(n_minus) + "@" + std::to_string(k);
}

RecSetting RecSetting::parse(std::string_view text) {
  auto fail = [&] {
    return ValidationError("bad setting '" + std::string(text) + "' (expected n_plus+n_minus@k, e.g. 1+5@1)");
  };
  const auto plus = text.find('+');
  const auto at = text.find('@');
  if (plus == std::string_view::npos || at == std::string_view::npos || at < plus) throw fail();
  auto number = [&](std::string_view part) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) throw fail();
    return value;
  };
  RecSetting s{number(text.substr(0, plus)), number(text.substr(plus + 1, at - plus - 1)),
               number(text.substr(at + 1))};
  if (s.n_plus < 1 || s.k < 1) throw fail();
  return s;
}

std::vector<RecSetting> parse_settings(std::string_view text) {
  std::vector<RecSetting> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    out.push_back(RecSetting::parse(item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ValidationError("no settings given");
  return out;
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kFull: return "full";
    case Variant::kNoIterations: return "no-iter";
    case Variant::kNoFinetune: return "no-finetune";
    case Variant::kKeepOne: return "keep1";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::kFull, Variant::kNoIterations, Variant::kNoFinetune, Variant::kKeepOne}) {
    if (text == to_string(v)) return v;
  }
  throw ValidationError("unknown variant '" + std::string(text) + "' (expected full, no-iter, no-finetune or keep1)");
}

std::vector<Link> recommend(const RecTestInstance& instance, std::size_t k, const BenchmarkConfig& config,
                            const PairScorer& scorer, FilterStats* stats) {
  std::vector<ScoredLink> links;
  if (config.variant == Variant::kNoIterations) {
    links = one_pass_top_k(instance.candidates(), k, scorer, stats);
  } else {
    FilterConfig filter = config.filter;
    filter.k = k;
    if (config.variant == Variant::kKeepOne) filter.alpha_keep = 1.0;
    links = rev_filter_partitioned(instance.candidates(), filter, scorer, config.senders_partition, stats);
  }
  std::vector<Link> out;
  out.reserve(links.size());
  for (const ScoredLink& l : links) out.push_back({l.sender, l.receiver});
  return out;
}

namespace {

std::pair<double, double> mean_and_se(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace

std::vector<SettingResult> run_benchmark(const RecPool& pool, std::span<const RecSetting> settings,
                                         const BenchmarkConfig& config, const PairScorer& scorer) {
  if (config.n_instances < 1) throw ValidationError("n_instances must be at least 1");
  config.filter.validate();
  std::vector<SettingResult> results;
  for (const RecSetting& setting : settings) {
    const std::size_t n = config.n_instances;
    // Build every instance first so pool errors surface before any scoring.
    std::vector<RecTestInstance> instances;
    instances.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      instances.push_back(build_rec_instance(pool, setting.n_plus, setting.n_minus, config.seed + i));
    }
    std::vector<double> hr(n), nd(n), density(n);
    std::vector<std::size_t> failures(n);
    parallel_for(
        n,
        [&](std::size_t i) {
          FilterStats stats;
          const auto ranked = recommend(instances[i], setting.k, config, scorer, &stats);
          const RecMetrics m = rank_metrics(ranked, instances[i].truth_links, setting.k);
          hr[i] = m.hr;
          nd[i] = m.ndcg;
          density[i] = instances[i].density;
          failures[i] = stats.scorer_failures;
        },
        1);
    SettingResult r;
    r.setting = setting;
    r.n_instances = n;
    std::tie(r.hr_mean, r.hr_se) = mean_and_se(hr);
    std::tie(r.ndcg_mean, r.ndcg_se) = mean_and_se(nd);
    r.density_mean = mean_and_se(density).first;
    for (std::size_t f : failures) r.scorer_failures += f;
    results.push_back(r);
  }
  return results;
}

nlohmann::json to_json(const SettingResult& r) {
  return {{"setting", r.setting.to_string()}, {"n_instances", r.n_instances}, {"hr_mean", r.hr_mean},
          {"hr_se", r.hr_se},                 {"ndcg_mean", r.ndcg_mean},     {"ndcg_se", r.ndcg_se},
          {"density_mean", r.density_mean},   {"scorer_failures", r.scorer_failures}};
}

SettingResult setting_result_from_json(const nlohmann::json& j) {
  try {
    SettingResult r;
    r.setting = RecSetting::parse(j.at("setting").get<std::string>());
    r.n_instances = j.at("n_instances").get<std::size_t>();
    r.hr_mean = j.at("hr_mean").get<double>();
    r.hr_se = j.at("hr_se").get<double>();
    r.ndcg_mean = j.at("ndcg_mean").get<double>();
    r.ndcg_se = j.at("ndcg_se").get<double>();
    r.density_mean = j.at("density_mean").get<double>();
    r.scorer_failures = j.value("scorer_failures", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("bad results entry: ") + e.what());
  }
}

}  // namespace revtrack
