#include "revtrack/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>

#include "revtrack/error.hpp"
#include "revtrack/parallel.hpp"
#include "revtrack/random.hpp"

namespace revtrack {

using nn::Index;
using nn::Matrix;

void FeatureTable::add(NodeId v, std::span<const double> features) {
  if (features.size() != dim_) throw ShapeError("feature table: dimension mismatch");
  rows_.try_emplace(v, features.begin(), features.end());
}

void FeatureTable::add_pair(const BackgroundGraph& graph, const SRPair& pair) {
  for (NodeId v : pair.senders) add(v, graph.features(v));
  for (NodeId v : pair.receivers) add(v, graph.features(v));
}

std::span<const double> FeatureTable::get(NodeId v) const {
  const auto it = rows_.find(v);
  if (it == rows_.end()) throw ValidationError("no features cached for node " + std::to_string(v));
  return it->second;
}

FeatureFn FeatureTable::as_fn() const {
  return [this](std::uint32_t v) { return get(v); };
}

FeatureFn graph_features(const BackgroundGraph& graph) {
  return [&graph](std::uint32_t v) {
    if (v >= graph.num_nodes()) throw ValidationError("node " + std::to_string(v) + " is not in the graph");
    return graph.features(v);
  };
}

PairSet make_pairs(const BackgroundGraph& graph, std::span<const Subgraph> subgraphs) {
  std::vector<BoundarySets> boundaries(subgraphs.size());
  parallel_for(subgraphs.size(), [&](std::size_t i) {
    if (subgraphs[i].label) boundaries[i] = extract_boundary(graph, subgraphs[i]);
  });
  PairSet out{{}, FeatureTable(graph.feature_dim()), 0, 0};
  for (std::size_t i = 0; i < subgraphs.size(); ++i) {
    const Subgraph& h = subgraphs[i];
    if (!h.label) {
      ++out.skipped_unlabeled;
      continue;
    }
    if (boundaries[i].empty_side()) {
      ++out.skipped_empty;
      continue;
    }
    LabeledPair p;
    p.pair = {std::move(boundaries[i].senders), std::move(boundaries[i].receivers)};
    p.label = *h.label == SubgraphLabel::kSuspicious ? 1 : 0;
    p.origin = {h.id};
    out.features.add_pair(graph, p.pair);
    out.pairs.push_back(std::move(p));
  }
  return out;
}

std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

namespace {

std::vector<std::size_t> seeded_permutation(std::span<const std::size_t> items, Rng& rng) {
  std::vector<std::size_t> out(items.begin(), items.end());
  shuffle(std::span<std::size_t>(out), rng);
  return out;
}

}  // namespace

SplitIndices split(std::span<const LabeledPair> pairs, const SplitSpec& spec) {
  if (pairs.size() < 10) throw ValidationError("split needs at least 10 pairs, got " + std::to_string(pairs.size()));
  if (std::abs(spec.train + spec.valid + spec.test - 1.0) > 1e-9 || spec.train < 0 ||
      spec.valid < 0 || spec.test < 0) {
    throw ValidationError("split fractions must be non-negative and sum to 1");
  }
  if (!(spec.few_shot > 0.0 && spec.few_shot <= 1.0)) {
    throw ValidationError("few-shot fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < pairs.size(); ++i) by_class[pairs[i].label == 1 ? 1 : 0].push_back(i);
  if (by_class[1].empty()) throw ValidationError("split: no positive (suspicious) pairs");

  Rng rng(mix_seed(spec.seed, 0x5b1f));
  SplitIndices out;
  for (auto& members : by_class) {
    const auto order = seeded_permutation(members, rng);
    const std::size_t n = order.size();
    std::size_t n_test = round_half_up(spec.test * static_cast<double>(n));
    std::size_t n_valid = round_half_up(spec.valid * static_cast<double>(n));
    // Keep at least one item per nonzero split when the class can afford it.
    if (n >= 3) {
      if (spec.test > 0) n_test = std::max<std::size_t>(n_test, 1);
      if (spec.valid > 0) n_valid = std::max<std::size_t>(n_valid, 1);
    }
    n_test = std::min(n_test, n);
    n_valid = std::min(n_valid, n - n_test);
    const std::size_t n_train = n - n_test - n_valid;
    out.train.insert(out.train.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.valid.insert(out.valid.end(), order.begin() + static_cast<std::ptrdiff_t>(n_train),
                     order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    out.test.insert(out.test.end(), order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
  }
  for (auto* part : {&out.train, &out.valid, &out.test}) shuffle(std::span<std::size_t>(*part), rng);
  if (spec.few_shot < 1.0) out.train = few_shot_sample(pairs, out.train, spec.few_shot, spec.seed);
  return out;
}

std::vector<std::size_t> few_shot_sample(std::span<const LabeledPair> pairs,
                                         std::span<const std::size_t> indices, double p,
                                         std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("few-shot fraction must lie in (0, 1]");
  if (p == 1.0) return {indices.begin(), indices.end()};
  // Sort first so the sample depends only on the set of indices.
  std::vector<std::size_t> by_class[2];
  for (std::size_t i : indices) by_class[pairs[i].label == 1 ? 1 : 0].push_back(i);
  Rng rng(mix_seed(seed, 0xfe35));
  std::vector<std::size_t> out;
  for (auto& members : by_class) {
    std::sort(members.begin(), members.end());
    const auto order = seeded_permutation(members, rng);
    if (order.empty()) continue;
    const std::size_t keep =
        std::min(order.size(), std::max<std::size_t>(1, round_half_up(p * static_cast<double>(order.size()))));
    out.insert(out.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<LabeledPair> select(std::span<const LabeledPair> pairs, std::span<const std::size_t> indices) {
  std::vector<LabeledPair> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(pairs[i]);
  return out;
}

namespace {

struct PairView {
  const std::vector<NodeId>& senders;
  const std::vector<NodeId>& receivers;
};

PairBatch batch_of(std::span<const LabeledPair> set, std::span<const std::size_t> order,
                   std::size_t begin, std::size_t end, std::size_t dim, const FeatureFn& features,
                   std::vector<int>& labels) {
  std::vector<PairView> views;
  views.reserve(end - begin);
  labels.clear();
  for (std::size_t i = begin; i < end; ++i) {
    const LabeledPair& p = set[order[i]];
    views.push_back({p.pair.senders, p.pair.receivers});
    labels.push_back(p.label);
  }
  return gather_batch(views, dim, features);
}

struct Validation {
  bool usable = false;  // both classes present
  double pr_auc = 0.0;
  double loss = 0.0;
};

Validation validate(const Model& model, std::span<const LabeledPair> set, const FeatureFn& features) {
  Validation v;
  if (set.empty()) return v;
  std::vector<SRPair> pairs;
  std::vector<int> labels;
  pairs.reserve(set.size());
  for (const auto& p : set) {
    pairs.push_back(p.pair);
    labels.push_back(p.label);
  }
  const auto probs = score_pairs(model, pairs, features);
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) loss += nn::bce_loss(probs[i], labels[i]);
  v.loss = loss / static_cast<double>(probs.size());
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (has_pos && has_neg) {
    v.usable = true;
    v.pr_auc = average_precision(probs, labels);
  }
  return v;
}

}  // namespace

TrainResult continue_training(const Model& initial, std::span<const LabeledPair> train_set,
                              std::span<const LabeledPair> valid_set, const FeatureFn& features,
                              const TrainConfig& config) {
  if (config.batch_size == 0) throw ValidationError("batch size must be positive");
  TrainResult result{initial, 0, {}};
  if (config.max_epochs == 0) return result;
  if (train_set.empty()) throw ValidationError("training set is empty");

  Model model = initial;
  const std::size_t dim = model.config().feature_dim;
  Model grad = model.zeros_like();
  nn::AdamState adam = nn::AdamState::for_size(model.num_parameters(), config.learning_rate);
  std::vector<double> params = model.flatten();

  // Model selection key: (valid PR-AUC, -valid loss), or -train loss when the
  // validation set cannot define PR-AUC.
  const Validation initial_valid = validate(model, valid_set, features);
  const bool use_valid = initial_valid.usable;
  double best_primary = use_valid ? initial_valid.pr_auc : -std::numeric_limits<double>::infinity();
  double best_secondary = use_valid ? -initial_valid.loss : -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  constexpr double kTol = 1e-12;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> labels;
  std::size_t last_finite_epoch = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(mix_seed(config.seed, epoch));
    shuffle(std::span<std::size_t>(order), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const PairBatch batch = batch_of(train_set, order, begin, end, dim, features, labels);
      grad.assign(std::vector<double>(params.size(), 0.0));
      const double loss = model.loss_and_gradient(batch, labels, grad, config.positive_weight);
      if (!std::isfinite(loss)) {
        throw TrainingError("training diverged (non-finite loss) in epoch " + std::to_string(epoch) +
                                "; last finite epoch " + std::to_string(last_finite_epoch),
                            static_cast<int>(last_finite_epoch));
      }
      epoch_loss += loss * static_cast<double>(end - begin);
      const std::vector<double> g = grad.flatten();
      nn::adam_step(adam, params, g);
      model.assign(params);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!model.all_finite()) {
      throw TrainingError("training diverged (non-finite parameters) in epoch " + std::to_string(epoch),
                          static_cast<int>(last_finite_epoch));
    }
    last_finite_epoch = epoch;

    EpochRecord record{epoch, epoch_loss, 0.0, 0.0};
    double primary;
    double secondary;
    if (use_valid) {
      const Validation v = validate(model, valid_set, features);
      record.valid_pr_auc = v.pr_auc;
      record.valid_loss = v.loss;
      primary = v.pr_auc;
      secondary = -v.loss;
    } else {
      primary = -epoch_loss;
      secondary = 0.0;
    }
    result.history.push_back(record);
    if (config.log_progress) {
      std::cerr << "epoch " << epoch << " loss " << epoch_loss;
      if (use_valid) std::cerr << " valid_pr_auc " << record.valid_pr_auc << " valid_loss " << record.valid_loss;
      std::cerr << '\n';
    }

    const bool improved = primary > best_primary + kTol ||
                          (primary >= best_primary - kTol && secondary > best_secondary + kTol);
    if (improved) {
      best_primary = std::max(primary, best_primary);
      best_secondary = secondary;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

TrainResult train(std::span<const LabeledPair> train_set, std::span<const LabeledPair> valid_set,
                  const FeatureFn& features, const TrainConfig& config) {
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& p : train_set) (p.label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw ValidationError("training set must contain both classes");
  const Model initial = Model::create(config.model, mix_seed(config.seed, 0x1417));
  TrainResult result = continue_training(initial, train_set, valid_set, features, config);
  return result;
}

double score(const Model& model, const SRPair& pair, const FeatureFn& features) {
  return score_pairs(model, std::span<const SRPair>(&pair, 1), features).front();
}

std::vector<double> score_pairs(const Model& model, std::span<const SRPair> pairs,
                                const FeatureFn& features) {
  for (const SRPair& p : pairs) {
    if (p.senders.empty() || p.receivers.empty()) {
      throw ValidationError("cannot score a pair with an empty sender or receiver set");
    }
  }
  constexpr std::size_t kChunk = 512;
  std::vector<double> out(pairs.size());
  const std::size_t chunks = (pairs.size() + kChunk - 1) / kChunk;
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(pairs.size(), begin + kChunk);
        const PairBatch batch = gather_batch(pairs.subspan(begin, end - begin),
                                             model.config().feature_dim, features);
        const auto z = model.logits(batch);
        for (std::size_t i = 0; i < z.size(); ++i) out[begin + i] = nn::sigmoid(z[i]);
      },
      1);
  return out;
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == labels.size()) {
    throw ValidationError("PR-AUC is undefined for a single-class set");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t group_pos = 0;
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_pos += labels[order[j]] == 1 ? 1 : 0;
      ++j;
    }
    tp += group_pos;
    seen += j - i;
    if (group_pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(group_pos);
    }
    i = j;
  }
  return std::min(1.0, ap / static_cast<double>(positives));
}

ClassifierMetrics binary_metrics(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
  if (scores.empty()) throw ValidationError("cannot evaluate an empty set");
  ClassifierMetrics m;
  m.threshold = threshold;
  m.pr_auc = average_precision(scores, labels);
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++m.positives;
      tp += predicted ? 1 : 0;
    } else {
      ++m.negatives;
      fp += predicted ? 1 : 0;
    }
  }
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = static_cast<double>(tp) / static_cast<double>(m.positives);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

ClassifierMetrics evaluate(const Model& model, std::span<const LabeledPair> test_set,
                           const FeatureFn& features, double threshold) {
  if (test_set.empty()) throw ValidationError("test set is empty");
  std::vector<SRPair> pairs;
  std::vector<int> labels;
  for (const auto& p : test_set) {
    pairs.push_back(p.pair);
    labels.push_back(p.label);
  }
  return binary_metrics(score_pairs(model, pairs, features), labels, threshold);
}

ModelScorer::ModelScorer(Model model, FeatureFn features)
    : model_(std::move(model)), features_(std::move(features)) {}

std::vector<double> ModelScorer::score(std::span<const SRPair> pairs) const {
  if (model_.deep_sets()) return score_deep_sets(pairs);
  return score_pairs(model_, pairs, features_);
}

std::vector<double> ModelScorer::score_deep_sets(std::span<const SRPair> pairs) const {
  const DeepSetsNet& net = *model_.deep_sets();
  const auto dim = static_cast<Index>(model_.config().feature_dim);

  auto fill_cache = [&](const nn::DeepSets& ds, std::unordered_map<NodeId, nn::Vector>& cache,
                        auto side) {
    std::vector<NodeId> missing;
    {
      std::shared_lock lock(cache_mutex_);
      for (const SRPair& p : pairs) {
        for (NodeId v : p.*side) {
          if (!cache.contains(v)) missing.push_back(v);
        }
      }
    }
    if (missing.empty()) return;
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    Matrix rows(static_cast<Index>(missing.size()), dim);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      const auto f = features_(missing[i]);
      for (Index c = 0; c < dim; ++c) rows(static_cast<Index>(i), c) = f[static_cast<std::size_t>(c)];
    }
    const Matrix codes = nn::mlp_forward(ds.phi, rows);
    std::unique_lock lock(cache_mutex_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
      cache.try_emplace(missing[i], codes.row(static_cast<Index>(i)).transpose());
    }
  };
  for (const SRPair& p : pairs) {
    if (p.senders.empty() || p.receivers.empty()) {
      throw ValidationError("cannot score a pair with an empty sender or receiver set");
    }
  }
  fill_cache(net.senders, sender_codes_, &SRPair::senders);
  fill_cache(net.receivers, receiver_codes_, &SRPair::receivers);

  std::shared_lock lock(cache_mutex_);
  constexpr std::size_t kChunk = 1024;
  std::vector<double> out(pairs.size());
  const std::size_t chunks = (pairs.size() + kChunk - 1) / kChunk;
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(pairs.size(), begin + kChunk);
        const auto n = static_cast<Index>(end - begin);
        auto pool_side = [&](const nn::DeepSets& ds, const std::unordered_map<NodeId, nn::Vector>& cache,
                             auto side) {
          const Index width = static_cast<Index>(ds.phi.output_dim());
          Matrix pooled(n, width);
          for (Index b = 0; b < n; ++b) {
            const auto& members = pairs[begin + static_cast<std::size_t>(b)].*side;
            if (ds.pool == nn::Pool::kMax) {
              pooled.row(b).setConstant(-std::numeric_limits<double>::infinity());
              for (NodeId v : members) pooled.row(b) = pooled.row(b).cwiseMax(cache.at(v).transpose());
            } else {
              pooled.row(b).setZero();
              for (NodeId v : members) pooled.row(b) += cache.at(v).transpose();
              if (ds.pool == nn::Pool::kMean) pooled.row(b) /= static_cast<double>(members.size());
            }
          }
          return nn::mlp_forward(ds.rho, pooled);
        };
        const Matrix hs = pool_side(net.senders, sender_codes_, &SRPair::senders);
        const Matrix hr = pool_side(net.receivers, receiver_codes_, &SRPair::receivers);
        Matrix joined(n, hs.cols() + hr.cols());
        joined << hs, hr;
        const Matrix z = nn::mlp_forward(net.head, joined);
        for (Index b = 0; b < n; ++b) out[begin + static_cast<std::size_t>(b)] = nn::sigmoid(z(b, 0));
      },
      1);
  return out;
}

}  // namespace revtrack
