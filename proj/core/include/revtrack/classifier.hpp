#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "revtrack/graph.hpp"
#include "revtrack/model.hpp"
#include "revtrack/pair.hpp"

namespace revtrack {

/// A boundary pair with its 0 (licit) / 1 (suspicious) label.
struct LabeledPair {
  SRPair pair;
  int label = 0;
  std::vector<std::string> origin;  // contributing subgraph ids
};

/// Node features keyed by NodeId, holding only the nodes that appear in
/// some pair.
class FeatureTable {
 public:
  explicit FeatureTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool contains(NodeId v) const { return rows_.contains(v); }

  void add(NodeId v, std::span<const double> features);
  void add_pair(const BackgroundGraph& graph, const SRPair& pair);
  /// Throws ValidationError for unknown nodes.
  std::span<const double> get(NodeId v) const;
  FeatureFn as_fn() const;

 private:
  std::size_t dim_;
  std::unordered_map<NodeId, std::vector<double>> rows_;
};

/// Reads features straight from the graph.
FeatureFn graph_features(const BackgroundGraph& graph);

struct PairSet {
  std::vector<LabeledPair> pairs;
  FeatureTable features;
  std::size_t skipped_empty = 0;
  std::size_t skipped_unlabeled = 0;
};

/// One LabeledPair per labeled subgraph whose sender and receiver sets are
/// both nonempty.
PairSet make_pairs(const BackgroundGraph& graph, std::span<const Subgraph> subgraphs);

struct SplitSpec {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
  std::uint64_t seed = 0;
  double few_shot = 1.0;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

std::size_t round_half_up(double x);

/// Seeded, label-stratified split; then keeps a `few_shot` fraction of each
/// training class. Requires >= 10 pairs and at least one positive.
SplitIndices split(std::span<const LabeledPair> pairs, const SplitSpec& spec);

/// Per class keeps max(1, round_half_up(p * class size)) items. Samples are
/// prefixes of one seeded permutation, so smaller p nests inside larger p.
std::vector<std::size_t> few_shot_sample(std::span<const LabeledPair> pairs,
                                         std::span<const std::size_t> indices, double p,
                                         std::uint64_t seed);

std::vector<LabeledPair> select(std::span<const LabeledPair> pairs, std::span<const std::size_t> indices);

struct TrainConfig {
  ModelConfig model;
  std::size_t max_epochs = 150;
  std::size_t patience = 20;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double positive_weight = 1.0;
  std::uint64_t seed = 0;
  bool log_progress = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_pr_auc = 0.0;
  double valid_loss = 0.0;
};

struct TrainResult {
  Model model;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

/// Adam on mean batch BCE with early stopping on validation PR-AUC (ties
/// broken by validation loss). Returns the best-validation model. When the
/// validation set lacks a class, training loss drives model selection.
TrainResult train(std::span<const LabeledPair> train_set, std::span<const LabeledPair> valid_set,
                  const FeatureFn& features, const TrainConfig& config);

/// Same loop starting from an existing model (config.model is ignored).
/// Epoch 0 is the unmodified input, so zero epochs return it unchanged.
TrainResult continue_training(const Model& initial, std::span<const LabeledPair> train_set,
                              std::span<const LabeledPair> valid_set, const FeatureFn& features,
                              const TrainConfig& config);

/// Probability that the pair is suspicious.
double score(const Model& model, const SRPair& pair, const FeatureFn& features);

/// Batched scoring of many pairs; parallel over chunks, output in input order.
std::vector<double> score_pairs(const Model& model, std::span<const SRPair> pairs,
                                const FeatureFn& features);

struct ClassifierMetrics {
  double pr_auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double threshold = 0.5;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Average precision with step interpolation; tied scores form one
/// threshold. Throws ValidationError unless both classes are present.
double average_precision(std::span<const double> scores, std::span<const int> labels);

ClassifierMetrics binary_metrics(std::span<const double> scores, std::span<const int> labels,
                                 double threshold = 0.5);

ClassifierMetrics evaluate(const Model& model, std::span<const LabeledPair> test_set,
                           const FeatureFn& features, double threshold = 0.5);

/// PairScorer backed by a trained model. For Deep Sets models the per-node
/// phi encodings are cached in a hash table and reused across calls.
class ModelScorer : public PairScorer {
 public:
  ModelScorer(Model model, FeatureFn features);
  std::vector<double> score(std::span<const SRPair> pairs) const override;
  const Model& model() const { return model_; }

 private:
  std::vector<double> score_deep_sets(std::span<const SRPair> pairs) const;

  Model model_;
  FeatureFn features_;
  mutable std::shared_mutex cache_mutex_;
  mutable std::unordered_map<NodeId, nn::Vector> sender_codes_;
  mutable std::unordered_map<NodeId, nn::Vector> receiver_codes_;
};

}  // namespace revtrack
