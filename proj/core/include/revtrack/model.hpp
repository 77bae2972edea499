#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "revtrack/nn.hpp"

namespace revtrack {

enum class Arch : std::uint8_t { kDeepSets, kBipartite };

std::string_view to_string(Arch arch);
Arch parse_arch(std::string_view text);

struct ModelConfig {
  Arch arch = Arch::kDeepSets;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 64;
  /// Layers per MLP (phi, rho, node MLP, head).
  std::size_t mlp_layers = 2;
  nn::Pool pool = nn::Pool::kSum;     // deep sets pooling
  nn::Pool readout = nn::Pool::kSum;  // bipartite readout
  double epsilon = 0.0;               // initial bipartite self-weight

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Separate Deep Sets encoders for S and R, concatenated into a head whose
/// last layer is the logistic-regression logit.
struct DeepSetsNet {
  nn::DeepSets senders;
  nn::DeepSets receivers;
  nn::Mlp head;
};

/// Bipartite encoder whose head ends in the logit.
struct BipartiteNet {
  nn::Bipartite encoder;
};

/// A minibatch of SR pairs with features gathered into row blocks. Pair b
/// owns sender rows [sender_offsets[b], sender_offsets[b+1]) and likewise
/// for receivers.
struct PairBatch {
  nn::Matrix senders;
  std::vector<std::size_t> sender_offsets{0};
  nn::Matrix receivers;
  std::vector<std::size_t> receiver_offsets{0};

  std::size_t size() const { return sender_offsets.size() - 1; }
};

/// Returns the feature row for a node.
using FeatureFn = std::function<std::span<const double>(std::uint32_t)>;

/// Gathers features for a list of (senders, receivers) index sets.
template <typename PairRange>
PairBatch gather_batch(const PairRange& pairs, std::size_t feature_dim, const FeatureFn& features);

class Model {
 public:
  Model() = default;
  /// Glorot-initialized model; deterministic in `seed`.
  static Model create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Arch arch() const { return config_.arch; }

  const DeepSetsNet* deep_sets() const { return std::get_if<DeepSetsNet>(&net_); }
  const BipartiteNet* bipartite() const { return std::get_if<BipartiteNet>(&net_); }
  DeepSetsNet* deep_sets() { return std::get_if<DeepSetsNet>(&net_); }
  BipartiteNet* bipartite() { return std::get_if<BipartiteNet>(&net_); }

  /// Pre-sigmoid outputs, one per pair.
  std::vector<double> logits(const PairBatch& batch) const;

  /// Mean weighted BCE over the batch; adds d(loss)/d(params) into `grad`,
  /// which must have this model's shapes. Positive examples are weighted by
  /// `positive_weight`; the mean divides by the batch size.
  double loss_and_gradient(const PairBatch& batch, std::span<const int> labels, Model& grad,
                           double positive_weight = 1.0) const;

  Model zeros_like() const;
  std::size_t num_parameters() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> values);
  bool all_finite() const;

  /// Visits each named tensor as (name, pointer, rows, cols) in a fixed
  /// order; data is column-major.
  void for_each_tensor(const std::function<void(const std::string&, double*, nn::Index, nn::Index)>& fn);
  void for_each_tensor(
      const std::function<void(const std::string&, const double*, nn::Index, nn::Index)>& fn) const;

  friend bool operator==(const Model& a, const Model& b);

 private:
  ModelConfig config_;
  std::variant<DeepSetsNet, BipartiteNet> net_;
};

inline constexpr int kCheckpointVersion = 1;

/// {"version": 1, "arch": "ds"|"bp", "config": {...}, "weights": {name: [...]}}
/// Weight matrices are flattened row-major.
nlohmann::json checkpoint_to_json(const Model& model);
Model checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

template <typename PairRange>
PairBatch gather_batch(const PairRange& pairs, std::size_t feature_dim, const FeatureFn& features) {
  PairBatch batch;
  std::size_t total_s = 0;
  std::size_t total_r = 0;
  for (const auto& p : pairs) {
    total_s += p.senders.size();
    total_r += p.receivers.size();
  }
  const auto d = static_cast<nn::Index>(feature_dim);
  batch.senders.resize(static_cast<nn::Index>(total_s), d);
  batch.receivers.resize(static_cast<nn::Index>(total_r), d);
  nn::Index rs = 0;
  nn::Index rr = 0;
  auto copy_row = [&](nn::Matrix& m, nn::Index row, std::uint32_t node) {
    const auto f = features(node);
    for (nn::Index c = 0; c < d; ++c) m(row, c) = f[static_cast<std::size_t>(c)];
  };
  for (const auto& p : pairs) {
    for (auto v : p.senders) copy_row(batch.senders, rs++, v);
    for (auto v : p.receivers) copy_row(batch.receivers, rr++, v);
    batch.sender_offsets.push_back(static_cast<std::size_t>(rs));
    batch.receiver_offsets.push_back(static_cast<std::size_t>(rr));
  }
  return batch;
}

}  // namespace revtrack
