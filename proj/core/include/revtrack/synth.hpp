#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "revtrack/graph.hpp"

namespace revtrack {

struct RecTestInstance;

enum class Scheme : std::uint8_t { kPeelingChain, kNestedService, kRandomPath };

/// Mean feature vector per entity role. `exchange` is the mean of the licit
/// deposit entities that laundering flows end at; they carry the Licit label.
struct ClassMeans {
  std::vector<double> licit;
  std::vector<double> illicit;
  std::vector<double> unknown;
  std::vector<double> exchange;
};

/// Means differing by `separation` per informative coordinate: illicit
/// entities shift the first half of the dimensions, exchanges the second.
ClassMeans default_class_means(std::size_t feature_dim, double separation = 2.0);

struct SynthConfig {
  std::size_t num_entities = 20000;
  std::size_t feature_dim = 8;
  ClassMeans class_means;  // empty vectors take default_class_means()
  double feature_noise_sigma = 1.0;
  std::size_t num_suspicious = 200;
  std::size_t num_licit_subgraphs = 800;
  /// Probabilities of {peeling_chain, nested_service, random_path}.
  std::array<double, 3> scheme_mix{0.5, 0.2, 0.3};
  std::pair<int, int> chain_length_range{2, 6};
  /// Number of sender paths merging in a nested service.
  std::pair<int, int> fanin_range{2, 4};
  std::size_t background_noise_edges = 20000;
  std::uint64_t seed = 0;

  /// Throws ValidationError on inconsistent settings.
  void validate() const;
  /// Copy with default class means filled in.
  SynthConfig resolved() const;
};

nlohmann::json to_json(const SynthConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct SynthDataset {
  BackgroundGraph graph;  // node labels populated
  std::vector<Subgraph> subgraphs;
};

/// Label rule: Suspicious iff every sender is Illicit and every receiver is
/// Licit; Licit iff every sender and receiver is Licit; otherwise unlabeled.
std::optional<SubgraphLabel> infer_label(const BackgroundGraph& graph, const BoundarySets& boundary);

/// Builds a background graph with planted laundering schemes and licit flows.
/// Deterministic for a given config. Throws ValidationError when
/// num_entities cannot hold the sampled subgraphs.
SynthDataset generate(const SynthConfig& config);

/// Writes edges.csv, nodes.csv and subgraphs.jsonl into `dir`.
void write_dataset(const SynthDataset& dataset, const std::filesystem::path& dir);
SynthDataset load_dataset(const std::filesystem::path& dir);

/// Draws one recommendation test instance from the dataset (see
/// build_rec_instance).
RecTestInstance plant_rec_instance(const SynthDataset& dataset, std::size_t n_plus,
                                   std::size_t n_minus, std::uint64_t seed);

}  // namespace revtrack
