#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace revtrack {

/// Dense node index in [0, num_nodes).
using NodeId = std::uint32_t;

enum class NodeLabel : std::uint8_t { kUnknown, kLicit, kIllicit };
enum class SubgraphLabel : std::uint8_t { kLicit, kSuspicious };

std::string_view to_string(NodeLabel label);
std::string_view to_string(SubgraphLabel label);
NodeLabel parse_node_label(std::string_view text);
SubgraphLabel parse_subgraph_label(std::string_view text);

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct GraphBuildStats {
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
};

/// Immutable directed graph in compressed-row form with per-node features.
///
/// Out- and in-adjacency are stored separately; both are sorted ascending and
/// are exact transposes of each other. Features are a dense row-major
/// num_nodes x feature_dim block.
class BackgroundGraph {
 public:
  BackgroundGraph() = default;

  /// Builds from an arbitrary edge list. Duplicate edges collapse to one and
  /// self-loops are dropped; both are counted in `stats` when provided.
  /// `features` must hold num_nodes * feature_dim values. `labels`, when
  /// nonempty, must have num_nodes entries. `external_ids`, when nonempty,
  /// maps each dense id to the id used in the source files.
  static BackgroundGraph build(std::size_t num_nodes, std::vector<Edge> edges,
                               std::size_t feature_dim, std::vector<double> features,
                               std::vector<NodeLabel> labels = {},
                               std::vector<std::int64_t> external_ids = {},
                               GraphBuildStats* stats = nullptr);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return out_targets_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }

  std::span<const NodeId> out_neighbors(NodeId v) const {
    return {out_targets_.data() + out_offsets_[v], out_targets_.data() + out_offsets_[v + 1]};
  }
  std::span<const NodeId> in_neighbors(NodeId v) const {
    return {in_sources_.data() + in_offsets_[v], in_sources_.data() + in_offsets_[v + 1]};
  }
  bool has_edge(NodeId src, NodeId dst) const;

  std::span<const double> features(NodeId v) const {
    return {features_.data() + static_cast<std::size_t>(v) * feature_dim_, feature_dim_};
  }
  std::span<const double> feature_block() const { return features_; }

  bool has_labels() const { return !labels_.empty(); }
  NodeLabel label(NodeId v) const { return labels_.empty() ? NodeLabel::kUnknown : labels_[v]; }

  /// Id as written in the source files (identity when ids were already dense).
  std::int64_t external_id(NodeId v) const {
    return external_ids_.empty() ? static_cast<std::int64_t>(v) : external_ids_[v];
  }
  std::optional<NodeId> find_external(std::int64_t id) const;
  bool has_identity_ids() const { return external_ids_.empty(); }

  /// Every edge in ascending (src, dst) order.
  std::vector<Edge> edges() const;

  friend bool operator==(const BackgroundGraph&, const BackgroundGraph&) = default;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t feature_dim_ = 0;
  std::vector<std::size_t> out_offsets_{0};
  std::vector<NodeId> out_targets_;
  std::vector<std::size_t> in_offsets_{0};
  std::vector<NodeId> in_sources_;
  std::vector<double> features_;
  std::vector<NodeLabel> labels_;
  std::vector<std::int64_t> external_ids_;  // sorted ascending when present
};

/// A node set plus edge list referencing a background graph.
struct Subgraph {
  std::string id;
  std::vector<NodeId> nodes;  // sorted, unique
  std::vector<Edge> edges;    // unique, in input order
  std::optional<SubgraphLabel> label;

  /// Sorts/dedups nodes and dedups edges (first occurrence wins).
  void normalize();
  bool contains(NodeId v) const;

  friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

/// Throws ValidationError unless the subgraph is nonempty, every edge exists
/// in `graph` and every edge endpoint is one of the subgraph's nodes.
void validate_subgraph(const BackgroundGraph& graph, const Subgraph& subgraph);

/// Sources, sinks, senders (S) and receivers (R) of one subgraph.
struct BoundarySets {
  std::vector<NodeId> sources;
  std::vector<NodeId> sinks;
  std::vector<NodeId> senders;
  std::vector<NodeId> receivers;

  /// Set when S or R is empty; such subgraphs are excluded from training
  /// and evaluation.
  bool empty_side() const { return senders.empty() || receivers.empty(); }

  friend bool operator==(const BoundarySets&, const BoundarySets&) = default;
};

/// Removes every back edge found by an iterative DFS that starts from
/// unvisited nodes in ascending id order and visits successors in ascending
/// id order. The result is acyclic, keeps the node set, and keeps the
/// surviving edges in input order. Acyclic input is returned unchanged.
Subgraph break_cycles(const Subgraph& subgraph);

/// Sources/sinks are taken on the cycle-broken subgraph; senders/receivers
/// are background nodes outside the subgraph adjacent to them.
BoundarySets extract_boundary(const BackgroundGraph& graph, const Subgraph& subgraph);

}  // namespace revtrack
