#include "revtrack/graph.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>
#include <utility>

#include "revtrack/error.hpp"

namespace revtrack {

std::string_view to_string(NodeLabel label) {
  switch (label) {
    case NodeLabel::kLicit:
      return "licit";
    case NodeLabel::kIllicit:
      return "illicit";
    case NodeLabel::kUnknown:
      break;
  }
  return "unknown";
}

std::string_view to_string(SubgraphLabel label) {
  return label == SubgraphLabel::kSuspicious ? "suspicious" : "licit";
}

NodeLabel parse_node_label(std::string_view text) {
  if (text == "licit") return NodeLabel::kLicit;
  if (text == "illicit") return NodeLabel::kIllicit;
  if (text == "unknown" || text.empty()) return NodeLabel::kUnknown;
  throw LoadError("invalid node label '" + std::string(text) + "'");
}

SubgraphLabel parse_subgraph_label(std::string_view text) {
  if (text == "licit") return SubgraphLabel::kLicit;
  if (text == "suspicious") return SubgraphLabel::kSuspicious;
  throw LoadError("invalid subgraph label '" + std::string(text) + "'");
}

BackgroundGraph BackgroundGraph::build(std::size_t num_nodes, std::vector<Edge> edges,
                                       std::size_t feature_dim, std::vector<double> features,
                                       std::vector<NodeLabel> labels,
                                       std::vector<std::int64_t> external_ids,
                                       GraphBuildStats* stats) {
  if (features.size() != num_nodes * feature_dim) {
    throw LoadError("feature block has " + std::to_string(features.size()) +
                    " values, expected " + std::to_string(num_nodes * feature_dim));
  }
  if (!labels.empty() && labels.size() != num_nodes) {
    throw LoadError("label count does not match node count");
  }
  if (!external_ids.empty()) {
    if (external_ids.size() != num_nodes) throw LoadError("external id count does not match node count");
    if (!std::is_sorted(external_ids.begin(), external_ids.end()) ||
        std::adjacent_find(external_ids.begin(), external_ids.end()) != external_ids.end()) {
      throw LoadError("external ids must be strictly ascending");
    }
  }

  GraphBuildStats local;
  std::erase_if(edges, [&](const Edge& e) {
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw LoadError("dangling endpoint " + std::to_string(std::max(e.src, e.dst)));
    }
    if (e.src == e.dst) {
      ++local.self_loops;
      return true;
    }
    return false;
  });
  std::sort(edges.begin(), edges.end());
  const auto last = std::unique(edges.begin(), edges.end());
  local.duplicate_edges = static_cast<std::size_t>(edges.end() - last);
  edges.erase(last, edges.end());
  if (stats) *stats = local;

  BackgroundGraph g;
  g.num_nodes_ = num_nodes;
  g.feature_dim_ = feature_dim;
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  g.external_ids_ = std::move(external_ids);

  g.out_offsets_.assign(num_nodes + 1, 0);
  g.in_offsets_.assign(num_nodes + 1, 0);
  for (const Edge& e : edges) {
    ++g.out_offsets_[e.src + 1];
    ++g.in_offsets_[e.dst + 1];
  }
  std::partial_sum(g.out_offsets_.begin(), g.out_offsets_.end(), g.out_offsets_.begin());
  std::partial_sum(g.in_offsets_.begin(), g.in_offsets_.end(), g.in_offsets_.begin());

  // Edges are sorted by (src, dst): out lists come out sorted directly, and
  // in lists receive sources in ascending order as well.
  g.out_targets_.resize(edges.size());
  g.in_sources_.resize(edges.size());
  std::vector<std::size_t> in_cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    g.out_targets_[i] = edges[i].dst;
    g.in_sources_[in_cursor[edges[i].dst]++] = edges[i].src;
  }
  return g;
}

bool BackgroundGraph::has_edge(NodeId src, NodeId dst) const {
  if (src >= num_nodes_ || dst >= num_nodes_) return false;
  const auto out = out_neighbors(src);
  return std::binary_search(out.begin(), out.end(), dst);
}

std::optional<NodeId> BackgroundGraph::find_external(std::int64_t id) const {
  if (external_ids_.empty()) {
    if (id < 0 || static_cast<std::uint64_t>(id) >= num_nodes_) return std::nullopt;
    return static_cast<NodeId>(id);
  }
  const auto it = std::lower_bound(external_ids_.begin(), external_ids_.end(), id);
  if (it == external_ids_.end() || *it != id) return std::nullopt;
  return static_cast<NodeId>(it - external_ids_.begin());
}

std::vector<Edge> BackgroundGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId v = 0; v < num_nodes_; ++v) {
    for (NodeId w : out_neighbors(v)) out.push_back({v, w});
  }
  return out;
}

void Subgraph::normalize() {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::vector<Edge> sorted = edges;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) return;
  std::vector<Edge> kept;
  kept.reserve(edges.size());
  std::vector<Edge> seen;
  for (const Edge& e : edges) {
    const auto it = std::lower_bound(seen.begin(), seen.end(), e);
    if (it != seen.end() && *it == e) continue;
    seen.insert(it, e);
    kept.push_back(e);
  }
  edges = std::move(kept);
}

bool Subgraph::contains(NodeId v) const {
  return std::binary_search(nodes.begin(), nodes.end(), v);
}

void validate_subgraph(const BackgroundGraph& graph, const Subgraph& subgraph) {
  const std::string where = "subgraph '" + subgraph.id + "': ";
  if (subgraph.nodes.empty()) throw ValidationError(where + "node set is empty");
  if (!std::is_sorted(subgraph.nodes.begin(), subgraph.nodes.end()) ||
      std::adjacent_find(subgraph.nodes.begin(), subgraph.nodes.end()) != subgraph.nodes.end()) {
    throw ValidationError(where + "node set is not normalized");
  }
  if (subgraph.nodes.back() >= graph.num_nodes()) {
    throw ValidationError(where + "node " + std::to_string(subgraph.nodes.back()) +
                          " is outside the background graph");
  }
  for (const Edge& e : subgraph.edges) {
    if (!subgraph.contains(e.src) || !subgraph.contains(e.dst)) {
      throw ValidationError(where + "edge (" + std::to_string(e.src) + "," +
                            std::to_string(e.dst) + ") has an endpoint outside the node set");
    }
    if (!graph.has_edge(e.src, e.dst)) {
      throw ValidationError(where + "edge (" + std::to_string(e.src) + "," +
                            std::to_string(e.dst) + ") is not in the background graph");
    }
  }
}

namespace {

// Local CSR over subgraph-relative indices.
struct LocalGraph {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> targets;
  std::vector<std::size_t> edge_index;  // position in the subgraph edge list
};

std::uint32_t local_index(const Subgraph& h, NodeId v) {
  return static_cast<std::uint32_t>(std::lower_bound(h.nodes.begin(), h.nodes.end(), v) -
                                    h.nodes.begin());
}

LocalGraph build_local(const Subgraph& h) {
  const std::size_t n = h.nodes.size();
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::size_t>> arcs;
  arcs.reserve(h.edges.size());
  for (std::size_t i = 0; i < h.edges.size(); ++i) {
    arcs.emplace_back(local_index(h, h.edges[i].src), local_index(h, h.edges[i].dst), i);
  }
  std::sort(arcs.begin(), arcs.end());
  LocalGraph g;
  g.offsets.assign(n + 1, 0);
  for (const auto& [u, v, i] : arcs) ++g.offsets[u + 1];
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  for (const auto& [u, v, i] : arcs) {
    g.targets.push_back(v);
    g.edge_index.push_back(i);
  }
  return g;
}

}  // namespace

Subgraph break_cycles(const Subgraph& subgraph) {
  const std::size_t n = subgraph.nodes.size();
  const LocalGraph g = build_local(subgraph);

  enum : std::uint8_t { kWhite, kGray, kBlack };
  std::vector<std::uint8_t> color(n, kWhite);
  std::vector<bool> removed(subgraph.edges.size(), false);
  bool any_removed = false;

  // Stack of (node, next arc cursor).
  std::vector<std::pair<std::uint32_t, std::size_t>> stack;
  for (std::uint32_t root = 0; root < n; ++root) {
    if (color[root] != kWhite) continue;
    color[root] = kGray;
    stack.emplace_back(root, g.offsets[root]);
    while (!stack.empty()) {
      auto& [u, cursor] = stack.back();
      if (cursor == g.offsets[u + 1]) {
        color[u] = kBlack;
        stack.pop_back();
        continue;
      }
      const std::size_t arc = cursor++;
      const std::uint32_t v = g.targets[arc];
      if (color[v] == kGray) {
        removed[g.edge_index[arc]] = true;
        any_removed = true;
      } else if (color[v] == kWhite) {
        color[v] = kGray;
        stack.emplace_back(v, g.offsets[v]);
      }
    }
  }

  if (!any_removed) return subgraph;
  Subgraph out = subgraph;
  out.edges.clear();
  for (std::size_t i = 0; i < subgraph.edges.size(); ++i) {
    if (!removed[i]) out.edges.push_back(subgraph.edges[i]);
  }
  return out;
}

BoundarySets extract_boundary(const BackgroundGraph& graph, const Subgraph& subgraph) {
  const Subgraph dag = break_cycles(subgraph);
  const std::size_t n = dag.nodes.size();
  std::vector<std::size_t> in_degree(n, 0);
  std::vector<std::size_t> out_degree(n, 0);
  for (const Edge& e : dag.edges) {
    ++out_degree[local_index(dag, e.src)];
    ++in_degree[local_index(dag, e.dst)];
  }

  BoundarySets b;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_degree[i] == 0) b.sources.push_back(dag.nodes[i]);
    if (out_degree[i] == 0) b.sinks.push_back(dag.nodes[i]);
  }
  for (NodeId s : b.sources) {
    for (NodeId u : graph.in_neighbors(s)) {
      if (!dag.contains(u)) b.senders.push_back(u);
    }
  }
  for (NodeId t : b.sinks) {
    for (NodeId v : graph.out_neighbors(t)) {
      if (!dag.contains(v)) b.receivers.push_back(v);
    }
  }
  for (auto* set : {&b.senders, &b.receivers}) {
    std::sort(set->begin(), set->end());
    set->erase(std::unique(set->begin(), set->end()), set->end());
  }
  return b;
}

}  // namespace revtrack
