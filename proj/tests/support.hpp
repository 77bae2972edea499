#pragma once

// Shared fixtures and brute-force reference implementations for tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <map>
#include <set>
#include <vector>

#include "revtrack/graph.hpp"
#include "revtrack/graphlets.hpp"
#include "revtrack/model.hpp"
#include "revtrack/pair.hpp"
#include "revtrack/random.hpp"
#include "revtrack/rec_eval.hpp"

namespace revtrack::testing {

/// Graph with zero features of the given dimension.
inline BackgroundGraph make_graph(std::size_t n, std::vector<Edge> edges, std::size_t dim = 1,
                                  std::vector<NodeLabel> labels = {}) {
  return BackgroundGraph::build(n, std::move(edges), dim, std::vector<double>(n * dim, 0.0), std::move(labels));
}

inline Subgraph make_subgraph(std::vector<NodeId> nodes, std::vector<Edge> edges, std::string id = "h") {
  Subgraph s{std::move(id), std::move(nodes), std::move(edges), std::nullopt};
  s.normalize();
  return s;
}

/// Erdos-Renyi style directed graph without self-loops.
inline BackgroundGraph random_graph(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < m; ++i) {
    const auto u = static_cast<NodeId>(uniform_index(rng, n));
    const auto v = static_cast<NodeId>(uniform_index(rng, n));
    if (u != v) edges.push_back({u, v});
  }
  return make_graph(n, std::move(edges));
}

/// Random subgraph: a random walk-ish node set with every background edge
/// between chosen nodes kept with probability 0.8.
inline Subgraph random_subgraph(const BackgroundGraph& g, std::size_t max_nodes, Rng& rng) {
  std::set<NodeId> nodes{static_cast<NodeId>(uniform_index(rng, g.num_nodes()))};
  const std::size_t target = 1 + uniform_index(rng, max_nodes);
  for (std::size_t attempt = 0; nodes.size() < target && attempt < 4 * target; ++attempt) {
    const NodeId from = *std::next(nodes.begin(), static_cast<std::ptrdiff_t>(uniform_index(rng, nodes.size())));
    const auto out = g.out_neighbors(from);
    const auto in = g.in_neighbors(from);
    if (out.empty() && in.empty()) {
      nodes.insert(static_cast<NodeId>(uniform_index(rng, g.num_nodes())));
      continue;
    }
    const std::size_t pick = uniform_index(rng, out.size() + in.size());
    nodes.insert(pick < out.size() ? out[pick] : in[pick - out.size()]);
  }
  std::vector<Edge> edges;
  for (NodeId u : nodes) {
    for (NodeId v : g.out_neighbors(u)) {
      if (nodes.contains(v) && uniform01(rng) < 0.8) edges.push_back({u, v});
    }
  }
  return make_subgraph({nodes.begin(), nodes.end()}, std::move(edges));
}

/// Kahn's algorithm on an edge list over `nodes`.
inline bool is_acyclic(const std::vector<NodeId>& nodes, const std::vector<Edge>& edges) {
  std::map<NodeId, int> indeg;
  for (NodeId v : nodes) indeg[v] = 0;
  for (const Edge& e : edges) ++indeg[e.dst];
  std::vector<NodeId> ready;
  for (auto& [v, d] : indeg) {
    if (d == 0) ready.push_back(v);
  }
  std::size_t removed = 0;
  while (!ready.empty()) {
    const NodeId v = ready.back();
    ready.pop_back();
    ++removed;
    for (const Edge& e : edges) {
      if (e.src == v && --indeg[e.dst] == 0) ready.push_back(e.dst);
    }
  }
  return removed == indeg.size();
}

/// Boundary sets computed straight from the definitions, by scanning every
/// node of the background graph.
inline BoundarySets naive_boundary(const BackgroundGraph& g, const Subgraph& h) {
  const Subgraph dag = break_cycles(h);
  BoundarySets b;
  for (NodeId v : h.nodes) {
    bool has_in = false;
    bool has_out = false;
    for (const Edge& e : dag.edges) {
      has_in |= e.dst == v;
      has_out |= e.src == v;
    }
    if (!has_in) b.sources.push_back(v);
    if (!has_out) b.sinks.push_back(v);
  }
  auto in_h = [&](NodeId v) { return std::find(h.nodes.begin(), h.nodes.end(), v) != h.nodes.end(); };
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    if (in_h(u)) continue;
    for (NodeId s : b.sources) {
      if (g.has_edge(u, s)) {
        b.senders.push_back(u);
        break;
      }
    }
    for (NodeId t : b.sinks) {
      if (g.has_edge(t, u)) {
        b.receivers.push_back(u);
        break;
      }
    }
  }
  return b;
}

/// Exhaustive induced-subgraph census over all 2-, 3- and 4-node subsets of
/// a simple undirected graph given as an adjacency matrix.
inline std::array<std::uint64_t, kNumGraphlets> brute_force_graphlets(const std::vector<std::vector<bool>>& adj) {
  std::array<std::uint64_t, kNumGraphlets> counts{};
  const std::size_t n = adj.size();
  auto classify = [&](const std::vector<std::size_t>& vs) -> int {
    std::vector<int> deg(vs.size(), 0);
    for (std::size_t i = 0; i < vs.size(); ++i) {
      for (std::size_t j = 0; j < vs.size(); ++j) {
        if (i != j && adj[vs[i]][vs[j]]) ++deg[i];
      }
    }
    // Connectivity by flood fill.
    std::vector<bool> seen(vs.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < vs.size(); ++j) {
        if (!seen[j] && adj[vs[i]][vs[j]]) {
          seen[j] = true;
          ++reached;
          stack.push_back(j);
        }
      }
    }
    if (reached != vs.size()) return -1;
    std::sort(deg.begin(), deg.end());
    using G = Graphlet;
    static const std::map<std::vector<int>, G> by_degrees = {
        {{1, 1}, G::kEdge},           {{1, 1, 2}, G::kPath3},          {{2, 2, 2}, G::kTriangle},
        {{1, 1, 2, 2}, G::kPath4},    {{1, 1, 1, 3}, G::kStar4},       {{2, 2, 2, 2}, G::kCycle4},
        {{1, 2, 2, 3}, G::kTailedTriangle}, {{2, 2, 3, 3}, G::kDiamond}, {{3, 3, 3, 3}, G::kClique4}};
    return static_cast<int>(by_degrees.at(deg));
  };
  std::vector<std::size_t> vs;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (vs.size() >= 2) {
      const int g = classify(vs);
      if (g >= 0) ++counts[static_cast<std::size_t>(g)];
    }
    if (vs.size() == 4) return;
    for (std::size_t v = start; v < n; ++v) {
      vs.push_back(v);
      rec(v + 1);
      vs.pop_back();
    }
  };
  rec(0);
  return counts;
}

/// Scores 1 when the pair's product contains a true link, else 0.
class OracleScorer : public PairScorer {
 public:
  explicit OracleScorer(std::set<std::pair<NodeId, NodeId>> truth) : truth_(std::move(truth)) {}
  OracleScorer(std::initializer_list<std::pair<NodeId, NodeId>> truth) : truth_(truth) {}
  std::vector<double> score(std::span<const SRPair> pairs) const override {
    std::vector<double> out;
    for (const SRPair& p : pairs) {
      bool hit = false;
      for (const auto& [s, r] : truth_) {
        hit |= std::binary_search(p.senders.begin(), p.senders.end(), s) &&
               std::binary_search(p.receivers.begin(), p.receivers.end(), r);
      }
      out.push_back(hit ? 1.0 : 0.0);
      ++calls_;
    }
    return out;
  }
  std::size_t calls() const { return calls_; }

 private:
  std::set<std::pair<NodeId, NodeId>> truth_;
  mutable std::size_t calls_ = 0;
};

// Definitional ranking metrics: rank-by-rank membership tests.
inline double def_hr(const std::vector<Link>& ranked, const std::vector<Link>& truth, std::size_t k) {
  std::size_t hits = 0;
  for (const Link& t : truth) {
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
      if (ranked[i] == t) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline double def_ndcg(const std::vector<Link>& ranked, const std::vector<Link>& truth, std::size_t k) {
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    if (std::find(truth.begin(), truth.end(), ranked[i]) != truth.end()) dcg += 1.0 / std::log2(i + 2.0);
  }
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(truth.size(), k); ++i) ideal += 1.0 / std::log2(i + 2.0);
  return dcg / ideal;
}

// Random model and batch for finite-difference gradient checks.
struct FdCase {
  Model model;
  PairBatch batch;
  std::vector<int> labels;
  double pos_weight;
};

inline FdCase random_case(Arch arch, Rng& rng) {
  ModelConfig cfg;
  cfg.arch = arch;
  cfg.feature_dim = 2 + uniform_index(rng, 4);
  cfg.hidden_dim = 3 + uniform_index(rng, 6);
  cfg.mlp_layers = 1 + uniform_index(rng, 3);
  const nn::Pool pools[] = {nn::Pool::kSum, nn::Pool::kMean, nn::Pool::kMax};
  cfg.pool = pools[uniform_index(rng, 3)];
  cfg.readout = pools[uniform_index(rng, 3)];
  cfg.epsilon = uniform(rng, -0.5, 0.5);
  FdCase c{Model::create(cfg, rng()), {}, {}, uniform(rng, 0.5, 3.0)};
  // Zero biases leave dead rows exactly on the ReLU kink; move off it.
  std::vector<double> params = c.model.flatten();
  for (double& p : params) p += 0.1 * standard_normal(rng);
  c.model.assign(params);
  std::vector<SRPair> pairs;
  NodeId next = 0;
  for (int b = 0; b < 4; ++b) {
    SRPair p;
    for (std::size_t i = 0, n = 1 + uniform_index(rng, 4); i < n; ++i) p.senders.push_back(next++);
    for (std::size_t i = 0, n = 1 + uniform_index(rng, 4); i < n; ++i) p.receivers.push_back(next++);
    pairs.push_back(p);
    c.labels.push_back(static_cast<int>(uniform_index(rng, 2)));
  }
  std::vector<std::vector<double>> feats(next, std::vector<double>(cfg.feature_dim));
  for (auto& f : feats) {
    for (auto& x : f) x = standard_normal(rng);
  }
  c.batch = gather_batch(pairs, cfg.feature_dim,
                         [&](std::uint32_t v) { return std::span<const double>(feats[v]); });
  return c;
}

inline double gradient_error(FdCase& c) {
  Model grad = c.model.zeros_like();
  c.model.loss_and_gradient(c.batch, c.labels, grad, c.pos_weight);
  const std::vector<double> analytic = grad.flatten();
  std::vector<double> params = c.model.flatten();
  std::vector<double> numeric(params.size());
  const double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    Model probe = c.model;
    Model scratch = c.model.zeros_like();
    params[i] = saved + h;
    probe.assign(params);
    const double up = probe.loss_and_gradient(c.batch, c.labels, scratch, c.pos_weight);
    params[i] = saved - h;
    probe.assign(params);
    const double down = probe.loss_and_gradient(c.batch, c.labels, scratch, c.pos_weight);
    params[i] = saved;
    numeric[i] = (up - down) / (2 * h);
  }
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    norm += analytic[i] * analytic[i] + numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

}  // namespace revtrack::testing
