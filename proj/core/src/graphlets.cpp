#include "revtrack/graphlets.hpp"

#include <algorithm>

namespace revtrack {

std::string_view to_string(Graphlet g) {
  static constexpr std::array<std::string_view, kNumGraphlets> kNames = {
      "edge", "path3", "triangle", "path4", "star4",
      "cycle4", "tailed_triangle", "diamond", "clique4"};
  return kNames[static_cast<std::size_t>(g)];
}

std::uint64_t GraphletHistogram::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

std::optional<std::array<double, kNumGraphlets>> GraphletHistogram::frequencies() const {
  const std::uint64_t sum = total();
  if (sum == 0) return std::nullopt;
  std::array<double, kNumGraphlets> f{};
  for (std::size_t i = 0; i < kNumGraphlets; ++i) {
    f[i] = static_cast<double>(counts[i]) / static_cast<double>(sum);
  }
  return f;
}

GraphletHistogram& GraphletHistogram::operator+=(const GraphletHistogram& other) {
  for (std::size_t i = 0; i < kNumGraphlets; ++i) counts[i] += other.counts[i];
  skipped += other.skipped;
  return *this;
}

namespace {

bool adjacent(std::span<const std::vector<std::uint32_t>> adj, std::uint32_t a, std::uint32_t b) {
  return std::binary_search(adj[a].begin(), adj[a].end(), b);
}

Graphlet classify4(std::span<const std::vector<std::uint32_t>> adj,
                   const std::array<std::uint32_t, 4>& nodes) {
  std::array<int, 4> degree{};
  int edges = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      if (adjacent(adj, nodes[i], nodes[j])) {
        ++edges;
        ++degree[i];
        ++degree[j];
      }
    }
  }
  const int max_degree = *std::max_element(degree.begin(), degree.end());
  switch (edges) {
    case 3:
      return max_degree == 3 ? Graphlet::kStar4 : Graphlet::kPath4;
    case 4:
      return max_degree == 3 ? Graphlet::kTailedTriangle : Graphlet::kCycle4;
    case 5:
      return Graphlet::kDiamond;
    default:
      return Graphlet::kClique4;
  }
}

// ESU enumeration (Wernicke 2006) of connected induced subgraphs of size
// 3 and 4 rooted at the smallest vertex; each subset is produced once.
void extend(std::span<const std::vector<std::uint32_t>> adj, std::array<std::uint32_t, 4>& sub,
            int size, std::vector<std::uint32_t> extension, std::uint32_t root,
            std::vector<std::uint8_t>& in_neighborhood, GraphletHistogram& hist) {
  if (size == 3) {
    const bool closed = adjacent(adj, sub[0], sub[1]) && adjacent(adj, sub[1], sub[2]) &&
                        adjacent(adj, sub[0], sub[2]);
    ++hist.counts[static_cast<std::size_t>(closed ? Graphlet::kTriangle : Graphlet::kPath3)];
  } else if (size == 4) {
    ++hist.counts[static_cast<std::size_t>(classify4(adj, sub))];
    return;
  }
  while (!extension.empty()) {
    const std::uint32_t w = extension.back();
    extension.pop_back();
    // Exclusive neighbors of w: greater than root, not in the current
    // subgraph and not adjacent to it.
    std::vector<std::uint32_t> next = extension;
    std::vector<std::uint32_t> marked;
    for (std::uint32_t u : adj[w]) {
      if (u > root && !in_neighborhood[u]) {
        next.push_back(u);
        in_neighborhood[u] = 1;
        marked.push_back(u);
      }
    }
    sub[static_cast<std::size_t>(size)] = w;
    extend(adj, sub, size + 1, std::move(next), root, in_neighborhood, hist);
    for (std::uint32_t u : marked) in_neighborhood[u] = 0;
  }
}

}  // namespace

GraphletHistogram count_graphlets(std::span<const std::vector<std::uint32_t>> adjacency) {
  GraphletHistogram hist;
  const auto n = static_cast<std::uint32_t>(adjacency.size());
  // in_neighborhood marks vertices in the current subgraph or adjacent to it.
  std::vector<std::uint8_t> in_neighborhood(n, 0);
  std::array<std::uint32_t, 4> sub{};
  for (std::uint32_t v = 0; v < n; ++v) {
    std::vector<std::uint32_t> extension;
    in_neighborhood[v] = 1;
    for (std::uint32_t u : adjacency[v]) {
      if (u > v) {
        ++hist.counts[static_cast<std::size_t>(Graphlet::kEdge)];
        extension.push_back(u);
      }
      in_neighborhood[u] = 1;
    }
    sub[0] = v;
    // Size-2 subsets are counted above; ESU continues from each edge.
    while (!extension.empty()) {
      const std::uint32_t w = extension.back();
      extension.pop_back();
      std::vector<std::uint32_t> next = extension;
      std::vector<std::uint32_t> marked;
      for (std::uint32_t u : adjacency[w]) {
        if (u > v && !in_neighborhood[u]) {
          next.push_back(u);
          in_neighborhood[u] = 1;
          marked.push_back(u);
        }
      }
      sub[1] = w;
      extend(adjacency, sub, 2, std::move(next), v, in_neighborhood, hist);
      for (std::uint32_t u : marked) in_neighborhood[u] = 0;
    }
    in_neighborhood[v] = 0;
    for (std::uint32_t u : adjacency[v]) in_neighborhood[u] = 0;
  }
  return hist;
}

GraphletHistogram graphlet_census(std::span<const Subgraph> subgraphs, std::size_t node_cap) {
  GraphletHistogram total;
  for (const Subgraph& h : subgraphs) {
    if (h.nodes.size() > node_cap) {
      ++total.skipped;
      continue;
    }
    std::vector<NodeId> nodes = h.nodes;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    auto index = [&](NodeId v) {
      return static_cast<std::uint32_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };
    std::vector<std::vector<std::uint32_t>> adj(nodes.size());
    for (const Edge& e : h.edges) {
      if (e.src == e.dst) continue;
      const auto a = index(e.src);
      const auto b = index(e.dst);
      if (a >= nodes.size() || b >= nodes.size() || nodes[a] != e.src || nodes[b] != e.dst) continue;
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    for (auto& list : adj) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    total += count_graphlets(adj);
  }
  return total;
}

}  // namespace revtrack
