#include <doctest.h>

#include "support.hpp"

using namespace revtrack;
using revtrack::testing::make_subgraph;

TEST_CASE("one triangle") {
  const std::vector<Subgraph> sg{make_subgraph({0, 1, 2}, {{0, 1}, {1, 2}, {2, 0}})};
  const auto h = graphlet_census(sg);
  CHECK(h[Graphlet::kEdge] == 3);
  CHECK(h[Graphlet::kTriangle] == 1);
  CHECK(h.total() == 4);
}

TEST_CASE("directed path counts as an undirected path") {
  const std::vector<Subgraph> sg{make_subgraph({0, 1, 2}, {{0, 1}, {1, 2}})};
  const auto h = graphlet_census(sg);
  CHECK(h[Graphlet::kEdge] == 2);
  CHECK(h[Graphlet::kPath3] == 1);
  CHECK(h.total() == 3);
}

TEST_CASE("antiparallel edges merge") {
  const std::vector<Subgraph> sg{make_subgraph({0, 1}, {{0, 1}, {1, 0}})};
  CHECK(graphlet_census(sg)[Graphlet::kEdge] == 1);
}

TEST_CASE("empty input yields an empty histogram") {
  const auto h = graphlet_census({});
  CHECK(h.total() == 0);
  CHECK_FALSE(h.frequencies().has_value());
}

TEST_CASE("frequencies sum to one") {
  const std::vector<Subgraph> sg{make_subgraph({0, 1, 2, 3}, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}})};
  const auto f = graphlet_census(sg).frequencies();
  REQUIRE(f.has_value());
  double total = 0.0;
  for (double x : *f) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("subgraphs over the node cap are skipped") {
  const std::vector<Subgraph> sg{make_subgraph({0, 1, 2}, {{0, 1}, {1, 2}}), make_subgraph({0, 1}, {{0, 1}})};
  const auto h = graphlet_census(sg, 2);
  CHECK(h.skipped == 1);
  CHECK(h[Graphlet::kEdge] == 1);
}

TEST_CASE("census matches exhaustive enumeration on random small graphs") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 9);
    const double p = uniform(rng, 0.1, 0.9);
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<Edge> edges;
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        if (uniform01(rng) < p) {
          adj[u][v] = adj[v][u] = true;
          edges.push_back(uniform01(rng) < 0.5 ? Edge{u, v} : Edge{v, u});
        }
      }
    }
    std::vector<NodeId> nodes(n);
    for (NodeId i = 0; i < n; ++i) nodes[i] = i;
    const std::vector<Subgraph> sg{make_subgraph(nodes, edges)};
    CHECK(graphlet_census(sg).counts == revtrack::testing::brute_force_graphlets(adj));
  }
}
