#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "revtrack/graph.hpp"

namespace revtrack {

/// The nine connected undirected graphlets on 2-4 nodes.
enum class Graphlet : std::uint8_t {
  kEdge,
  kPath3,
  kTriangle,
  kPath4,
  kStar4,
  kCycle4,
  kTailedTriangle,
  kDiamond,
  kClique4,
};

inline constexpr std::size_t kNumGraphlets = 9;

std::string_view to_string(Graphlet g);

struct GraphletHistogram {
  std::array<std::uint64_t, kNumGraphlets> counts{};
  /// Subgraphs skipped because they exceeded the node cap.
  std::size_t skipped = 0;

  std::uint64_t total() const;
  std::uint64_t operator[](Graphlet g) const { return counts[static_cast<std::size_t>(g)]; }
  /// Counts normalized jointly over all nine types; nullopt when empty.
  std::optional<std::array<double, kNumGraphlets>> frequencies() const;
  GraphletHistogram& operator+=(const GraphletHistogram& other);
};

inline constexpr std::size_t kDefaultGraphletNodeCap = 200;

/// Counts connected induced graphlets of one simple undirected graph given
/// as sorted adjacency lists over local indices.
GraphletHistogram count_graphlets(std::span<const std::vector<std::uint32_t>> adjacency);

/// Sums graphlet counts over subgraphs. Edge directions are dropped and
/// parallel/antiparallel edges merged. Subgraphs with more than `node_cap`
/// nodes are skipped and counted in `skipped`.
GraphletHistogram graphlet_census(std::span<const Subgraph> subgraphs,
                                  std::size_t node_cap = kDefaultGraphletNodeCap);

}  // namespace revtrack
