#pragma once

#include <compare>
#include <span>
#include <vector>

#include "revtrack/graph.hpp"

namespace revtrack {

/// A (sender set, receiver set) pair. Both sides are kept sorted and unique.
struct SRPair {
  std::vector<NodeId> senders;
  std::vector<NodeId> receivers;

  bool one_to_one() const { return senders.size() == 1 && receivers.size() == 1; }
  std::size_t product_size() const { return senders.size() * receivers.size(); }

  friend auto operator<=>(const SRPair&, const SRPair&) = default;
};

/// Something that maps SR pairs to suspiciousness probabilities.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  /// One probability per pair, in input order.
  virtual std::vector<double> score(std::span<const SRPair> pairs) const = 0;
};

}  // namespace revtrack
