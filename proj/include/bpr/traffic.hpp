#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bpr/types.hpp"

namespace bpr {

struct TrafficConfig {
  double base_rate = 0.0;      // G, batches per slot per node
  double heterogeneity = 0.0;  // v: per-node rate drawn from U[G - vG, G + vG]
  std::uint64_t seed = 1;
};

// The realized generation pattern of a run, fixed up front so that an oracle
// forecaster can read ahead. Per-node rates are drawn once; each slot a node
// creates floor(rate) batches plus one more with probability frac(rate), each
// with a destination uniform over the other nodes.
class TrafficSchedule {
 public:
  TrafficSchedule(std::size_t node_count, const TrafficConfig& config, Slot length);

  std::size_t node_count() const { return node_count_; }
  Slot length() const { return length_; }
  double rate(NodeId n) const { return rates_.at(n.value); }

  // Destinations of the batches created at n during slot t, in creation order.
  std::span<const NodeId> batches(Slot t, NodeId n) const;

 private:
  std::size_t node_count_;
  Slot length_;
  std::vector<double> rates_;
  std::vector<std::size_t> offsets_;  // (t, n) -> start in dests_, plus a sentinel
  std::vector<NodeId> dests_;
};

}  // namespace bpr
