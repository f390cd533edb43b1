#pragma once

#include <vector>

#include "bpr/topology.hpp"

namespace bpr {

// Traffic-invariant hop-count shortest-path routing: one serving out-link per
// (node, destination) pair. Priority rules are overlays on top of this table.
class NextHopTable {
 public:
  NextHopTable(std::size_t node_count, std::vector<LinkId> entries);

  std::size_t node_count() const { return node_count_; }

  // Throws std::invalid_argument when n == c.
  LinkId route_of(NodeId n, NodeId c) const;

  friend bool operator==(const NextHopTable&, const NextHopTable&) = default;

 private:
  std::size_t node_count_;
  std::vector<LinkId> entries_;  // row-major (n, c); diagonal unused
};

// Minimum-hop next hops. Ties go to the lowest next-hop node, then the lowest
// link id. Throws std::runtime_error naming a pair if the graph is not
// strongly connected.
NextHopTable compute_next_hops(const Topology& topology);

inline LinkId route_of(const NextHopTable& table, NodeId n, NodeId c) { return table.route_of(n, c); }

}  // namespace bpr
