#include "bpr/routing.hpp"

#include <stdexcept>
#include <string>

namespace bpr {

NextHopTable::NextHopTable(std::size_t node_count, std::vector<LinkId> entries)
    : node_count_(node_count), entries_(std::move(entries)) {
  if (entries_.size() != node_count_ * node_count_) throw std::invalid_argument("next-hop table has the wrong size");
}

LinkId NextHopTable::route_of(NodeId n, NodeId c) const {
  if (n == c) throw std::invalid_argument("no route from node " + std::to_string(n.value) + " to itself");
  if (n.value >= node_count_ || c.value >= node_count_) throw std::invalid_argument("node index out of range");
  return entries_[n.value * node_count_ + c.value];
}

NextHopTable compute_next_hops(const Topology& topology) {
  const std::size_t N = topology.node_count();
  std::vector<LinkId> entries(N * N);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < N; ++c) {
      if (n == c) continue;
      const int d = topology.hop_distance(NodeId{n}, NodeId{c});
      if (d == Topology::kUnreachable)
        throw std::runtime_error("node " + std::to_string(c) + " is unreachable from node " + std::to_string(n));
      const Link* best = nullptr;
      for (LinkId id : topology.out_links(NodeId{n})) {
        const Link& l = topology.link(id);
        if (topology.hop_distance(l.dest, NodeId{c}) != d - 1) continue;
        // out_links is in ascending id, so strict < keeps the lowest id per neighbor.
        if (best == nullptr || l.dest < best->dest) best = &l;
      }
      entries[n * N + c] = best->id;
    }
  }
  return NextHopTable(N, std::move(entries));
}

}  // namespace bpr
