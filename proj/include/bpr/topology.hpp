#pragma once

#include <limits>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "bpr/types.hpp"

namespace bpr {

// A directed, capacitated link. A bidirectional physical link is stored as
// two Link records, one per direction.
struct Link {
  LinkId id;
  NodeId source;
  NodeId dest;
  Batches bandwidth = 1;  // batches served per slot
};

// Parallel links sharing (source, dest). Destination assignments across the
// members are permuted jointly by the rule engine.
struct MultiLinkGroup {
  NodeId source;
  NodeId dest;
  std::vector<LinkId> members;
};

// Bilateral peering constraints. Everything is permitted unless denied.
// A denial only affects rule derivation; baseline routing ignores it.
class PeeringPolicy {
 public:
  void deny(NodeId source, NodeId dest) { denied_.emplace(source, dest); }
  bool allowed(NodeId source, NodeId dest) const { return !denied_.contains({source, dest}); }
  const std::set<std::pair<NodeId, NodeId>>& denied() const { return denied_; }

 private:
  std::set<std::pair<NodeId, NodeId>> denied_;
};

class Topology {
 public:
  static constexpr int kUnreachable = std::numeric_limits<int>::max();

  // Link ids must equal their position in `links`. Throws std::invalid_argument
  // on malformed input (self-loops, zero bandwidth, bad node indices,
  // inconsistent multi-link groups).
  Topology(std::size_t node_count, std::vector<Link> links, std::vector<MultiLinkGroup> multilinks = {},
           PeeringPolicy policy = {});

  std::size_t node_count() const { return node_count_; }
  std::span<const Link> links() const { return links_; }
  const Link& link(LinkId id) const { return links_.at(id.value); }
  std::span<const MultiLinkGroup> multilinks() const { return multilinks_; }
  const PeeringPolicy& policy() const { return policy_; }

  // Out-links of n in ascending link id, including policy-denied ones.
  std::span<const LinkId> out_links(NodeId n) const { return out_.at(n.value); }
  std::span<const LinkId> in_links(NodeId n) const { return in_.at(n.value); }

  // Minimum hop count over the directed graph, kUnreachable if none.
  int hop_distance(NodeId a, NodeId b) const { return hops_[a.value * node_count_ + b.value]; }

  bool connected() const;
  int diameter() const;

 private:
  std::size_t node_count_;
  std::vector<Link> links_;
  std::vector<MultiLinkGroup> multilinks_;
  PeeringPolicy policy_;
  std::vector<std::vector<LinkId>> out_;
  std::vector<std::vector<LinkId>> in_;
  std::vector<int> hops_;
};

// Whole batches a link can carry per slot; fractional remainders are dropped.
Batches batches_per_slot(double bandwidth_bytes_per_sec, double batch_bytes, double slot_sec);

// rows x cols lattice; node (i, j) has index i * cols + j and is linked both
// ways to its up/down/left/right neighbors.
Topology build_grid(int rows, int cols, double bandwidth_bytes_per_sec, double batch_bytes, double slot_sec);

}  // namespace bpr
