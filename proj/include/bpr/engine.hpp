#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bpr/routing.hpp"
#include "bpr/topology.hpp"

namespace bpr {

// Dense N x N matrix of batch counts indexed by (node, destination).
class QueueMatrix {
 public:
  QueueMatrix() = default;
  explicit QueueMatrix(std::size_t node_count) : n_(node_count), cells_(node_count * node_count, 0) {}

  std::size_t node_count() const { return n_; }
  Batches at(NodeId n, NodeId c) const { return cells_[n.value * n_ + c.value]; }
  Batches& at(NodeId n, NodeId c) { return cells_[n.value * n_ + c.value]; }
  std::span<const Batches> cells() const { return cells_; }

  friend bool operator==(const QueueMatrix&, const QueueMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Batches> cells_;
};

// U_(n,c)(t): backlog held at n destined to c, as seen by the controller.
struct NetworkSnapshot {
  Slot time = 0;
  QueueMatrix queues;
};

// G_(n,c) over [t, t + horizon): predicted batches generated at n for c.
struct Forecast {
  int horizon = 1;
  QueueMatrix generated;

  static Forecast zero(std::size_t node_count, int horizon) { return Forecast{horizon, QueueMatrix(node_count)}; }
};

struct PriorityRule {
  NodeId from;
  NodeId to;
  LinkId via;
  Batches differential = 0;

  friend bool operator==(const PriorityRule&, const PriorityRule&) = default;
};

struct RuleSet {
  Slot time = 0;
  std::vector<PriorityRule> rules;

  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

enum class HopFilter { strict_decrease, non_increase, off };

std::string_view to_string(HopFilter f);
HopFilter parse_hop_filter(std::string_view s);

// What the alarm level is compared against. `destination`: a class c is a
// candidate at n only if U_(n,c) >= alarm. `node`: n takes part in rule
// derivation only if its whole backlog sum_c U_(n,c) >= alarm.
enum class AlarmScope { destination, node };

std::string_view to_string(AlarmScope s);
AlarmScope parse_alarm_scope(std::string_view s);

struct EngineConfig {
  Batches alarm_level = 0;  // 0 disables gating
  AlarmScope alarm_scope = AlarmScope::destination;
  HopFilter hop_filter = HopFilter::strict_decrease;
  bool loop_detection = false;  // forced on by fbpr_rules when hop_filter == non_increase
};

// Per-link outcome of the destination search: the chosen class (if any
// candidate survived the filters) and its raw queue differential.
struct LinkAssignment {
  std::optional<NodeId> destination;
  Batches differential = 0;

  friend bool operator==(const LinkAssignment&, const LinkAssignment&) = default;
};

// U_(n,c) - U_(neighbor,c) - G_(neighbor,c). Can be negative.
Batches delta_score(const NetworkSnapshot& snapshot, const Forecast& forecast, NodeId n, NodeId neighbor, NodeId c);

// Foresight-enabled selection. For every node, out-links are visited in
// ascending id; each picks the not-yet-visited destination maximizing
// delta_score among those passing the hop filter and the alarm gate (ties to
// the lowest destination). Multi-link groups are then reassigned and rules
// with a positive raw differential are emitted. Throws std::invalid_argument
// if forecast.horizon != period.
RuleSet fbpr_rules(const NetworkSnapshot& snapshot, const Forecast& forecast, const Topology& topology,
                   const NextHopTable& baseline, const EngineConfig& config, int period);

// Standard backpressure proposals before loop filtering: the foresight search
// with a zero forecast and no hop filter.
RuleSet sbpr_proposals(const NetworkSnapshot& snapshot, const Topology& topology, const EngineConfig& config);

// sbpr_proposals followed by detect_and_filter_loops.
RuleSet sbpr_rules(const NetworkSnapshot& snapshot, const Topology& topology, const NextHopTable& baseline,
                   const EngineConfig& config);

// Permutes the group's destination assignments across its member links to
// maximize sum(bandwidth * differential). Exhaustive; ties keep the
// lexicographically smallest permutation. `candidates[i]` belongs to
// group.members[i]. Throws std::invalid_argument on a size mismatch.
std::vector<LinkAssignment> assign_multilinks(const MultiLinkGroup& group, std::span<const LinkAssignment> candidates,
                                              const Topology& topology);

// Removes rules until every per-destination forwarding graph (rules override
// baseline next hops) is acyclic. On each cycle the rule with the smallest
// differential, then smallest link id, goes first.
RuleSet detect_and_filter_loops(const RuleSet& rules, const NextHopTable& baseline, const Topology& topology);

struct TransitCheck {
  NodeId node;
  NodeId destination;
  bool holds = false;
};

// Evaluates T * (sum of bandwidth into b(n) + bandwidth of the rule link) >
// U_(n,c) - (U_(b,c) + G_(b,c)) for each rule. Diagnostic only.
std::vector<TransitCheck> check_transit_assumption(const NetworkSnapshot& snapshot, const Forecast& forecast,
                                                   const Topology& topology, const RuleSet& chosen);

// One `from=<n> to=<c> via=<linkid> dq=<int>` line per rule.
std::string format_rules(const RuleSet& rules);
RuleSet parse_rules(std::string_view text);

}  // namespace bpr
