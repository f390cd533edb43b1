#include "bpr/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bpr {

std::string_view to_string(HopFilter f) {
  switch (f) {
    case HopFilter::strict_decrease: return "strict_decrease";
    case HopFilter::non_increase: return "non_increase";
    case HopFilter::off: return "off";
  }
  return "?";
}

HopFilter parse_hop_filter(std::string_view s) {
  if (s == "strict_decrease") return HopFilter::strict_decrease;
  if (s == "non_increase") return HopFilter::non_increase;
  if (s == "off") return HopFilter::off;
  throw std::invalid_argument("unknown hop filter '" + std::string(s) + "'");
}

std::string_view to_string(AlarmScope s) {
  return s == AlarmScope::node ? "node" : "destination";
}

AlarmScope parse_alarm_scope(std::string_view s) {
  if (s == "destination") return AlarmScope::destination;
  if (s == "node") return AlarmScope::node;
  throw std::invalid_argument("unknown alarm scope '" + std::string(s) + "'");
}

Batches delta_score(const NetworkSnapshot& snapshot, const Forecast& forecast, NodeId n, NodeId neighbor, NodeId c) {
  return snapshot.queues.at(n, c) - snapshot.queues.at(neighbor, c) - forecast.generated.at(neighbor, c);
}

namespace {

bool passes_hop_filter(const Topology& topology, HopFilter filter, NodeId n, NodeId next, NodeId c) {
  switch (filter) {
    case HopFilter::off: return true;
    case HopFilter::strict_decrease: return topology.hop_distance(next, c) < topology.hop_distance(n, c);
    case HopFilter::non_increase: return topology.hop_distance(next, c) <= topology.hop_distance(n, c);
  }
  return false;
}

// Destination search of the foresight algorithm (visited array, argmax per
// link). Returns one assignment per link id; denied links stay empty.
std::vector<LinkAssignment> select_destinations(const NetworkSnapshot& snapshot, const Forecast& forecast,
                                                const Topology& topology, const EngineConfig& config) {
  const std::size_t N = topology.node_count();
  std::vector<LinkAssignment> out(topology.links().size());
  std::vector<char> visited(N);
  const bool gate_node = config.alarm_level > 0 && config.alarm_scope == AlarmScope::node;
  const bool gate_class = config.alarm_level > 0 && config.alarm_scope == AlarmScope::destination;

  for (std::size_t ni = 0; ni < N; ++ni) {
    const NodeId n{ni};
    if (gate_node) {
      Batches backlog = 0;
      for (std::size_t ci = 0; ci < N; ++ci) backlog += snapshot.queues.at(n, NodeId{ci});
      if (backlog < config.alarm_level) continue;
    }
    std::fill(visited.begin(), visited.end(), 0);
    for (LinkId id : topology.out_links(n)) {
      const Link& l = topology.link(id);
      if (!topology.policy().allowed(l.source, l.dest)) continue;

      std::optional<NodeId> best;
      Batches best_score = 0;
      for (std::size_t ci = 0; ci < N; ++ci) {
        const NodeId c{ci};
        if (c == n || visited[ci]) continue;
        if (gate_class && snapshot.queues.at(n, c) < config.alarm_level) continue;
        if (!passes_hop_filter(topology, config.hop_filter, n, l.dest, c)) continue;
        Batches score = delta_score(snapshot, forecast, n, l.dest, c);
        if (!best || score > best_score) {
          best = c;
          best_score = score;
        }
      }
      if (!best) continue;

      visited[best->value] = 1;
      out[id.value] = LinkAssignment{best, std::max<Batches>(0, snapshot.queues.at(n, *best) - snapshot.queues.at(l.dest, *best))};
    }
  }
  return out;
}

RuleSet derive_rules(const NetworkSnapshot& snapshot, const Forecast& forecast, const Topology& topology,
                     const EngineConfig& config) {
  std::vector<LinkAssignment> assigned = select_destinations(snapshot, forecast, topology, config);

  for (const MultiLinkGroup& group : topology.multilinks()) {
    std::vector<LinkAssignment> candidates;
    candidates.reserve(group.members.size());
    for (LinkId id : group.members) candidates.push_back(assigned[id.value]);
    std::vector<LinkAssignment> best = assign_multilinks(group, candidates, topology);
    for (std::size_t i = 0; i < group.members.size(); ++i) assigned[group.members[i].value] = best[i];
  }

  RuleSet result{snapshot.time, {}};
  for (const Link& l : topology.links()) {
    const LinkAssignment& a = assigned[l.id.value];
    if (a.destination && a.differential > 0) result.rules.push_back(PriorityRule{l.source, *a.destination, l.id, a.differential});
  }
  return result;
}

}  // namespace

RuleSet fbpr_rules(const NetworkSnapshot& snapshot, const Forecast& forecast, const Topology& topology,
                   const NextHopTable& baseline, const EngineConfig& config, int period) {
  if (forecast.horizon != period)
    throw std::invalid_argument("forecast horizon " + std::to_string(forecast.horizon) + " does not match period " +
                                std::to_string(period));
  if (config.alarm_level < 0) throw std::invalid_argument("alarm level must be non-negative");
  RuleSet rules = derive_rules(snapshot, forecast, topology, config);
  if (config.loop_detection || config.hop_filter == HopFilter::non_increase)
    rules = detect_and_filter_loops(rules, baseline, topology);
  return rules;
}

RuleSet sbpr_proposals(const NetworkSnapshot& snapshot, const Topology& topology, const EngineConfig& config) {
  if (config.alarm_level < 0) throw std::invalid_argument("alarm level must be non-negative");
  EngineConfig c = config;
  c.hop_filter = HopFilter::off;
  return derive_rules(snapshot, Forecast::zero(topology.node_count(), 1), topology, c);
}

RuleSet sbpr_rules(const NetworkSnapshot& snapshot, const Topology& topology, const NextHopTable& baseline,
                   const EngineConfig& config) {
  return detect_and_filter_loops(sbpr_proposals(snapshot, topology, config), baseline, topology);
}

std::vector<LinkAssignment> assign_multilinks(const MultiLinkGroup& group, std::span<const LinkAssignment> candidates,
                                              const Topology& topology) {
  if (candidates.size() != group.members.size())
    throw std::invalid_argument("multi-link group has " + std::to_string(group.members.size()) + " members but " +
                                std::to_string(candidates.size()) + " candidate assignments");

  const std::size_t k = candidates.size();
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  auto objective = [&](const std::vector<std::size_t>& p) {
    Batches sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += topology.link(group.members[i]).bandwidth * candidates[p[i]].differential;
    return sum;
  };

  std::vector<std::size_t> best = perm;
  Batches best_value = objective(perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    Batches v = objective(perm);
    if (v > best_value) {
      best_value = v;
      best = perm;
    }
  }

  std::vector<LinkAssignment> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = candidates[best[i]];
  return out;
}

RuleSet detect_and_filter_loops(const RuleSet& rules, const NextHopTable& baseline, const Topology& topology) {
  const std::size_t N = topology.node_count();
  std::vector<bool> removed(rules.rules.size(), false);

  // rule_at[m] = index of the rule for (m, c), or npos.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> rule_at(N);
  std::vector<std::size_t> next(N);
  std::vector<int> state(N);  // 0 unseen, 1 on current walk, 2 done

  for (std::size_t ci = 0; ci < N; ++ci) {
    const NodeId c{ci};
    bool any = false;
    for (const PriorityRule& r : rules.rules) any |= (r.to == c);
    if (!any) continue;

    for (;;) {
      std::fill(rule_at.begin(), rule_at.end(), npos);
      for (std::size_t i = 0; i < rules.rules.size(); ++i)
        if (!removed[i] && rules.rules[i].to == c) rule_at[rules.rules[i].from.value] = i;
      for (std::size_t m = 0; m < N; ++m) {
        if (m == ci) continue;
        next[m] = rule_at[m] != npos ? topology.link(rules.rules[rule_at[m]].via).dest.value
                                     : topology.link(baseline.route_of(NodeId{m}, c)).dest.value;
      }

      std::fill(state.begin(), state.end(), 0);
      state[ci] = 2;
      std::optional<std::size_t> cycle_start;
      for (std::size_t s = 0; s < N && !cycle_start; ++s) {
        std::size_t u = s;
        while (state[u] == 0) {
          state[u] = 1;
          u = next[u];
        }
        if (state[u] == 1) cycle_start = u;
        for (std::size_t w = s; state[w] == 1; w = next[w]) state[w] = 2;
      }
      if (!cycle_start) break;

      std::size_t victim = npos;
      std::size_t u = *cycle_start;
      do {
        std::size_t r = rule_at[u];
        if (r != npos) {
          const PriorityRule& cand = rules.rules[r];
          if (victim == npos || cand.differential < rules.rules[victim].differential ||
              (cand.differential == rules.rules[victim].differential && cand.via < rules.rules[victim].via))
            victim = r;
        }
        u = next[u];
      } while (u != *cycle_start);
      // A cycle always contains at least one rule because the baseline is loop-free.
      removed[victim] = true;
    }
  }

  RuleSet out{rules.time, {}};
  for (std::size_t i = 0; i < rules.rules.size(); ++i)
    if (!removed[i]) out.rules.push_back(rules.rules[i]);
  return out;
}

std::vector<TransitCheck> check_transit_assumption(const NetworkSnapshot& snapshot, const Forecast& forecast,
                                                   const Topology& topology, const RuleSet& chosen) {
  std::vector<TransitCheck> out;
  out.reserve(chosen.rules.size());
  for (const PriorityRule& r : chosen.rules) {
    const Link& l = topology.link(r.via);
    const NodeId b = l.dest;
    Batches transit = l.bandwidth;
    for (LinkId in : topology.in_links(b)) transit += topology.link(in).bandwidth;
    const Batches lhs = static_cast<Batches>(forecast.horizon) * transit;
    const Batches rhs = delta_score(snapshot, forecast, r.from, b, r.to);
    out.push_back(TransitCheck{r.from, r.to, lhs > rhs});
  }
  return out;
}

std::string format_rules(const RuleSet& rules) {
  std::ostringstream os;
  for (const PriorityRule& r : rules.rules)
    os << "from=" << r.from.value << " to=" << r.to.value << " via=" << r.via.value << " dq=" << r.differential << '\n';
  return os.str();
}

RuleSet parse_rules(std::string_view text) {
  RuleSet out;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::size_t from = 0, to = 0, via = 0;
    long long dq = 0;
    if (std::sscanf(line.c_str(), "from=%zu to=%zu via=%zu dq=%lld", &from, &to, &via, &dq) != 4)
      throw std::invalid_argument("malformed rule line: " + line);
    out.rules.push_back(PriorityRule{NodeId{from}, NodeId{to}, LinkId{via}, dq});
  }
  return out;
}

}  // namespace bpr
