#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "bpr/controller.hpp"
#include "bpr/metrics.hpp"
#include "bpr/routing.hpp"
#include "bpr/traffic.hpp"

namespace bpr {

struct Batch {
  std::uint64_t id = 0;
  NodeId origin;
  NodeId destination;
  Slot created_at = 0;
  int hops = 0;
};

struct SimConfig {
  Topology topology;
  ControllerConfig controller;
  TrafficConfig traffic;
  ForecastProvider forecast;
  std::optional<AcceptancePolicy> acceptance;  // full acceptance when empty
  Slot slots = 600;
  std::optional<Slot> warmup;  // slots / 10 when empty
  double slot_sec = 1.0;
  double batch_bytes = 1e8;
  Batches capacity = 500;  // batches held per node
  bool event_log = false;

  Slot effective_warmup() const { return warmup.value_or(slots / 10); }

  // Throws std::invalid_argument describing the first problem found.
  void validate() const;
};

// Slotted-time backbone simulation. Each step runs, in order: controller
// actuation (on multiples of the period), local generation with admission
// control, link service, delivery/forwarding, and metric sampling. A served
// batch moves at most one hop per slot.
//
// Every node holds a single queue of capacity `capacity`. On each out-link,
// batches of the destination class bound to it by an active priority rule go
// first, youngest first; remaining bandwidth serves the classes whose baseline
// next hop is that link, oldest first.
class Simulation {
 public:
  explicit Simulation(SimConfig config);
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  void step();
  void run_to_end();
  bool finished() const { return now_ >= config_.slots; }

  Slot now() const { return now_; }
  const SimConfig& config() const { return config_; }
  const Topology& topology() const { return config_.topology; }
  const NextHopTable& baseline() const { return baseline_; }
  const TrafficSchedule& schedule() const { return schedule_; }
  const Controller& controller() const { return controller_; }

  NetworkSnapshot snapshot() const;
  Batches held(NodeId n) const { return held_[n.value]; }
  Batches total_held() const;
  // Batches each link carried in the last completed slot.
  const std::vector<Batches>& last_service() const { return served_; }

  Batches generated() const { return generated_; }
  Batches delivered() const { return delivered_; }
  Batches dropped() const { return dropped_; }

  const MetricsCollector& metrics() const { return metrics_; }
  MetricsReport report() const;

  // Per-event text lines (`t=<slot> <event> id=<batch> ...`), only when enabled.
  const std::vector<std::string>& event_log() const { return events_; }
  const std::vector<std::string>& actuation_log() const { return actuations_; }

  // Places a batch created at the current slot directly into n's queue,
  // subject to capacity. Counts as generated (and dropped when rejected).
  bool inject(NodeId n, NodeId destination);

 private:
  struct Held {
    std::uint64_t seq;
    Batch batch;
  };

  bool admit(NodeId n, const Batch& b, const char* event);
  void install(const RuleSet& rules);
  void serve_link(const Link& l, std::vector<std::pair<LinkId, Batch>>& moving);
  void log(std::string line);

  SimConfig config_;
  NextHopTable baseline_;
  TrafficSchedule schedule_;
  Controller controller_;

  Slot now_ = 0;
  std::uint64_t next_id_ = 0;
  std::uint64_t next_seq_ = 0;

  // queues_[n * N + c]: batches held at n for c, in arrival order.
  std::vector<std::deque<Held>> queues_;
  std::vector<Batches> held_;
  // Per link: the rule-bound class (if any) and the baseline-bound classes.
  std::vector<std::optional<NodeId>> rule_class_;
  std::vector<std::vector<NodeId>> baseline_classes_;
  std::vector<Batches> served_;

  Batches generated_ = 0;
  Batches delivered_ = 0;
  Batches dropped_ = 0;
  SlotSample current_;

  MetricsCollector metrics_;
  std::vector<std::string> events_;
  std::vector<std::string> actuations_;
};

// Runs `config.slots` steps from empty queues. Deterministic in the seed.
MetricsReport run(const SimConfig& config);

}  // namespace bpr
