#include "bpr/simulator.hpp"

#include <stdexcept>

namespace bpr {

void SimConfig::validate() const {
  if (slots < 1) throw std::invalid_argument("slots must be positive");
  const Slot w = effective_warmup();
  if (w < 0 || w >= slots) throw std::invalid_argument("warmup must satisfy 0 <= warmup < slots");
  if (!(slot_sec > 0)) throw std::invalid_argument("slot_sec must be positive");
  if (!(batch_bytes > 0)) throw std::invalid_argument("batch_bytes must be positive");
  if (capacity < 1) throw std::invalid_argument("capacity must be at least one batch");
  if (controller.period < 1) throw std::invalid_argument("period must be at least one slot");
  if (controller.engine.alarm_level < 0) throw std::invalid_argument("alarm level must be non-negative");
  if (!(traffic.base_rate >= 0)) throw std::invalid_argument("base rate G must be non-negative");
  if (!(traffic.heterogeneity >= 0 && traffic.heterogeneity <= 1))
    throw std::invalid_argument("heterogeneity v must lie in [0, 1]");
  if (forecast.kind == ForecastKind::moving_average && forecast.window < 1)
    throw std::invalid_argument("moving-average forecast needs a positive window");
  if (acceptance && acceptance->node_count() != topology.node_count())
    throw std::invalid_argument("acceptance policy does not cover every node");
  if (!topology.connected()) throw std::invalid_argument("topology is not strongly connected");
}

Simulation::Simulation(SimConfig config)
    : config_((config.validate(), std::move(config))),
      baseline_(compute_next_hops(config_.topology)),
      schedule_(config_.topology.node_count(), config_.traffic, config_.slots + config_.controller.period),
      controller_(config_.topology, baseline_, config_.controller,
                  config_.acceptance.value_or(AcceptancePolicy::full(config_.topology.node_count())), config_.forecast),
      queues_(config_.topology.node_count() * config_.topology.node_count()),
      held_(config_.topology.node_count(), 0),
      rule_class_(config_.topology.links().size()),
      baseline_classes_(config_.topology.links().size()),
      served_(config_.topology.links().size(), 0) {
  install(RuleSet{});
  current_.t = 0;
}

void Simulation::log(std::string line) {
  if (config_.event_log) events_.push_back(std::move(line));
}

bool Simulation::admit(NodeId n, const Batch& b, const char* event) {
  const std::size_t N = config_.topology.node_count();
  if (held_[n.value] >= config_.capacity) {
    ++dropped_;
    ++current_.dropped;
    if (config_.event_log)
      log("t=" + std::to_string(now_) + " drop id=" + std::to_string(b.id) + " at=" + std::to_string(n.value) + " cause=" + event);
    return false;
  }
  queues_[n.value * N + b.destination.value].push_back(Held{next_seq_++, b});
  ++held_[n.value];
  if (config_.event_log)
    log("t=" + std::to_string(now_) + " " + event + " id=" + std::to_string(b.id) + " at=" + std::to_string(n.value) +
        " dest=" + std::to_string(b.destination.value));
  return true;
}

bool Simulation::inject(NodeId n, NodeId destination) {
  if (n == destination) throw std::invalid_argument("batch origin equals its destination");
  Batch b{next_id_++, n, destination, now_, 0};
  ++generated_;
  ++current_.generated;
  return admit(n, b, "gen");
}

void Simulation::install(const RuleSet& rules) {
  const Topology& topo = config_.topology;
  const std::size_t N = topo.node_count();
  std::fill(rule_class_.begin(), rule_class_.end(), std::nullopt);
  for (auto& v : baseline_classes_) v.clear();

  std::vector<char> ruled(N * N, 0);
  for (const PriorityRule& r : rules.rules) {
    rule_class_[r.via.value] = r.to;
    ruled[r.from.value * N + r.to.value] = 1;
  }
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < N; ++c)
      if (n != c && !ruled[n * N + c]) baseline_classes_[baseline_.route_of(NodeId{n}, NodeId{c}).value].push_back(NodeId{c});
}

void Simulation::serve_link(const Link& l, std::vector<std::pair<LinkId, Batch>>& moving) {
  const std::size_t N = config_.topology.node_count();
  const std::size_t base = l.source.value * N;
  Batches budget = l.bandwidth;

  if (const auto& c = rule_class_[l.id.value]) {
    auto& q = queues_[base + c->value];
    while (budget > 0 && !q.empty()) {
      moving.emplace_back(l.id, q.back().batch);
      q.pop_back();
      --budget;
    }
  }

  const auto& classes = baseline_classes_[l.id.value];
  while (budget > 0) {
    std::deque<Held>* oldest = nullptr;
    for (NodeId c : classes) {
      auto& q = queues_[base + c.value];
      if (!q.empty() && (oldest == nullptr || q.front().seq < oldest->front().seq)) oldest = &q;
    }
    if (oldest == nullptr) break;
    moving.emplace_back(l.id, oldest->front().batch);
    oldest->pop_front();
    --budget;
  }

  const Batches used = l.bandwidth - budget;
  held_[l.source.value] -= used;
  served_[l.id.value] = used;
}

void Simulation::step() {
  if (finished()) throw std::logic_error("simulation already ran its configured slots");
  const Topology& topo = config_.topology;
  const std::size_t N = topo.node_count();

  // 1. Actuation.
  if (now_ % config_.controller.period == 0) {
    NetworkSnapshot snap = snapshot();
    const RuleSet& active = controller_.actuate(snap, now_, schedule_);
    install(active);
    actuations_.push_back(controller_.log_line());
    if (!active.rules.empty()) {
      std::size_t ok = 0;
      auto checks = check_transit_assumption(snap, controller_.last_forecast(), topo, active);
      for (const TransitCheck& c : checks) ok += c.holds;
      metrics_.record_transit(now_, checks.size(), ok);
    }
  }

  // 2. Generation.
  for (std::size_t n = 0; n < N; ++n)
    for (NodeId c : schedule_.batches(now_, NodeId{n})) inject(NodeId{n}, c);

  // 3. Service.
  std::vector<std::pair<LinkId, Batch>> moving;
  for (const Link& l : topo.links()) serve_link(l, moving);

  // 4. Arrivals.
  for (auto& [id, b] : moving) {
    const Link& l = topo.link(id);
    ++b.hops;
    if (l.dest == b.destination) {
      const Slot latency = now_ + 1 - b.created_at;
      ++delivered_;
      ++current_.delivered;
      current_.latency_sum += latency;
      metrics_.record_path(b.hops, b.hops - topo.hop_distance(b.origin, b.destination));
      if (config_.event_log)
        log("t=" + std::to_string(now_) + " deliver id=" + std::to_string(b.id) + " at=" + std::to_string(l.dest.value) +
            " latency=" + std::to_string(latency));
    } else {
      admit(l.dest, b, "forward");
    }
  }

  // 5. Sampling.
  for (std::size_t n = 0; n < N; ++n) {
    current_.total_queued += held_[n];
    for (std::size_t c = 0; c < N; ++c) {
      const auto u = static_cast<Batches>(queues_[n * N + c].size());
      current_.lyapunov += u * u;
    }
  }
  metrics_.record_slot(current_);
  ++now_;
  current_ = SlotSample{};
  current_.t = now_;
}

void Simulation::run_to_end() {
  while (!finished()) step();
}

NetworkSnapshot Simulation::snapshot() const {
  const std::size_t N = config_.topology.node_count();
  NetworkSnapshot s{now_, QueueMatrix(N)};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < N; ++c) s.queues.at(NodeId{n}, NodeId{c}) = static_cast<Batches>(queues_[n * N + c].size());
  return s;
}

Batches Simulation::total_held() const {
  Batches sum = 0;
  for (Batches h : held_) sum += h;
  return sum;
}

MetricsReport Simulation::report() const {
  MetricsReport r = aggregate(metrics_, config_.effective_warmup(), config_.slot_sec, config_.batch_bytes);
  const auto& c = config_.controller;
  r.config = ConfigEcho{std::string(to_string(c.mode)),
                        config_.traffic.base_rate,
                        config_.traffic.heterogeneity,
                        c.period,
                        c.engine.alarm_level,
                        std::string(to_string(c.engine.hop_filter)),
                        std::string(config_.forecast.name()),
                        config_.traffic.seed};
  return r;
}

MetricsReport run(const SimConfig& config) {
  Simulation sim(config);
  sim.run_to_end();
  return sim.report();
}

}  // namespace bpr
