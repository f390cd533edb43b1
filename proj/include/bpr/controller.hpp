#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bpr/engine.hpp"
#include "bpr/traffic.hpp"

namespace bpr {

enum class Mode { ospf_only, sbpr, fbpr };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

struct ControllerConfig {
  int period = 5;  // T, slots between snapshots
  EngineConfig engine;
  Mode mode = Mode::fbpr;
};

// Fraction of proposed rules each node installs; 1 accepts in full.
class AcceptancePolicy {
 public:
  static AcceptancePolicy full(std::size_t node_count) { return AcceptancePolicy(std::vector<double>(node_count, 1.0)); }
  static AcceptancePolicy uniform(std::size_t node_count, double alpha) {
    return AcceptancePolicy(std::vector<double>(node_count, alpha));
  }

  // Throws std::invalid_argument if any fraction lies outside [0, 1].
  explicit AcceptancePolicy(std::vector<double> fractions);

  std::size_t node_count() const { return alpha_.size(); }
  double fraction(NodeId n) const { return alpha_.at(n.value); }

  // Keeps, per node, the ceil(alpha * k) highest-differential rules (ties by
  // link id). Output is ordered by link id.
  RuleSet apply(const RuleSet& proposed) const;

 private:
  std::vector<double> alpha_;
};

enum class ForecastKind { oracle, zero, moving_average };

struct ForecastProvider {
  ForecastKind kind = ForecastKind::oracle;
  int window = 0;  // moving_average only, in slots

  std::string_view name() const;
  static ForecastProvider parse(std::string_view s);  // "oracle", "zero", "moving_average:<w>"
};

// Exact count of batches the schedule creates at n for c in [t, t + horizon).
// Throws std::out_of_range if the schedule ends before t + horizon.
Forecast oracle_forecast(const TrafficSchedule& schedule, Slot t, int horizon);

// Scales the per-slot average over the last `window` slots (clipped at slot 0)
// to the horizon, rounded to whole batches.
Forecast moving_average_forecast(const TrafficSchedule& schedule, Slot t, int horizon, int window);

Forecast make_forecast(const ForecastProvider& provider, const TrafficSchedule& schedule, Slot t, int horizon);

// The central control plane. Each actuation takes the snapshot, builds a
// forecast, runs the engine for the configured mode and filters the proposal
// through the nodes' acceptance policy. Installed rules replace the previous
// set wholesale.
class Controller {
 public:
  Controller(const Topology& topology, const NextHopTable& baseline, ControllerConfig config,
             AcceptancePolicy acceptance, ForecastProvider provider);

  const ControllerConfig& config() const { return config_; }
  const ForecastProvider& provider() const { return provider_; }

  // Throws std::logic_error unless t is a multiple of the period.
  RuleSet actuate(const NetworkSnapshot& snapshot, Slot t, const TrafficSchedule& schedule);

  const RuleSet& active() const { return active_; }
  const RuleSet& last_proposed() const { return proposed_; }
  const Forecast& last_forecast() const { return forecast_; }

  // `t=<slot> mode=<m> proposed=<k> installed=<k'>` for the last actuation.
  std::string log_line() const;

 private:
  const Topology& topology_;
  const NextHopTable& baseline_;
  ControllerConfig config_;
  AcceptancePolicy acceptance_;
  ForecastProvider provider_;
  RuleSet proposed_;
  RuleSet active_;
  Forecast forecast_;
};

}  // namespace bpr
