#include "bpr/controller.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <stdexcept>

namespace bpr {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::ospf_only: return "ospf_only";
    case Mode::sbpr: return "sbpr";
    case Mode::fbpr: return "fbpr";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  if (s == "ospf_only") return Mode::ospf_only;
  if (s == "sbpr") return Mode::sbpr;
  if (s == "fbpr") return Mode::fbpr;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

AcceptancePolicy::AcceptancePolicy(std::vector<double> fractions) : alpha_(std::move(fractions)) {
  for (double a : alpha_)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("acceptance fraction outside [0, 1]");
}

RuleSet AcceptancePolicy::apply(const RuleSet& proposed) const {
  std::map<std::size_t, std::vector<PriorityRule>> by_node;
  for (const PriorityRule& r : proposed.rules) by_node[r.from.value].push_back(r);

  RuleSet out{proposed.time, {}};
  for (auto& [node, rules] : by_node) {
    const double alpha = alpha_.at(node);
    // The epsilon keeps e.g. 0.3 * 10 from rounding up to 4.
    const auto keep = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(rules.size()) - 1e-9));
    std::stable_sort(rules.begin(), rules.end(), [](const PriorityRule& a, const PriorityRule& b) {
      return a.differential != b.differential ? a.differential > b.differential : a.via < b.via;
    });
    out.rules.insert(out.rules.end(), rules.begin(), rules.begin() + static_cast<std::ptrdiff_t>(std::min(keep, rules.size())));
  }
  std::sort(out.rules.begin(), out.rules.end(), [](const PriorityRule& a, const PriorityRule& b) { return a.via < b.via; });
  return out;
}

std::string_view ForecastProvider::name() const {
  switch (kind) {
    case ForecastKind::oracle: return "oracle";
    case ForecastKind::zero: return "zero";
    case ForecastKind::moving_average: return "moving_average";
  }
  return "?";
}

ForecastProvider ForecastProvider::parse(std::string_view s) {
  if (s == "oracle") return {ForecastKind::oracle, 0};
  if (s == "zero") return {ForecastKind::zero, 0};
  constexpr std::string_view prefix = "moving_average:";
  if (s.starts_with(prefix)) {
    int w = 0;
    auto rest = s.substr(prefix.size());
    auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), w);
    if (ec == std::errc{} && p == rest.data() + rest.size() && w > 0) return {ForecastKind::moving_average, w};
  }
  throw std::invalid_argument("unknown forecast provider '" + std::string(s) + "'");
}

Forecast oracle_forecast(const TrafficSchedule& schedule, Slot t, int horizon) {
  if (horizon < 1) throw std::invalid_argument("forecast horizon must be positive");
  if (t < 0 || t + horizon > schedule.length())
    throw std::out_of_range("forecast window [" + std::to_string(t) + ", " + std::to_string(t + horizon) +
                            ") exceeds the traffic schedule of " + std::to_string(schedule.length()) + " slots");
  const std::size_t N = schedule.node_count();
  Forecast f{horizon, QueueMatrix(N)};
  for (Slot s = t; s < t + horizon; ++s)
    for (std::size_t n = 0; n < N; ++n)
      for (NodeId c : schedule.batches(s, NodeId{n})) ++f.generated.at(NodeId{n}, c);
  return f;
}

Forecast moving_average_forecast(const TrafficSchedule& schedule, Slot t, int horizon, int window) {
  if (horizon < 1 || window < 1) throw std::invalid_argument("forecast horizon and window must be positive");
  const std::size_t N = schedule.node_count();
  Forecast f{horizon, QueueMatrix(N)};
  const Slot begin = std::max<Slot>(0, t - window);
  if (begin == t) return f;

  QueueMatrix counts(N);
  for (Slot s = begin; s < t; ++s)
    for (std::size_t n = 0; n < N; ++n)
      for (NodeId c : schedule.batches(s, NodeId{n})) ++counts.at(NodeId{n}, c);
  const double scale = static_cast<double>(horizon) / static_cast<double>(t - begin);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < N; ++c)
      f.generated.at(NodeId{n}, NodeId{c}) = std::llround(static_cast<double>(counts.at(NodeId{n}, NodeId{c})) * scale);
  return f;
}

Forecast make_forecast(const ForecastProvider& provider, const TrafficSchedule& schedule, Slot t, int horizon) {
  switch (provider.kind) {
    case ForecastKind::oracle: return oracle_forecast(schedule, t, horizon);
    case ForecastKind::zero: return Forecast::zero(schedule.node_count(), horizon);
    case ForecastKind::moving_average: return moving_average_forecast(schedule, t, horizon, provider.window);
  }
  throw std::logic_error("unhandled forecast kind");
}

Controller::Controller(const Topology& topology, const NextHopTable& baseline, ControllerConfig config,
                       AcceptancePolicy acceptance, ForecastProvider provider)
    : topology_(topology),
      baseline_(baseline),
      config_(config),
      acceptance_(std::move(acceptance)),
      provider_(provider) {
  if (config_.period < 1) throw std::invalid_argument("controller period must be at least one slot");
  if (config_.engine.alarm_level < 0) throw std::invalid_argument("alarm level must be non-negative");
  if (acceptance_.node_count() != topology_.node_count())
    throw std::invalid_argument("acceptance policy does not cover every node");
}

RuleSet Controller::actuate(const NetworkSnapshot& snapshot, Slot t, const TrafficSchedule& schedule) {
  if (t % config_.period != 0)
    throw std::logic_error("actuation at slot " + std::to_string(t) + " is off the period-" +
                           std::to_string(config_.period) + " boundary");

  switch (config_.mode) {
    case Mode::ospf_only:
      forecast_ = Forecast::zero(topology_.node_count(), config_.period);
      proposed_ = RuleSet{t, {}};
      break;
    case Mode::sbpr:
      forecast_ = Forecast::zero(topology_.node_count(), config_.period);
      proposed_ = sbpr_rules(snapshot, topology_, baseline_, config_.engine);
      break;
    case Mode::fbpr:
      forecast_ = make_forecast(provider_, schedule, t, config_.period);
      proposed_ = fbpr_rules(snapshot, forecast_, topology_, baseline_, config_.engine, config_.period);
      break;
  }
  proposed_.time = t;
  active_ = acceptance_.apply(proposed_);
  return active_;
}

std::string Controller::log_line() const {
  return "t=" + std::to_string(proposed_.time) + " mode=" + std::string(to_string(config_.mode)) +
         " proposed=" + std::to_string(proposed_.rules.size()) + " installed=" + std::to_string(active_.rules.size());
}

}  // namespace bpr
