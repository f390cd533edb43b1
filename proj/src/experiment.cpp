#include "bpr/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bpr {

using nlohmann::json;

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::G: return "G";
    case SweepParameter::v: return "v";
    case SweepParameter::T: return "T";
    case SweepParameter::alarm: return "alarm";
    case SweepParameter::mode: return "mode";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(std::string_view s) {
  if (s == "G") return SweepParameter::G;
  if (s == "v") return SweepParameter::v;
  if (s == "T") return SweepParameter::T;
  if (s == "alarm") return SweepParameter::alarm;
  if (s == "mode") return SweepParameter::mode;
  throw std::invalid_argument("unknown sweep parameter '" + std::string(s) + "'");
}

void ExperimentSpec::validate() const {
  if (seeds_per_point < 1) throw std::invalid_argument("seeds_per_point must be at least 1");
  if (modes.empty()) throw std::invalid_argument("experiment needs at least one mode");
  if (parameter != SweepParameter::mode && values.empty()) throw std::invalid_argument("experiment needs at least one sweep value");
  for (int T : periods)
    if (T < 1) throw std::invalid_argument("periods must be positive");
}

ExperimentSpec preset_fig3() {
  ExperimentSpec s;
  s.name = "fig3";
  s.base.T = 5;
  s.base.alarm = 100;  // 20% of the 500-batch buffer
  s.base.alarm_scope = AlarmScope::node;
  s.base.hop_filter = HopFilter::strict_decrease;
  s.base.forecast = ForecastProvider{ForecastKind::oracle, 0};
  s.parameter = SweepParameter::G;
  for (int g = 5; g <= 20; ++g) s.values.push_back(g);
  s.modes = {Mode::ospf_only, Mode::sbpr, Mode::fbpr};
  s.seeds_per_point = 50;
  s.output = "fig3.csv";
  return s;
}

ExperimentSpec preset_fig4() {
  ExperimentSpec s = preset_fig3();
  s.name = "fig4";
  s.base.G = 15;
  // Hop filtering is dropped for a like-for-like comparison with SBPR.
  s.base.hop_filter = HopFilter::off;
  s.base.loop_detection = true;
  s.parameter = SweepParameter::v;
  s.values = {0.1, 0.2, 0.3, 0.4, 0.5};
  s.periods = {5, 15};
  s.modes = {Mode::sbpr, Mode::fbpr};
  s.output = "fig4.csv";
  return s;
}

Topology topology_from_json(const json& doc, double batch_bytes, double slot_sec) {
  try {
    if (doc.contains("grid")) {
      const json& g = doc.at("grid");
      return build_grid(g.value("rows", 5), g.value("cols", 5), g.value("bandwidth_bytes_per_sec", 2e9), batch_bytes,
                        slot_sec);
    }
    const auto N = doc.at("node_count").get<std::size_t>();
    std::vector<Link> links;
    for (const json& l : doc.at("links"))
      links.push_back(Link{LinkId{links.size()}, NodeId{l.at("source").get<std::size_t>()},
                           NodeId{l.at("dest").get<std::size_t>()}, l.value("bandwidth", Batches{1})});
    std::vector<MultiLinkGroup> groups;
    if (doc.contains("multilinks")) {
      for (const json& g : doc.at("multilinks")) {
        MultiLinkGroup group;
        for (const json& id : g) group.members.push_back(LinkId{id.get<std::size_t>()});
        if (group.members.empty() || group.members.front().value >= links.size())
          throw std::invalid_argument("multi-link group references an unknown link");
        group.source = links[group.members.front().value].source;
        group.dest = links[group.members.front().value].dest;
        groups.push_back(std::move(group));
      }
    }
    PeeringPolicy policy;
    if (doc.contains("deny"))
      for (const json& p : doc.at("deny")) policy.deny(NodeId{p.at(0).get<std::size_t>()}, NodeId{p.at(1).get<std::size_t>()});
    return Topology(N, std::move(links), std::move(groups), std::move(policy));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("topology: ") + e.what());
  }
}

Topology build_topology(const ScenarioTemplate& t) { return topology_from_json(t.topology, t.batch_bytes, t.slot_sec); }

SimConfig make_sim_config(const ScenarioTemplate& base, Mode mode, std::uint64_t seed) {
  SimConfig c{build_topology(base)};
  c.controller.period = base.T;
  c.controller.mode = mode;
  c.controller.engine.alarm_level = base.alarm;
  c.controller.engine.alarm_scope = base.alarm_scope;
  c.controller.engine.hop_filter = mode == Mode::sbpr ? HopFilter::off : base.hop_filter;
  c.controller.engine.loop_detection = mode == Mode::sbpr || base.loop_detection;
  c.traffic = TrafficConfig{base.G, base.v, seed};
  c.forecast = base.forecast;
  if (base.acceptance != 1.0) c.acceptance = AcceptancePolicy::uniform(c.topology.node_count(), base.acceptance);
  c.slots = base.slots;
  c.warmup = base.warmup;
  c.slot_sec = base.slot_sec;
  c.batch_bytes = base.batch_bytes;
  c.capacity = base.capacity;
  return c;
}

namespace {

std::string effective_hop_filter(const ScenarioTemplate& base, Mode mode) {
  switch (mode) {
    case Mode::ospf_only: return "none";
    case Mode::sbpr: return "off";
    case Mode::fbpr: return std::string(to_string(base.hop_filter));
  }
  return "?";
}

struct Point {
  std::size_t value_index;
  ScenarioTemplate scenario;
  Mode mode;
};

std::vector<Point> expand(const ExperimentSpec& spec) {
  std::vector<Point> points;
  std::vector<int> periods = spec.periods.empty() ? std::vector<int>{spec.base.T} : spec.periods;
  if (spec.parameter == SweepParameter::mode) {
    for (int T : periods)
      for (Mode m : spec.modes) {
        ScenarioTemplate s = spec.base;
        s.T = T;
        points.push_back({0, s, m});
      }
    return points;
  }
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const double x = spec.values[i];
    for (int T : periods) {
      for (Mode m : spec.modes) {
        ScenarioTemplate s = spec.base;
        s.T = T;
        switch (spec.parameter) {
          case SweepParameter::G: s.G = x; break;
          case SweepParameter::v: s.v = x; break;
          case SweepParameter::T: s.T = static_cast<int>(x); break;
          case SweepParameter::alarm: s.alarm = static_cast<Batches>(x); break;
          case SweepParameter::mode: break;
        }
        points.push_back({i, s, m});
      }
    }
  }
  return points;
}

double mean_of(const std::vector<ResultRow>& rows, double ResultRow::*field) {
  double sum = 0;
  for (const ResultRow& r : rows) sum += r.*field;
  return sum / static_cast<double>(rows.size());
}

double stddev_of(const std::vector<ResultRow>& rows, double ResultRow::*field) {
  if (rows.size() < 2) return 0.0;
  const double m = mean_of(rows, field);
  double ss = 0;
  for (const ResultRow& r : rows) ss += (r.*field - m) * (r.*field - m);
  return std::sqrt(ss / static_cast<double>(rows.size() - 1));
}

ResultRow average(const std::vector<ResultRow>& raw) {
  ResultRow a = raw.front();
  a.seed = "mean";
  a.n_seeds = static_cast<int>(raw.size());
  a.avg_delivery_slots = mean_of(raw, &ResultRow::avg_delivery_slots);
  a.overflow_rate_bps = mean_of(raw, &ResultRow::overflow_rate_bps);
  a.throughput_Bps = mean_of(raw, &ResultRow::throughput_Bps);
  a.mean_total_queue = mean_of(raw, &ResultRow::mean_total_queue);
  a.mean_lyapunov = mean_of(raw, &ResultRow::mean_lyapunov);
  a.transit_fraction = mean_of(raw, &ResultRow::transit_fraction);
  a.stddev_latency = stddev_of(raw, &ResultRow::avg_delivery_slots);
  a.stddev_overflow = stddev_of(raw, &ResultRow::overflow_rate_bps);
  a.stddev_throughput = stddev_of(raw, &ResultRow::throughput_Bps);
  return a;
}

}  // namespace

std::uint64_t point_seed(const ExperimentSpec& spec, std::size_t value_index, int replicate) {
  return spec.base_seed + value_index * static_cast<std::uint64_t>(spec.seeds_per_point) + static_cast<std::uint64_t>(replicate);
}

ResultRow make_row(const std::string& experiment, const MetricsReport& report, const std::string& hop_filter) {
  ResultRow r;
  r.experiment = experiment;
  r.mode = report.config.mode;
  r.G = report.config.G;
  r.v = report.config.v;
  r.T = report.config.T;
  r.alarm = report.config.alarm;
  r.hop_filter = hop_filter;
  r.seed = std::to_string(report.config.seed);
  r.slots = report.slots;
  r.warmup = report.warmup;
  r.avg_delivery_slots = report.avg_delivery_slots;
  r.overflow_rate_bps = report.overflow_rate;
  r.throughput_Bps = report.throughput;
  r.mean_total_queue = report.mean_total_queue;
  r.mean_lyapunov = report.mean_lyapunov;
  r.transit_fraction = report.transit_fraction;
  return r;
}

ResultTable run_experiment(const ExperimentSpec& spec, unsigned parallel) {
  spec.validate();
  const std::vector<Point> points = expand(spec);
  const std::size_t seeds = static_cast<std::size_t>(spec.seeds_per_point);
  const std::size_t jobs = points.size() * seeds;

  // Fail fast on a bad template before spawning workers.
  make_sim_config(points.front().scenario, points.front().mode, 0).validate();

  std::vector<ResultRow> raw(jobs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const Point& p = points[j / seeds];
      const int replicate = static_cast<int>(j % seeds);
      try {
        MetricsReport report = run(make_sim_config(p.scenario, p.mode, point_seed(spec, p.value_index, replicate)));
        raw[j] = make_row(spec.name, report, effective_hop_filter(p.scenario, p.mode));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(jobs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ResultTable table;
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<ResultRow> group(raw.begin() + static_cast<std::ptrdiff_t>(p * seeds),
                                 raw.begin() + static_cast<std::ptrdiff_t>((p + 1) * seeds));
    table.rows.insert(table.rows.end(), group.begin(), group.end());
    table.rows.push_back(average(group));
  }
  return table;
}

std::vector<ResultRow> ResultTable::raw() const {
  std::vector<ResultRow> out;
  for (const ResultRow& r : rows)
    if (r.seed != "mean") out.push_back(r);
  return out;
}

std::vector<ResultRow> ResultTable::averaged() const {
  std::vector<ResultRow> out;
  for (const ResultRow& r : rows)
    if (r.seed == "mean") out.push_back(r);
  return out;
}

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

}  // namespace

std::string to_csv(const ResultTable& table) {
  std::ostringstream os;
  os << "# schema=" << kCsvSchema << '\n';
  os << "experiment,mode,G,v,T,alarm,hop_filter,seed,slots,warmup,avg_delivery_slots,overflow_rate_bps,"
        "throughput_Bps,mean_total_queue,mean_lyapunov,transit_fraction,n_seeds,stddev_latency,stddev_overflow,"
        "stddev_throughput\n";
  for (const ResultRow& r : table.rows) {
    os << r.experiment << ',' << r.mode << ',' << num(r.G) << ',' << num(r.v) << ',' << r.T << ',' << r.alarm << ','
       << r.hop_filter << ',' << r.seed << ',' << r.slots << ',' << r.warmup << ',' << num(r.avg_delivery_slots) << ','
       << num(r.overflow_rate_bps) << ',' << num(r.throughput_Bps) << ',' << num(r.mean_total_queue) << ','
       << num(r.mean_lyapunov) << ',' << num(r.transit_fraction) << ',' << r.n_seeds << ',' << opt(r.stddev_latency)
       << ',' << opt(r.stddev_overflow) << ',' << opt(r.stddev_throughput) << '\n';
  }
  return os.str();
}

json to_json(const ResultTable& table) {
  json rows = json::array();
  for (const ResultRow& r : table.rows) {
    json j = {{"experiment", r.experiment},
              {"mode", r.mode},
              {"G", r.G},
              {"v", r.v},
              {"T", r.T},
              {"alarm", r.alarm},
              {"hop_filter", r.hop_filter},
              {"seed", r.seed},
              {"slots", r.slots},
              {"warmup", r.warmup},
              {"avg_delivery_slots", r.avg_delivery_slots},
              {"overflow_rate_bps", r.overflow_rate_bps},
              {"throughput_Bps", r.throughput_Bps},
              {"mean_total_queue", r.mean_total_queue},
              {"mean_lyapunov", r.mean_lyapunov},
              {"transit_fraction", r.transit_fraction},
              {"n_seeds", r.n_seeds}};
    if (r.stddev_latency) j["stddev_latency"] = *r.stddev_latency;
    if (r.stddev_overflow) j["stddev_overflow"] = *r.stddev_overflow;
    if (r.stddev_throughput) j["stddev_throughput"] = *r.stddev_throughput;
    rows.push_back(std::move(j));
  }
  return json{{"schema", kCsvSchema}, {"rows", std::move(rows)}};
}

void write_table(const ResultTable& table, const std::string& path, const std::string& format) {
  std::string body;
  if (format == "csv") body = to_csv(table);
  else if (format == "json") body = to_json(table).dump(2) + "\n";
  else throw std::invalid_argument("unknown output format '" + format + "'");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << body;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

namespace {

template <typename T>
void read(const json& doc, const char* key, T& into) {
  if (!doc.contains(key)) return;
  try {
    into = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("key '") + key + "': " + e.what());
  }
}

std::string read_string(const json& doc, const char* key, std::string fallback) {
  read(doc, key, fallback);
  return fallback;
}

void read_scenario(const json& doc, ScenarioTemplate& t, Mode& mode, std::uint64_t& seed) {
  if (!doc.is_object()) throw std::invalid_argument("simulation config must be a JSON object");
  if (doc.contains("topology")) t.topology = doc.at("topology");
  read(doc, "batch_bytes", t.batch_bytes);
  read(doc, "slot_sec", t.slot_sec);
  read(doc, "capacity", t.capacity);
  read(doc, "slots", t.slots);
  if (doc.contains("warmup") && !doc.at("warmup").is_null()) {
    Slot w = 0;
    read(doc, "warmup", w);
    t.warmup = w;
  }
  if (doc.contains("controller")) {
    const json& c = doc.at("controller");
    read(c, "period", t.T);
    mode = parse_mode(read_string(c, "mode", std::string(to_string(mode))));
    if (c.contains("engine")) {
      const json& e = c.at("engine");
      read(e, "alarm_level", t.alarm);
      t.alarm_scope = parse_alarm_scope(read_string(e, "alarm_scope", std::string(to_string(t.alarm_scope))));
      t.hop_filter = parse_hop_filter(read_string(e, "hop_filter", std::string(to_string(t.hop_filter))));
      read(e, "loop_detection", t.loop_detection);
    }
  }
  if (doc.contains("traffic")) {
    const json& tr = doc.at("traffic");
    read(tr, "base_rate", t.G);
    read(tr, "heterogeneity", t.v);
    read(tr, "seed", seed);
  }
  if (doc.contains("forecast")) t.forecast = ForecastProvider::parse(read_string(doc, "forecast", "oracle"));
  read(doc, "acceptance", t.acceptance);
}

}  // namespace

SimDocument sim_from_json(const json& doc) {
  SimDocument d;
  read_scenario(doc, d.scenario, d.mode, d.seed);
  return d;
}

json sim_to_json(const ScenarioTemplate& t, Mode mode, std::uint64_t seed) {
  std::string forecast(t.forecast.name());
  if (t.forecast.kind == ForecastKind::moving_average) forecast += ":" + std::to_string(t.forecast.window);
  json doc = {{"topology", t.topology},
              {"controller",
               {{"period", t.T},
                {"mode", to_string(mode)},
                {"engine",
                 {{"alarm_level", t.alarm},
                  {"alarm_scope", to_string(t.alarm_scope)},
                  {"hop_filter", to_string(t.hop_filter)},
                  {"loop_detection", t.loop_detection}}}}},
              {"traffic", {{"base_rate", t.G}, {"heterogeneity", t.v}, {"seed", seed}}},
              {"forecast", forecast},
              {"acceptance", t.acceptance},
              {"slots", t.slots},
              {"slot_sec", t.slot_sec},
              {"batch_bytes", t.batch_bytes},
              {"capacity", t.capacity}};
  if (t.warmup) doc["warmup"] = *t.warmup;
  return doc;
}

ExperimentSpec experiment_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
  ExperimentSpec s;
  read(doc, "name", s.name);
  if (doc.contains("template")) {
    Mode unused = Mode::fbpr;
    read_scenario(doc.at("template"), s.base, unused, s.base_seed);
  }
  s.parameter = parse_sweep_parameter(read_string(doc, "parameter", "G"));
  read(doc, "values", s.values);
  if (doc.contains("modes")) {
    s.modes.clear();
    for (const json& m : doc.at("modes")) s.modes.push_back(parse_mode(m.get<std::string>()));
  }
  read(doc, "periods", s.periods);
  read(doc, "seeds_per_point", s.seeds_per_point);
  read(doc, "base_seed", s.base_seed);
  read(doc, "output", s.output);
  s.validate();
  return s;
}

json experiment_to_json(const ExperimentSpec& spec) {
  json modes = json::array();
  for (Mode m : spec.modes) modes.push_back(to_string(m));
  return json{{"name", spec.name},
              {"template", sim_to_json(spec.base, Mode::fbpr, spec.base_seed)},
              {"parameter", to_string(spec.parameter)},
              {"values", spec.values},
              {"modes", modes},
              {"periods", spec.periods},
              {"seeds_per_point", spec.seeds_per_point},
              {"base_seed", spec.base_seed},
              {"output", spec.output}};
}

}  // namespace bpr
