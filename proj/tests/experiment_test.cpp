#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bpr/experiment.hpp"

using namespace bpr;
using nlohmann::json;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.name = "small";
  s.base.slots = 120;
  s.base.alarm_scope = AlarmScope::node;
  s.parameter = SweepParameter::G;
  s.values = {12};
  s.modes = {Mode::fbpr};
  s.seeds_per_point = 3;
  s.base_seed = 40;
  return s;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("presets") {
  ExperimentSpec f3 = preset_fig3();
  CHECK(f3.parameter == SweepParameter::G);
  CHECK(std::find(f3.values.begin(), f3.values.end(), 5.0) != f3.values.end());
  CHECK(std::find(f3.values.begin(), f3.values.end(), 20.0) != f3.values.end());
  CHECK(f3.base.alarm == 100);
  CHECK(f3.base.T == 5);
  CHECK(f3.base.v == 0);
  CHECK(f3.modes.size() == 3);
  CHECK(f3.seeds_per_point == 50);
  CHECK(f3.base.forecast.kind == ForecastKind::oracle);
  Topology g = build_topology(f3.base);
  CHECK(g.node_count() == 25);
  CHECK(g.links()[0].bandwidth == 20);

  ExperimentSpec f4 = preset_fig4();
  CHECK(f4.base.hop_filter == HopFilter::off);
  CHECK(f4.base.loop_detection);
  CHECK(f4.periods == std::vector<int>{5, 15});
  CHECK(f4.seeds_per_point == 50);
  CHECK(f4.values == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
  CHECK(f4.modes == std::vector<Mode>{Mode::sbpr, Mode::fbpr});
}

TEST_CASE("mode-specific engine settings") {
  ScenarioTemplate t;
  t.hop_filter = HopFilter::strict_decrease;
  SimConfig s = make_sim_config(t, Mode::sbpr, 3);
  CHECK(s.controller.engine.hop_filter == HopFilter::off);
  CHECK(s.controller.engine.loop_detection);
  SimConfig f = make_sim_config(t, Mode::fbpr, 3);
  CHECK(f.controller.engine.hop_filter == HopFilter::strict_decrease);
  CHECK_FALSE(f.controller.engine.loop_detection);
  CHECK(f.traffic.seed == 3);
  CHECK_FALSE(f.acceptance.has_value());
  t.acceptance = 0.5;
  CHECK(make_sim_config(t, Mode::fbpr, 3).acceptance->fraction(NodeId{7}) == 0.5);
}

TEST_CASE("experiment validation and seed derivation") {
  ExperimentSpec s = small_spec();
  s.seeds_per_point = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = small_spec();
  s.values.clear();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = small_spec();
  s.modes.clear();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = small_spec();
  s.values = {1, 2, 3};
  CHECK(point_seed(s, 0, 0) == 40);
  CHECK(point_seed(s, 0, 2) == 42);
  CHECK(point_seed(s, 2, 1) == 40 + 2 * 3 + 1);
}

TEST_CASE("one value, one mode, three seeds") {
  ExperimentSpec s = small_spec();
  ResultTable t = run_experiment(s);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.raw().size() == 3);
  REQUIRE(t.averaged().size() == 1);
  const ResultRow mean = t.averaged()[0];
  CHECK(mean.seed == "mean");
  CHECK(mean.n_seeds == 3);

  double lat = 0, ovf = 0, thr = 0;
  for (const ResultRow& r : t.raw()) {
    lat += r.avg_delivery_slots;
    ovf += r.overflow_rate_bps;
    thr += r.throughput_Bps;
    CHECK(r.n_seeds == 1);
    CHECK_FALSE(r.stddev_latency.has_value());
  }
  CHECK(mean.avg_delivery_slots == doctest::Approx(lat / 3));
  CHECK(mean.overflow_rate_bps == doctest::Approx(ovf / 3));
  CHECK(mean.throughput_Bps == doctest::Approx(thr / 3));

  double ss = 0;
  for (const ResultRow& r : t.raw()) ss += std::pow(r.avg_delivery_slots - lat / 3, 2);
  REQUIRE(mean.stddev_latency.has_value());
  CHECK(*mean.stddev_latency == doctest::Approx(std::sqrt(ss / 2)));

  // Each raw row is exactly the run it names.
  ScenarioTemplate point = s.base;
  point.G = 12;
  MetricsReport direct = run(make_sim_config(point, Mode::fbpr, 41));
  CHECK(t.raw()[1].seed == "41");
  CHECK(t.raw()[1].avg_delivery_slots == direct.avg_delivery_slots);
}

TEST_CASE("reruns and parallel runs give identical bytes") {
  ExperimentSpec s = small_spec();
  s.values = {8, 16};
  s.modes = {Mode::ospf_only, Mode::sbpr, Mode::fbpr};
  s.seeds_per_point = 2;
  const std::string a = to_csv(run_experiment(s, 1));
  CHECK(a == to_csv(run_experiment(s, 1)));
  CHECK(a == to_csv(run_experiment(s, 3)));
  CHECK(to_json(run_experiment(s, 1)) == to_json(run_experiment(s, 2)));
}

TEST_CASE("csv layout") {
  ExperimentSpec s = small_spec();
  s.periods = {5, 10};
  s.modes = {Mode::ospf_only, Mode::fbpr};
  s.seeds_per_point = 2;
  const std::string csv = to_csv(run_experiment(s));
  CHECK(csv.rfind("# schema=bpr-results/1\n", 0) == 0);
  auto rows = parse_csv(csv);
  REQUIRE(rows.size() == 1 + 2 * 2 * 3);
  const std::vector<std::string> header = {"experiment", "mode", "G", "v", "T", "alarm", "hop_filter", "seed",
                                           "slots", "warmup", "avg_delivery_slots", "overflow_rate_bps",
                                           "throughput_Bps", "mean_total_queue", "mean_lyapunov", "transit_fraction",
                                           "n_seeds", "stddev_latency", "stddev_overflow", "stddev_throughput"};
  CHECK(rows[0] == header);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CAPTURE(i);
    REQUIRE(rows[i].size() == header.size());
    CHECK(rows[i][0] == "small");
    CHECK((rows[i][4] == "5" || rows[i][4] == "10"));
    if (rows[i][7] == "mean") CHECK_FALSE(rows[i][17].empty());
    else CHECK(rows[i][17].empty());
  }
  CHECK(rows[1][1] == "ospf_only");
  CHECK(rows[1][6] == "none");
  CHECK(rows[4][1] == "fbpr");
  CHECK(rows[4][6] == "strict_decrease");
}

TEST_CASE("write_table reports the path on failure") {
  ResultTable t = run_experiment(small_spec());
  const std::string bad = "/nonexistent-dir/out.csv";
  try {
    write_table(t, bad, "csv");
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(bad) != std::string::npos);
  }
  CHECK_THROWS_AS(write_table(t, "x.csv", "xml"), std::invalid_argument);

  const auto path = std::filesystem::temp_directory_path() / "bpr_experiment_test.csv";
  write_table(t, path.string(), "csv");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == to_csv(t));
  std::filesystem::remove(path);
}

TEST_CASE("simulation config documents") {
  json doc = json::parse(R"({
    "controller": {"period": 15, "mode": "sbpr",
                   "engine": {"alarm_level": 50, "alarm_scope": "node", "hop_filter": "non_increase"}},
    "traffic": {"base_rate": 7.5, "heterogeneity": 0.25, "seed": 99},
    "forecast": "moving_average:10",
    "acceptance": 0.75,
    "slots": 300, "warmup": 20, "capacity": 400
  })");
  SimDocument d = sim_from_json(doc);
  CHECK(d.mode == Mode::sbpr);
  CHECK(d.seed == 99);
  CHECK(d.scenario.T == 15);
  CHECK(d.scenario.alarm == 50);
  CHECK(d.scenario.alarm_scope == AlarmScope::node);
  CHECK(d.scenario.hop_filter == HopFilter::non_increase);
  CHECK(d.scenario.G == 7.5);
  CHECK(d.scenario.v == 0.25);
  CHECK(d.scenario.forecast.window == 10);
  CHECK(d.scenario.acceptance == 0.75);
  CHECK(d.scenario.slots == 300);
  CHECK(d.scenario.warmup == 20);
  CHECK(d.scenario.capacity == 400);

  // Round trip.
  SimDocument back = sim_from_json(sim_to_json(d.scenario, d.mode, d.seed));
  CHECK(sim_to_json(back.scenario, back.mode, back.seed) == sim_to_json(d.scenario, d.mode, d.seed));

  CHECK(sim_from_json(json::object()).scenario.slots == 600);
  CHECK_THROWS_AS(sim_from_json(json::parse(R"({"slots": "many"})")), std::invalid_argument);
  CHECK_THROWS_AS(sim_from_json(json::parse(R"({"controller": {"mode": "magic"}})")), std::invalid_argument);
  CHECK_THROWS_AS(sim_from_json(json::array()), std::invalid_argument);
}

TEST_CASE("custom topology with multi-links and peering denial") {
  json topo = json::parse(R"({
    "node_count": 3,
    "links": [{"source": 0, "dest": 1, "bandwidth": 2}, {"source": 0, "dest": 1, "bandwidth": 1},
              {"source": 1, "dest": 0}, {"source": 1, "dest": 2, "bandwidth": 3}, {"source": 2, "dest": 1}],
    "multilinks": [[0, 1]],
    "deny": [[1, 2]]
  })");
  Topology t = topology_from_json(topo, 1e8, 1);
  CHECK(t.node_count() == 3);
  CHECK(t.links().size() == 5);
  CHECK(t.link(LinkId{2}).bandwidth == 1);
  REQUIRE(t.multilinks().size() == 1);
  CHECK(t.multilinks()[0].members.size() == 2);
  CHECK_FALSE(t.policy().allowed(NodeId{1}, NodeId{2}));

  ScenarioTemplate base;
  base.topology = topo;
  base.G = 1;
  base.slots = 50;
  base.alarm = 0;
  CHECK_NOTHROW(run(make_sim_config(base, Mode::fbpr, 1)));

  CHECK_THROWS_AS(topology_from_json(json::parse(R"({"node_count": 2})"), 1e8, 1), std::invalid_argument);
  CHECK_THROWS_AS(topology_from_json(json::parse(R"({"node_count": 2, "links": [{"source": 0, "dest": 0}]})"), 1e8, 1),
                  std::invalid_argument);
  ScenarioTemplate split;
  split.topology = json::parse(R"({"node_count": 3, "links": [{"source": 0, "dest": 1}, {"source": 1, "dest": 0}]})");
  CHECK_THROWS_AS(make_sim_config(split, Mode::fbpr, 1).validate(), std::invalid_argument);
}

TEST_CASE("experiment documents") {
  json doc = json::parse(R"({
    "name": "v-sweep",
    "template": {"traffic": {"base_rate": 12}, "controller": {"period": 5}},
    "parameter": "v", "values": [0.1, 0.3], "modes": ["sbpr", "fbpr"], "periods": [5, 15],
    "seeds_per_point": 4, "base_seed": 7, "output": "v.csv"
  })");
  ExperimentSpec s = experiment_from_json(doc);
  CHECK(s.name == "v-sweep");
  CHECK(s.parameter == SweepParameter::v);
  CHECK(s.base.G == 12);
  CHECK(s.periods == std::vector<int>{5, 15});
  CHECK(s.seeds_per_point == 4);
  CHECK(s.base_seed == 7);
  ExperimentSpec again = experiment_from_json(experiment_to_json(s));
  CHECK(experiment_to_json(again) == experiment_to_json(s));
  CHECK_THROWS_AS(experiment_from_json(json::parse(R"({"parameter": "colour", "values": [1]})")), std::invalid_argument);
  CHECK_THROWS_AS(experiment_from_json(json::parse(R"({"values": []})")), std::invalid_argument);
  for (SweepParameter p : {SweepParameter::G, SweepParameter::v, SweepParameter::T, SweepParameter::alarm, SweepParameter::mode})
    CHECK(parse_sweep_parameter(to_string(p)) == p);
}

TEST_CASE("sweeping T, alarm and mode") {
  ExperimentSpec s = small_spec();
  s.seeds_per_point = 1;
  s.parameter = SweepParameter::T;
  s.values = {3, 6};
  auto rows = run_experiment(s).averaged();
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].T == 3);
  CHECK(rows[1].T == 6);

  s.parameter = SweepParameter::alarm;
  s.values = {0, 1000000};
  rows = run_experiment(s).averaged();
  CHECK(rows[0].alarm == 0);
  CHECK(rows[1].alarm == 1000000);

  s.parameter = SweepParameter::mode;
  s.values.clear();
  s.modes = {Mode::ospf_only, Mode::fbpr};
  rows = run_experiment(s).averaged();
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mode == "ospf_only");
  CHECK(rows[1].mode == "fbpr");
}

TEST_CASE("averaged csv carries what a plotter groups on") {
  // fig3 groups by mode over G, fig4 by (mode, T) over v; each panel plots
  // latency, overflow and throughput with their stddev columns.
  auto groups = [](ExperimentSpec s, std::size_t x_column) {
    s.seeds_per_point = 2;
    s.base.slots = 60;
    s.values.resize(2);
    auto rows = parse_csv(to_csv(run_experiment(s, 2)));
    std::map<std::string, std::set<std::string>> lines;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i][7] != "mean") continue;
      for (std::size_t y : {10u, 11u, 12u, 17u, 18u, 19u}) CHECK_FALSE(rows[i][y].empty());
      lines[rows[i][1] + "/T=" + rows[i][4]].insert(rows[i][x_column]);
    }
    for (auto& [key, xs] : lines) CHECK(xs.size() == 2);
    return lines.size();
  };
  CHECK(groups(preset_fig3(), 2) == 3);
  CHECK(groups(preset_fig4(), 3) == 4);
}
