#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpr/simulator.hpp"

namespace bpr {

// Everything needed to instantiate a SimConfig except the mode and the
// per-run seed. `topology` is a config document, see topology_from_json.
struct ScenarioTemplate {
  nlohmann::json topology = {{"grid", {{"rows", 5}, {"cols", 5}, {"bandwidth_bytes_per_sec", 2e9}}}};

  double batch_bytes = 1e8;
  double slot_sec = 1.0;
  Batches capacity = 500;
  Slot slots = 600;
  std::optional<Slot> warmup;

  double G = 5;
  double v = 0;
  int T = 5;
  Batches alarm = 100;
  AlarmScope alarm_scope = AlarmScope::destination;
  HopFilter hop_filter = HopFilter::strict_decrease;  // FBPR only; SBPR always runs unfiltered
  bool loop_detection = false;                        // FBPR only; SBPR always filters loops
  ForecastProvider forecast;
  double acceptance = 1.0;  // uniform alpha
};

enum class SweepParameter { G, v, T, alarm, mode };

std::string_view to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(std::string_view s);

struct ExperimentSpec {
  std::string name = "custom";
  ScenarioTemplate base;
  SweepParameter parameter = SweepParameter::G;
  std::vector<double> values;        // ignored when sweeping mode
  std::vector<Mode> modes = {Mode::ospf_only, Mode::sbpr, Mode::fbpr};
  std::vector<int> periods;          // extra T axis; empty means {base.T}
  int seeds_per_point = 1;
  std::uint64_t base_seed = 1;
  std::string output;

  // Throws std::invalid_argument on an empty sweep or zero seeds.
  void validate() const;
};

ExperimentSpec preset_fig3();
ExperimentSpec preset_fig4();

// Effective engine/controller settings for one mode under a template.
SimConfig make_sim_config(const ScenarioTemplate& base, Mode mode, std::uint64_t seed);

// One CSV row. Seed-averaged rows carry seed "mean" plus spread columns.
struct ResultRow {
  std::string experiment;
  std::string mode;
  double G = 0;
  double v = 0;
  int T = 0;
  Batches alarm = 0;
  std::string hop_filter;
  std::string seed;
  Slot slots = 0;
  Slot warmup = 0;
  double avg_delivery_slots = 0;
  double overflow_rate_bps = 0;  // batches per second
  double throughput_Bps = 0;
  double mean_total_queue = 0;
  double mean_lyapunov = 0;
  double transit_fraction = 0;
  int n_seeds = 1;
  std::optional<double> stddev_latency;
  std::optional<double> stddev_overflow;
  std::optional<double> stddev_throughput;
};

struct ResultTable {
  std::vector<ResultRow> rows;

  std::vector<ResultRow> raw() const;
  std::vector<ResultRow> averaged() const;
};

// Seed for replicate s of sweep-value index i. Modes and periods of the same
// value share seeds, so they see identical traffic.
std::uint64_t point_seed(const ExperimentSpec& spec, std::size_t value_index, int replicate);

// Runs every (value, T, mode, seed) combination on up to `parallel` threads.
// Rows come out in sweep order regardless of completion order: for each point,
// its raw rows followed by its averaged row.
ResultTable run_experiment(const ExperimentSpec& spec, unsigned parallel = 1);

ResultRow make_row(const std::string& experiment, const MetricsReport& report, const std::string& hop_filter);

inline constexpr const char* kCsvSchema = "bpr-results/1";
std::string to_csv(const ResultTable& table);
nlohmann::json to_json(const ResultTable& table);

// Writes csv or json to `path`. Throws std::runtime_error naming the path on
// I/O failure.
void write_table(const ResultTable& table, const std::string& path, const std::string& format);

// Config documents.
//
// Topology: either {"grid": {"rows", "cols", "bandwidth_bytes_per_sec"}} or
// {"node_count": N, "links": [{"source", "dest", "bandwidth"}...],
//  "multilinks": [[link ids]...], "deny": [[source, dest]...]} with
// bandwidth in batches per slot. Grid bandwidth is converted with the
// template's batch_bytes and slot_sec.
//
// Simulation: {"topology", "controller": {"period", "mode", "engine":
// {"alarm_level", "alarm_scope", "hop_filter", "loop_detection"}},
// "traffic": {"base_rate", "heterogeneity", "seed"}, "forecast",
// "acceptance", "slots", "warmup", "slot_sec", "batch_bytes", "capacity"}.
// Every key is optional and defaults to the ScenarioTemplate defaults.
//
// Experiment: {"name", "template": <simulation>, "parameter", "values",
// "modes", "periods", "seeds_per_point", "base_seed", "output"}.
//
// Parsers throw std::invalid_argument naming the offending key.
Topology topology_from_json(const nlohmann::json& doc, double batch_bytes, double slot_sec);
Topology build_topology(const ScenarioTemplate& t);

struct SimDocument {
  ScenarioTemplate scenario;
  Mode mode = Mode::fbpr;
  std::uint64_t seed = 1;
};
SimDocument sim_from_json(const nlohmann::json& doc);
nlohmann::json sim_to_json(const ScenarioTemplate& t, Mode mode, std::uint64_t seed);

ExperimentSpec experiment_from_json(const nlohmann::json& doc);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

}  // namespace bpr
