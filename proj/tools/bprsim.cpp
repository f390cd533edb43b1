// bprsim: single runs, preset sweeps and config linting for the backpressure
// rule simulator.

#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpr/experiment.hpp"

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config '" + path + "': " + e.what());
  }
}

void emit(const std::string& body, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << body;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
  f << body;
  if (!f) throw std::runtime_error("failed writing '" + out + "'");
}

json report_json(const bpr::MetricsReport& r, const bpr::Simulation& sim) {
  json series = json::array();
  for (const bpr::SlotSample& s : r.series)
    series.push_back({{"t", s.t},
                      {"generated", s.generated},
                      {"dropped", s.dropped},
                      {"delivered", s.delivered},
                      {"total_queued", s.total_queued},
                      {"lyapunov", s.lyapunov}});
  return json{{"config", {{"mode", r.config.mode},
                          {"G", r.config.G},
                          {"v", r.config.v},
                          {"T", r.config.T},
                          {"alarm", r.config.alarm},
                          {"hop_filter", r.config.hop_filter},
                          {"forecast", r.config.forecast},
                          {"seed", r.config.seed}}},
              {"slots", r.slots},
              {"warmup", r.warmup},
              {"avg_delivery_slots", r.avg_delivery_slots},
              {"overflow_rate_bps", r.overflow_rate},
              {"overflow_byte_rate", r.overflow_byte_rate},
              {"throughput_Bps", r.throughput},
              {"generation_Bps", r.generation_rate},
              {"mean_total_queue", r.mean_total_queue},
              {"mean_lyapunov", r.mean_lyapunov},
              {"transit_fraction", r.transit_fraction},
              {"generated", r.generated},
              {"delivered", r.delivered},
              {"dropped", r.dropped},
              {"in_flight", r.in_flight},
              {"max_hops", r.max_hops},
              {"actuations", sim.actuation_log()},
              {"series", std::move(series)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slotted-time backbone simulator with backpressure-derived priority flow rules"};
  app.require_subcommand(1);

  std::string config_path, out, format = "csv", preset, actuation_log;
  std::optional<std::uint64_t> seed;
  std::optional<long long> slots;
  std::optional<int> seeds_per_point;
  unsigned parallel = std::max(1u, std::thread::hardware_concurrency());

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Seed (run) or base seed (sweep)");
    sub->add_option("--out", out, "Output path, stdout when omitted");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--slots", slots, "Override run length in slots")->check(CLI::PositiveNumber);
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Run one simulation from a config file");
  run_cmd->add_option("config", config_path, "Simulation config (JSON)")->required();
  run_cmd->add_option("--actuation-log", actuation_log, "Write one line per controller actuation");
  add_common(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep_cmd->add_option("preset", preset, "fig3, fig4 or custom")->required()->check(CLI::IsMember({"fig3", "fig4", "custom"}));
  sweep_cmd->add_option("--config", config_path, "Experiment config (JSON), required for custom");
  sweep_cmd->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seeds", seeds_per_point, "Override seeds per point")->check(CLI::PositiveNumber);
  add_common(sweep_cmd);

  CLI::App* validate_cmd = app.add_subcommand("validate", "Lint a simulation or experiment config");
  validate_cmd->add_option("config", config_path, "Config file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      bpr::SimDocument doc = bpr::sim_from_json(load_json(config_path));
      if (seed) doc.seed = *seed;
      if (slots) doc.scenario.slots = *slots;
      bpr::Simulation sim(bpr::make_sim_config(doc.scenario, doc.mode, doc.seed));
      sim.run_to_end();
      bpr::MetricsReport report = sim.report();
      if (!actuation_log.empty()) {
        std::string lines;
        for (const std::string& l : sim.actuation_log()) lines += l + "\n";
        emit(lines, actuation_log);
      }
      if (format == "json") {
        emit(report_json(report, sim).dump(2) + "\n", out);
      } else {
        bpr::ResultTable table;
        std::string hop = doc.mode == bpr::Mode::ospf_only ? "none"
                          : doc.mode == bpr::Mode::sbpr    ? "off"
                                                           : std::string(bpr::to_string(doc.scenario.hop_filter));
        table.rows.push_back(bpr::make_row("run", report, hop));
        emit(bpr::to_csv(table), out);
      }
      return 0;
    }

    if (*sweep_cmd) {
      bpr::ExperimentSpec spec;
      if (preset == "fig3") spec = bpr::preset_fig3();
      else if (preset == "fig4") spec = bpr::preset_fig4();
      else {
        if (config_path.empty()) throw std::runtime_error("sweep custom needs --config");
        spec = bpr::experiment_from_json(load_json(config_path));
      }
      if (seed) spec.base_seed = *seed;
      if (slots) spec.base.slots = *slots;
      if (seeds_per_point) spec.seeds_per_point = *seeds_per_point;
      if (out.empty()) out = spec.output.empty() ? "-" : spec.output;

      bpr::ResultTable table = bpr::run_experiment(spec, parallel);
      if (out == "-") {
        emit(format == "json" ? bpr::to_json(table).dump(2) + "\n" : bpr::to_csv(table), out);
      } else {
        bpr::write_table(table, out, format);
        std::cerr << "wrote " << table.rows.size() << " rows to " << out << '\n';
      }
      return 0;
    }

    if (*validate_cmd) {
      json doc = load_json(config_path);
      if (doc.contains("parameter") || doc.contains("template")) {
        bpr::ExperimentSpec spec = bpr::experiment_from_json(doc);
        bpr::make_sim_config(spec.base, spec.modes.front(), spec.base_seed).validate();
        std::cout << "ok: experiment '" << spec.name << "'\n";
      } else {
        bpr::SimDocument d = bpr::sim_from_json(doc);
        bpr::SimConfig c = bpr::make_sim_config(d.scenario, d.mode, d.seed);
        c.validate();
        std::cout << "ok: " << c.topology.node_count() << " nodes, " << c.topology.links().size() << " links, mode "
                  << bpr::to_string(d.mode) << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
