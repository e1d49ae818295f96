/* Copyright 2026 the amtbench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "amtbench/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "amtbench/clock.hpp"
#include "amtbench/errors.hpp"
#include "amtbench/runtime.hpp"
#include "amtbench/workload.hpp"

namespace amt {

using nlohmann::json;

InstrumentationMode parse_mode(const std::string& text) {
  if (text == "I") return InstrumentationMode::kI;
  if (text == "II") return InstrumentationMode::kII;
  if (text == "III") return InstrumentationMode::kIII;
  if (text == "IV") return InstrumentationMode::kIV;
  throw ConfigError("unknown instrumentation mode '" + text +
                    "' (expected I, II, III or IV)");
}

std::string to_string(InstrumentationMode mode) {
  switch (mode) {
    case InstrumentationMode::kI: return "I";
    case InstrumentationMode::kII: return "II";
    case InstrumentationMode::kIII: return "III";
    case InstrumentationMode::kIV: return "IV";
  }
  return "?";
}

bool mode_has_counters(InstrumentationMode mode) {
  return mode == InstrumentationMode::kI || mode == InstrumentationMode::kIII;
}

bool mode_has_observer(InstrumentationMode mode) {
  return mode == InstrumentationMode::kI || mode == InstrumentationMode::kII;
}

namespace {

TimerKind to_timer_kind(TaskEvent event) {
  switch (event) {
    case TaskEvent::kStart: return TimerKind::kStart;
    case TaskEvent::kStop: return TimerKind::kStop;
    case TaskEvent::kYield: return TimerKind::kYield;
    case TaskEvent::kResume: return TimerKind::kResume;
  }
  return TimerKind::kStart;
}

void install_builtin_counters(CounterRegistry& registry, Runtime& runtime,
                              AgasRegistry& agas, Observer& observer) {
  registry.install(
      "runtime/idle-rate",
      [&runtime](int locality, bool reset) {
        return static_cast<std::int64_t>(
            std::llround(runtime.idle_rate(locality, reset) * 100.0));
      },
      "percent x100 of window time the locality's workers had no work");
  registry.install(
      "runtime/steals",
      [&runtime](int locality, bool reset) {
        return static_cast<std::int64_t>(
            runtime.steal_count(locality, reset));
      },
      "tasks stolen between workers of the locality");
  registry.install(
      "agas/overhead",
      [&agas, &runtime](int /*locality*/, bool reset) {
        return static_cast<std::int64_t>(std::llround(
            agas.overhead_percent(runtime.total_busy_ns(), reset) * 100.0));
      },
      "percent x100 of busy time spent in AGAS entry points");
  registry.install(
      "observer/energy",
      [&observer](int locality, bool reset) {
        // The total is carried on locality 0.
        if (locality != 0) return std::int64_t{0};
        return static_cast<std::int64_t>(
            std::llround(observer.read_energy(reset)));
      },
      "joules consumed since the last reset");
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config, InstrumentationMode mode,
                       const HarnessOptions& options) {
  config.validate();
  if (options.localities < 1 || options.workers < 1)
    throw ConfigError("localities and workers must be >= 1");

  const std::uint64_t t0 = now_ns();

  Runtime runtime(options.localities, options.workers, options.seed);
  AgasRegistry agas(options.localities);
  WorkloadCounters wcounters(options.localities);
  Observer observer(options.energy, options.localities, [&runtime](int l) {
    return runtime.locality_busy_idle_seconds(l);
  });

  std::unique_ptr<CounterRegistry> registry;
  if (mode_has_counters(mode)) {
    registry = std::make_unique<CounterRegistry>(options.localities);
    install_builtin_counters(*registry, runtime, agas, observer);
    install_workload_counters(*registry, wcounters);
  }

  const bool observed = mode_has_observer(mode);
  if (observed) {
    runtime.set_task_event_hook(
        [&observer](std::uint64_t id, const std::string& label,
                    TaskEvent kind, std::uint64_t ts) {
          observer.record_timer({id, label, to_timer_kind(kind), ts});
        });
    std::vector<CounterQuery> queries;
    if (registry) {
      queries.push_back(parse_counter_query("workload/subgrid_leaves"));
      queries.push_back(parse_counter_query("runtime/idle-rate"));
    }
    observer.start_sampler(options.sample_period_ns, std::move(queries),
                           registry.get());
  }

  RunReport report;
  report.mode = mode;
  report.localities = options.localities;
  report.workers = options.workers;
  report.seed = options.seed;
  report.scenario_digest = config.digest();
  report.idle_rate_series.resize(options.localities);

  std::int64_t boundaries_in_windows = 0;

  try {
    Octree tree = build_initial_tree(config);
    assign_owners(tree, options.localities);
    sync_agas(tree, agas);

    std::uint64_t window_start = now_ns();
    auto close_window = [&] {
      const std::uint64_t now = now_ns();
      const std::uint64_t dur = now - window_start;
      window_start = now;
      const double dur_s = static_cast<double>(dur) * 1e-9;
      for (int l = 0; l < options.localities; ++l) {
        CounterQuery idle_q = parse_counter_query(
            "runtime/idle-rate@locality#" + std::to_string(l));
        CounterQuery bnd_q = parse_counter_query(
            "workload/amr_boundaries@locality#" + std::to_string(l));
        const double idle =
            static_cast<double>(registry->read(idle_q, true)[0].value) / 100.0;
        const std::int64_t bnd = registry->read(bnd_q, true)[0].value;
        boundaries_in_windows += bnd;
        report.windows.push_back(
            {dur, l, idle,
             dur_s > 0 ? static_cast<double>(bnd) / dur_s : 0.0});
        report.idle_rate_series[l].push_back(idle);
      }
    };

    for (int s = 1; s <= config.steps; ++s) {
      step_parallel(tree, config, runtime, &agas, &wcounters);
      if (observed) observer.emit_event("step_complete");
      if (s % config.regrid_interval == 0) {
        if (registry) close_window();
        if (s < config.steps) {
          regrid(tree, config);
          assign_owners(tree, options.localities);
          sync_agas(tree, agas);
          if (observed) observer.emit_event("regrid_complete");
        }
      }
    }

    report.final_total_mass = total_mass(tree);
    const auto final_leaves = tree.leaves();
    report.final_leaf_count = static_cast<std::int64_t>(final_leaves.size());

    for (int l = 0; l < options.localities; ++l) {
      const auto [busy_s, idle_s] = runtime.locality_busy_idle_seconds(l);
      const double total = busy_s + idle_s;
      report.run_idle_rate_percent.push_back(
          total > 0 ? 100.0 * idle_s / total : 100.0);
    }

    const int n = tree.n_cells();
    for (const SubGrid* leaf : final_leaves) {
      LeafRow row;
      row.level = leaf->level;
      row.bbox = {leaf->box_lo(0), leaf->box_lo(1), leaf->box_lo(2),
                  leaf->box_hi(0), leaf->box_hi(1), leaf->box_hi(2)};
      row.owner = leaf->owner;
      row.idle_rate_percent = report.run_idle_rate_percent[leaf->owner];
      double sum = 0.0;
      for (double v : leaf->cells) sum += v;
      row.mean_value = sum / (static_cast<double>(n) * n * n);
      report.leaves.push_back(row);
    }
  } catch (...) {
    if (observed) observer.stop_sampler();
    try {
      runtime.shutdown();
    } catch (...) {
    }
    throw;
  }

  if (observed) observer.stop_sampler();

  report.energy_kj = observer.read_energy(false) / 1000.0;
  report.agas_overhead_percent =
      agas.overhead_percent(runtime.total_busy_ns(), false);

  runtime.shutdown();

  report.wall_seconds = static_cast<double>(now_ns() - t0) * 1e-9;
  report.subgrids_processed = wcounters.total_subgrids();
  report.leaves_processed = wcounters.total_leaves();
  report.amr_boundaries_processed =
      wcounters.total_boundaries() + boundaries_in_windows;
  report.subgrids_per_second =
      report.wall_seconds > 0
          ? static_cast<double>(report.subgrids_processed) / report.wall_seconds
          : 0.0;
  report.subgrids_per_kj =
      report.energy_kj > 0
          ? static_cast<double>(report.subgrids_processed) / report.energy_kj
          : 0.0;

  if (observed)
    for (const auto& [label, profile] : observer.profiles())
      report.task_profiles[label] = profile;

  return report;
}

OverheadReport compare_modes(const ScenarioConfig& config,
                             const HarnessOptions& options, int repetitions) {
  if (repetitions < 3)
    throw ConfigError("compare_modes needs at least 3 repetitions");

  const InstrumentationMode order[] = {
      InstrumentationMode::kI, InstrumentationMode::kII,
      InstrumentationMode::kIII, InstrumentationMode::kIV};

  std::map<InstrumentationMode, std::vector<double>> throughput;
  // Round-robin over modes so machine drift hits all modes alike.
  for (int r = 0; r < repetitions; ++r)
    for (InstrumentationMode mode : order)
      throughput[mode].push_back(
          run_scenario(config, mode, options).subgrids_per_second);

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  OverheadReport report;
  report.repetitions = repetitions;
  const double median_iv = median(throughput[InstrumentationMode::kIV]);
  for (InstrumentationMode mode : order) {
    OverheadReport::ModeResult result;
    result.mode = mode;
    auto& values = throughput[mode];
    result.median_subgrids_per_second = median(values);
    result.min_subgrids_per_second =
        *std::min_element(values.begin(), values.end());
    result.max_subgrids_per_second =
        *std::max_element(values.begin(), values.end());
    if (mode == InstrumentationMode::kIV) {
      result.overhead_percent = 0.0;  // by definition
    } else if (median_iv > 0) {
      result.overhead_percent =
          (median_iv - result.median_subgrids_per_second) / median_iv * 100.0;
    }
    report.modes.push_back(result);
  }
  return report;
}

std::string OverheadReport::table() const {
  std::ostringstream os;
  os << "mode  median_sps     min_sps        max_sps        overhead_%\n";
  for (const auto& m : modes) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-4s  %-13.1f  %-13.1f  %-13.1f  %+.2f\n",
                  to_string(m.mode).c_str(), m.median_subgrids_per_second,
                  m.min_subgrids_per_second, m.max_subgrids_per_second,
                  m.overhead_percent);
    os << line;
  }
  return os.str();
}

void OverheadReport::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "mode,median_subgrids_per_second,min_subgrids_per_second,"
         "max_subgrids_per_second,overhead_percent\n";
  for (const auto& m : modes)
    out << to_string(m.mode) << "," << m.median_subgrids_per_second << ","
        << m.min_subgrids_per_second << "," << m.max_subgrids_per_second << ","
        << m.overhead_percent << "\n";
}

// ---------------------------------------------------------------------------
// Report serialization

std::string RunReport::to_json() const {
  json j;
  j["mode"] = to_string(mode);
  j["localities"] = localities;
  j["workers"] = workers;
  j["seed"] = seed;
  j["scenario_digest"] = scenario_digest;
  j["wall_seconds"] = wall_seconds;
  j["subgrids_processed"] = subgrids_processed;
  j["subgrids_per_second"] = subgrids_per_second;
  j["leaves_processed"] = leaves_processed;
  j["amr_boundaries_processed"] = amr_boundaries_processed;
  j["energy_kj"] = energy_kj;
  j["subgrids_per_kj"] = subgrids_per_kj;
  j["agas_overhead_percent"] = agas_overhead_percent;
  j["idle_rate_series"] = idle_rate_series;
  j["run_idle_rate_percent"] = run_idle_rate_percent;
  j["final_total_mass"] = final_total_mass;
  j["final_leaf_count"] = final_leaf_count;

  j["windows"] = json::array();
  for (const auto& w : windows)
    j["windows"].push_back({{"window_ns", w.window_ns},
                            {"locality", w.locality},
                            {"idle_rate_percent", w.idle_rate_percent},
                            {"amr_boundaries_per_second",
                             w.amr_boundaries_per_second}});

  j["leaves"] = json::array();
  for (const auto& leaf : leaves)
    j["leaves"].push_back({{"level", leaf.level},
                           {"bbox", leaf.bbox},
                           {"owner", leaf.owner},
                           {"idle_rate_percent", leaf.idle_rate_percent},
                           {"mean_value", leaf.mean_value}});

  j["task_profiles"] = json::object();
  for (const auto& [label, p] : task_profiles)
    j["task_profiles"][label] = {{"call_count", p.call_count},
                                 {"total_inclusive_ns", p.total_inclusive_ns},
                                 {"max_ns", p.max_ns}};
  return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw QueryError(std::string("malformed report JSON: ") + e.what());
  }
  try {
    RunReport r;
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.localities = j.at("localities").get<int>();
    r.workers = j.at("workers").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.scenario_digest = j.at("scenario_digest").get<std::string>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.subgrids_processed = j.at("subgrids_processed").get<std::int64_t>();
    r.subgrids_per_second = j.at("subgrids_per_second").get<double>();
    r.leaves_processed = j.at("leaves_processed").get<std::int64_t>();
    r.amr_boundaries_processed =
        j.at("amr_boundaries_processed").get<std::int64_t>();
    r.energy_kj = j.at("energy_kj").get<double>();
    r.subgrids_per_kj = j.at("subgrids_per_kj").get<double>();
    r.agas_overhead_percent = j.at("agas_overhead_percent").get<double>();
    r.idle_rate_series =
        j.at("idle_rate_series").get<std::vector<std::vector<double>>>();
    r.run_idle_rate_percent =
        j.at("run_idle_rate_percent").get<std::vector<double>>();
    r.final_total_mass = j.at("final_total_mass").get<double>();
    r.final_leaf_count = j.at("final_leaf_count").get<std::int64_t>();
    for (const auto& w : j.at("windows"))
      r.windows.push_back({w.at("window_ns").get<std::uint64_t>(),
                           w.at("locality").get<int>(),
                           w.at("idle_rate_percent").get<double>(),
                           w.at("amr_boundaries_per_second").get<double>()});
    for (const auto& leaf : j.at("leaves")) {
      LeafRow row;
      row.level = leaf.at("level").get<int>();
      row.bbox = leaf.at("bbox").get<std::array<double, 6>>();
      row.owner = leaf.at("owner").get<int>();
      row.idle_rate_percent = leaf.at("idle_rate_percent").get<double>();
      row.mean_value = leaf.at("mean_value").get<double>();
      r.leaves.push_back(row);
    }
    for (const auto& [label, p] : j.at("task_profiles").items())
      r.task_profiles[label] = {p.at("call_count").get<std::uint64_t>(),
                                p.at("total_inclusive_ns").get<std::uint64_t>(),
                                p.at("max_ns").get<std::uint64_t>()};
    return r;
  } catch (const json::exception& e) {
    throw QueryError(std::string("report JSON missing fields: ") + e.what());
  }
}

void RunReport::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << to_json() << "\n";
}

RunReport RunReport::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

// ---------------------------------------------------------------------------
// Exports

void export_scatter(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "window_ns,locality,idle_rate_percent,amr_boundaries_per_second\n";

  std::vector<WindowSample> rows = report.windows;
  for (const auto& row : rows)
    if (!std::isfinite(row.idle_rate_percent) ||
        !std::isfinite(row.amr_boundaries_per_second))
      throw QueryError("scatter export: non-finite counter sample");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const WindowSample& a, const WindowSample& b) {
                     return a.locality < b.locality;
                   });
  for (const auto& row : rows)
    out << row.window_ns << "," << row.locality << ","
        << row.idle_rate_percent << "," << row.amr_boundaries_per_second
        << "\n";
}

void export_spatial_idle(const RunReport& report, const std::string& path) {
  for (const auto& leaf : report.leaves)
    if (leaf.owner < 0 || leaf.owner >= report.localities)
      throw QueryError("spatial export: leaf with unknown owner locality");

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << "level,xlo,ylo,zlo,xhi,yhi,zhi,owner,idle_rate_percent,mean_value\n";
  for (const auto& leaf : report.leaves) {
    out << leaf.level;
    for (double b : leaf.bbox) out << "," << b;
    out << "," << leaf.owner << "," << leaf.idle_rate_percent << ","
        << leaf.mean_value << "\n";
  }
}

// ---------------------------------------------------------------------------
// CLI

namespace {

struct CliScenario {
  int max_level = 4;
  int n_cells = 8;
  int steps = 100;
  int regrid_interval = 10;
  double threshold = 0.25;

  ScenarioConfig to_config() const {
    ScenarioConfig config;
    config.max_level = max_level;
    config.n_cells = n_cells;
    config.steps = steps;
    config.regrid_interval = regrid_interval;
    config.threshold = threshold;
    return config;
  }
};

struct CliOptions {
  int localities = 2;
  int workers = 2;
  std::uint64_t seed = 0;
  int sample_period_ms = 1000;
  std::string energy_source = "model";

  HarnessOptions to_options() const {
    HarnessOptions options;
    options.localities = localities;
    options.workers = workers;
    options.seed = seed;
    options.sample_period_ns =
        static_cast<std::uint64_t>(sample_period_ms) * 1000000ull;
    if (energy_source == "model") {
      options.energy.mode = EnergyConfig::Mode::kModel;
    } else if (energy_source.rfind("platform:", 0) == 0) {
      options.energy.mode = EnergyConfig::Mode::kPlatform;
      options.energy.platform_path = energy_source.substr(9);
      if (options.energy.platform_path.empty())
        throw ConfigError("--energy-source platform:<path> needs a path");
    } else {
      throw ConfigError(
          "--energy-source must be 'model' or 'platform:<path>'");
    }
    return options;
  }
};

void add_common_flags(CLI::App* cmd, CliScenario& scenario,
                      CliOptions& options) {
  cmd->add_option("--localities", options.localities,
                  "number of localities (scheduler partitions)");
  cmd->add_option("--workers", options.workers, "workers per locality");
  cmd->add_option("--max-level", scenario.max_level,
                  "maximum refinement level");
  cmd->add_option("--steps", scenario.steps, "number of time steps");
  cmd->add_option("--seed", options.seed, "scheduler RNG seed");
  cmd->add_option("--sample-period-ms", options.sample_period_ms,
                  "observer sampling period in milliseconds");
  cmd->add_option("--energy-source", options.energy_source,
                  "'model' or 'platform:<path to cumulative uJ file>'");
  cmd->add_option("--n-cells", scenario.n_cells, "cells per sub-grid edge");
  cmd->add_option("--regrid-interval", scenario.regrid_interval,
                  "steps between regrids");
  cmd->add_option("--threshold", scenario.threshold,
                  "refinement threshold on the field value");
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"asynchronous many-task AMR runtime measurement harness"};
  app.require_subcommand(1);

  CliScenario scenario;
  CliOptions options;

  // run
  auto* run_cmd = app.add_subcommand("run", "run one scenario and report");
  std::string mode_text = "IV";
  std::string report_path, scatter_path, spatial_path;
  add_common_flags(run_cmd, scenario, options);
  run_cmd->add_option("--mode", mode_text, "instrumentation mode I|II|III|IV")
      ->check(CLI::IsMember({"I", "II", "III", "IV"}));
  run_cmd->add_option("--report", report_path, "write the JSON run report");
  run_cmd->add_option("--scatter-out", scatter_path,
                      "write the idle-rate/boundaries scatter CSV");
  run_cmd->add_option("--spatial-out", spatial_path,
                      "write the spatial idle-rate projection CSV");

  // compare
  auto* compare_cmd =
      app.add_subcommand("compare", "compare the four instrumentation modes");
  int repetitions = 5;
  std::string compare_csv;
  add_common_flags(compare_cmd, scenario, options);
  compare_cmd->add_option("--repetitions", repetitions,
                          "repetitions per mode (>= 3)");
  compare_cmd->add_option("--csv-out", compare_csv,
                          "write the overhead table as CSV");

  // export
  auto* export_cmd =
      app.add_subcommand("export", "re-export CSVs from a JSON run report");
  std::string export_report, export_scatter_path, export_spatial_path;
  export_cmd->add_option("--report", export_report, "input JSON run report")
      ->required();
  export_cmd->add_option("--scatter-out", export_scatter_path,
                         "scatter CSV output path");
  export_cmd->add_option("--spatial-out", export_spatial_path,
                         "spatial projection CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      const RunReport report = run_scenario(
          scenario.to_config(), parse_mode(mode_text), options.to_options());
      std::cout << "mode " << to_string(report.mode) << ": "
                << report.subgrids_processed << " sub-grids in "
                << report.wall_seconds << " s ("
                << report.subgrids_per_second << "/s, "
                << report.subgrids_per_kj << "/kJ, AGAS "
                << report.agas_overhead_percent << "%)\n";
      if (!report_path.empty()) report.save(report_path);
      if (!scatter_path.empty()) export_scatter(report, scatter_path);
      if (!spatial_path.empty()) export_spatial_idle(report, spatial_path);
    } else if (compare_cmd->parsed()) {
      const OverheadReport report =
          compare_modes(scenario.to_config(), options.to_options(),
                        repetitions);
      std::cout << report.table();
      if (!compare_csv.empty()) report.save_csv(compare_csv);
    } else if (export_cmd->parsed()) {
      const RunReport report = RunReport::load(export_report);
      if (!export_scatter_path.empty())
        export_scatter(report, export_scatter_path);
      if (!export_spatial_path.empty())
        export_spatial_idle(report, export_spatial_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace amt
