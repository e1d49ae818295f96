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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "amtbench/errors.hpp"
#include "amtbench/harness.hpp"

using namespace amt;

namespace {

ScenarioConfig tiny_config() {
  ScenarioConfig config;
  config.n_cells = 4;
  config.max_level = 2;
  config.steps = 20;
  config.regrid_interval = 5;
  // Low threshold so the coarse 4^3 sampling still refines past the root.
  config.threshold = 0.03;
  return config;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct TempPath {
  std::string path;
  explicit TempPath(std::string p) : path(std::move(p)) {}
  ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("mode parsing round-trips; unknown mode is a config error") {
  for (const auto* text : {"I", "II", "III", "IV"})
    CHECK(to_string(parse_mode(text)) == text);
  CHECK_THROWS_AS(parse_mode("V"), ConfigError);
  CHECK_THROWS_AS(parse_mode("i"), ConfigError);
  CHECK_THROWS_AS(parse_mode(""), ConfigError);

  CHECK(mode_has_counters(InstrumentationMode::kI));
  CHECK_FALSE(mode_has_counters(InstrumentationMode::kII));
  CHECK(mode_has_counters(InstrumentationMode::kIII));
  CHECK_FALSE(mode_has_counters(InstrumentationMode::kIV));
  CHECK(mode_has_observer(InstrumentationMode::kI));
  CHECK(mode_has_observer(InstrumentationMode::kII));
  CHECK_FALSE(mode_has_observer(InstrumentationMode::kIII));
  CHECK_FALSE(mode_has_observer(InstrumentationMode::kIV));
}

TEST_CASE("run_scenario: report structure per mode") {
  const ScenarioConfig config = tiny_config();
  HarnessOptions options;
  options.localities = 2;
  options.workers = 2;

  SUBCASE("mode IV records no profiles and no windows") {
    const RunReport report =
        run_scenario(config, InstrumentationMode::kIV, options);
    CHECK(report.task_profiles.empty());
    CHECK(report.windows.empty());
    for (const auto& series : report.idle_rate_series) CHECK(series.empty());
    CHECK(report.subgrids_processed > 0);
    CHECK(report.subgrids_per_second > 0.0);
    CHECK(report.energy_kj > 0.0);
  }

  SUBCASE("mode I records both; windows = localities x steps/interval") {
    const RunReport report =
        run_scenario(config, InstrumentationMode::kI, options);
    CHECK(report.windows.size() == 2 * (20 / 5));
    REQUIRE(report.task_profiles.count("leaf_update") == 1);
    REQUIRE(report.task_profiles.count("ghost_exchange") == 1);
    CHECK(report.task_profiles.at("leaf_update").call_count ==
          static_cast<std::uint64_t>(report.leaves_processed));
    for (const auto& w : report.windows) {
      CHECK(w.idle_rate_percent >= 0.0);
      CHECK(w.idle_rate_percent <= 100.0);
      CHECK(w.amr_boundaries_per_second >= 0.0);
    }
  }

  SUBCASE("mode II: profiles but no counter windows") {
    const RunReport report =
        run_scenario(config, InstrumentationMode::kII, options);
    CHECK_FALSE(report.task_profiles.empty());
    CHECK(report.windows.empty());
  }

  SUBCASE("mode III: counter windows but no profiles") {
    const RunReport report =
        run_scenario(config, InstrumentationMode::kIII, options);
    CHECK(report.task_profiles.empty());
    CHECK_FALSE(report.windows.empty());
  }
}

TEST_CASE("run_scenario: physics identical across modes and shapes") {
  const ScenarioConfig config = tiny_config();
  HarnessOptions options;
  options.localities = 2;
  options.workers = 2;

  const RunReport iv = run_scenario(config, InstrumentationMode::kIV, options);
  const RunReport i = run_scenario(config, InstrumentationMode::kI, options);
  CHECK(iv.final_total_mass == i.final_total_mass);  // bitwise
  CHECK(iv.final_leaf_count == i.final_leaf_count);
  CHECK(iv.subgrids_processed == i.subgrids_processed);
  CHECK(iv.scenario_digest == i.scenario_digest);

  HarnessOptions single;
  single.localities = 1;
  single.workers = 1;
  const RunReport small =
      run_scenario(config, InstrumentationMode::kIV, single);
  CHECK(small.final_total_mass == iv.final_total_mass);
}

TEST_CASE("run_scenario: report arithmetic is exactly recomputable") {
  const RunReport report = run_scenario(tiny_config(),
                                        InstrumentationMode::kIII,
                                        HarnessOptions{});
  CHECK(report.subgrids_per_second ==
        static_cast<double>(report.subgrids_processed) / report.wall_seconds);
  CHECK(report.subgrids_per_kj ==
        static_cast<double>(report.subgrids_processed) / report.energy_kj);
  CHECK(report.leaves_processed <= report.subgrids_processed);
  CHECK(report.agas_overhead_percent >= 0.0);
  CHECK(report.agas_overhead_percent <= 100.0);
  CHECK(report.run_idle_rate_percent.size() ==
        static_cast<std::size_t>(report.localities));
}

TEST_CASE("run_scenario: invalid configs fail before any stepping") {
  ScenarioConfig bad = tiny_config();
  bad.n_cells = 3;
  CHECK_THROWS_AS(
      run_scenario(bad, InstrumentationMode::kIV, HarnessOptions{}),
      ConfigError);
  HarnessOptions zero;
  zero.localities = 0;
  CHECK_THROWS_AS(
      run_scenario(tiny_config(), InstrumentationMode::kIV, zero),
      ConfigError);
}

TEST_CASE("report JSON round-trips all fields") {
  HarnessOptions options;
  options.localities = 2;
  options.workers = 2;
  const RunReport report =
      run_scenario(tiny_config(), InstrumentationMode::kI, options);
  const RunReport back = RunReport::from_json(report.to_json());

  CHECK(back.mode == report.mode);
  CHECK(back.localities == report.localities);
  CHECK(back.workers == report.workers);
  CHECK(back.seed == report.seed);
  CHECK(back.scenario_digest == report.scenario_digest);
  CHECK(back.wall_seconds == report.wall_seconds);
  CHECK(back.subgrids_processed == report.subgrids_processed);
  CHECK(back.subgrids_per_second == report.subgrids_per_second);
  CHECK(back.leaves_processed == report.leaves_processed);
  CHECK(back.amr_boundaries_processed == report.amr_boundaries_processed);
  CHECK(back.energy_kj == report.energy_kj);
  CHECK(back.subgrids_per_kj == report.subgrids_per_kj);
  CHECK(back.agas_overhead_percent == report.agas_overhead_percent);
  CHECK(back.final_total_mass == report.final_total_mass);
  CHECK(back.final_leaf_count == report.final_leaf_count);
  CHECK(back.run_idle_rate_percent == report.run_idle_rate_percent);
  CHECK(back.idle_rate_series == report.idle_rate_series);
  REQUIRE(back.windows.size() == report.windows.size());
  for (std::size_t i = 0; i < back.windows.size(); ++i) {
    CHECK(back.windows[i].window_ns == report.windows[i].window_ns);
    CHECK(back.windows[i].locality == report.windows[i].locality);
    CHECK(back.windows[i].idle_rate_percent ==
          report.windows[i].idle_rate_percent);
    CHECK(back.windows[i].amr_boundaries_per_second ==
          report.windows[i].amr_boundaries_per_second);
  }
  REQUIRE(back.leaves.size() == report.leaves.size());
  CHECK(back.leaves.front().bbox == report.leaves.front().bbox);
  REQUIRE(back.task_profiles.size() == report.task_profiles.size());
  CHECK(back.task_profiles.at("leaf_update").call_count ==
        report.task_profiles.at("leaf_update").call_count);
}

TEST_CASE("report JSON: malformed or incomplete input is a query error") {
  CHECK_THROWS_AS(RunReport::from_json("not json"), QueryError);
  CHECK_THROWS_AS(RunReport::from_json("{\"mode\": \"I\"}"), QueryError);
}

TEST_CASE("export_scatter: ordering, header, and empty input") {
  RunReport report;
  report.localities = 2;
  report.windows = {
      {100, 0, 10.0, 5.0},
      {100, 1, 20.0, 7.0},
      {200, 0, 30.0, 2.0},
      {200, 1, 40.0, 1.0},
  };
  TempPath csv("scatter_test.csv");
  export_scatter(report, csv.path);
  const auto lines = read_lines(csv.path);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "window_ns,locality,idle_rate_percent,amr_boundaries_per_second");
  // Rows ordered by locality, then window.
  CHECK(lines[1] == "100,0,10,5");
  CHECK(lines[2] == "200,0,30,2");
  CHECK(lines[3] == "100,1,20,7");
  CHECK(lines[4] == "200,1,40,1");

  report.windows.clear();
  export_scatter(report, csv.path);
  CHECK(read_lines(csv.path).size() == 1);  // header-only
}

TEST_CASE("export_spatial_idle: row per leaf, Morton order, owner check") {
  HarnessOptions options;
  options.localities = 2;
  options.workers = 2;
  RunReport report =
      run_scenario(tiny_config(), InstrumentationMode::kIII, options);
  TempPath csv("spatial_test.csv");
  export_spatial_idle(report, csv.path);
  const auto lines = read_lines(csv.path);
  CHECK(lines[0] ==
        "level,xlo,ylo,zlo,xhi,yhi,zhi,owner,idle_rate_percent,mean_value");
  CHECK(lines.size() == 1 + report.leaves.size());
  CHECK(static_cast<std::int64_t>(report.leaves.size()) ==
        report.final_leaf_count);

  // All leaves of one locality carry that locality's single idle rate.
  for (const auto& leaf : report.leaves)
    CHECK(leaf.idle_rate_percent ==
          report.run_idle_rate_percent[leaf.owner]);

  report.leaves.front().owner = 99;
  CHECK_THROWS_AS(export_spatial_idle(report, csv.path), QueryError);
}

TEST_CASE("compare_modes: repetition gate, mode order, IV baseline") {
  ScenarioConfig config = tiny_config();
  config.steps = 5;
  CHECK_THROWS_AS(compare_modes(config, HarnessOptions{}, 2), ConfigError);

  const OverheadReport report = compare_modes(config, HarnessOptions{}, 3);
  CHECK(report.repetitions == 3);
  REQUIRE(report.modes.size() == 4);
  CHECK(report.modes[0].mode == InstrumentationMode::kI);
  CHECK(report.modes[1].mode == InstrumentationMode::kII);
  CHECK(report.modes[2].mode == InstrumentationMode::kIII);
  CHECK(report.modes[3].mode == InstrumentationMode::kIV);
  CHECK(report.modes[3].overhead_percent == 0.0);  // exactly, by definition
  for (const auto& m : report.modes) {
    CHECK(m.median_subgrids_per_second > 0.0);
    CHECK(m.min_subgrids_per_second <= m.median_subgrids_per_second);
    CHECK(m.median_subgrids_per_second <= m.max_subgrids_per_second);
  }

  TempPath csv("overhead_test.csv");
  report.save_csv(csv.path);
  const auto lines = read_lines(csv.path);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "mode,median_subgrids_per_second,min_subgrids_per_second,"
        "max_subgrids_per_second,overhead_percent");
  CHECK(lines[4].substr(0, 3) == "IV,");
  CHECK(report.table().find("mode") == 0);
}

TEST_CASE("cli_main: run writes a report; bad usage exits 2") {
  auto run_cli = [](std::vector<std::string> args) {
    std::vector<char*> argv;
    args.insert(args.begin(), "amtbench");
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
  };

  TempPath report_path("cli_report_test.json");
  TempPath scatter_path("cli_scatter_test.csv");
  TempPath spatial_path("cli_spatial_test.csv");

  CHECK(run_cli({"run", "--mode", "III", "--max-level", "2", "--n-cells",
                 "4", "--steps", "10", "--regrid-interval", "5",
                 "--report", report_path.path, "--scatter-out",
                 scatter_path.path, "--spatial-out", spatial_path.path}) == 0);
  const RunReport report = RunReport::load(report_path.path);
  CHECK(report.mode == InstrumentationMode::kIII);
  CHECK(report.subgrids_processed > 0);
  CHECK(read_lines(scatter_path.path).size() > 1);
  CHECK(read_lines(spatial_path.path).size() > 1);

  // Re-export from the saved report.
  TempPath scatter2("cli_scatter2_test.csv");
  CHECK(run_cli({"export", "--report", report_path.path, "--scatter-out",
                 scatter2.path}) == 0);
  CHECK(read_lines(scatter2.path) == read_lines(scatter_path.path));

  CHECK(run_cli({"run", "--mode", "V"}) == 2);
  CHECK(run_cli({"run", "--bogus-flag"}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({"run", "--energy-source", "nonsense"}) == 2);
  CHECK(run_cli({"export", "--report", "/does/not/exist.json",
                 "--scatter-out", scatter2.path}) == 2);
}
