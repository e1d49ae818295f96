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

#ifndef AMTBENCH_HARNESS_HPP
#define AMTBENCH_HARNESS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "amtbench/amr.hpp"
#include "amtbench/observer.hpp"

namespace amt {

// The four instrumentation configurations:
//   I   counters + observer
//   II  observer only
//   III counters only
//   IV  bare runtime
enum class InstrumentationMode { kI, kII, kIII, kIV };

InstrumentationMode parse_mode(const std::string& text);  // throws ConfigError
std::string to_string(InstrumentationMode mode);
bool mode_has_counters(InstrumentationMode mode);
bool mode_has_observer(InstrumentationMode mode);

struct HarnessOptions {
  int localities = 2;
  int workers = 2;  // per locality
  std::uint64_t seed = 0;
  std::uint64_t sample_period_ns = 1000000000;  // observer async sampler
  EnergyConfig energy;
};

// One counter window (closed every regrid interval), per locality.
struct WindowSample {
  std::uint64_t window_ns = 0;  // wall duration of the window
  int locality = 0;
  double idle_rate_percent = 0.0;
  double amr_boundaries_per_second = 0.0;
};

// One leaf of the final tree, for the domain projection export.
struct LeafRow {
  int level = 0;
  std::array<double, 6> bbox{};  // xlo,ylo,zlo,xhi,yhi,zhi
  int owner = 0;
  double idle_rate_percent = 0.0;
  double mean_value = 0.0;
};

struct RunReport {
  InstrumentationMode mode = InstrumentationMode::kIV;
  int localities = 0;
  int workers = 0;
  std::uint64_t seed = 0;
  std::string scenario_digest;
  double wall_seconds = 0.0;
  std::int64_t subgrids_processed = 0;
  double subgrids_per_second = 0.0;
  std::int64_t leaves_processed = 0;
  std::int64_t amr_boundaries_processed = 0;
  double energy_kj = 0.0;
  double subgrids_per_kj = 0.0;
  double agas_overhead_percent = 0.0;
  // Idle-rate time series per locality, one entry per window (counter
  // modes only).
  std::vector<std::vector<double>> idle_rate_series;
  std::vector<WindowSample> windows;
  std::vector<LeafRow> leaves;
  std::map<std::string, TaskProfile> task_profiles;  // modes I, II
  // Per-locality idle rate over the whole run (never-reset accumulators).
  std::vector<double> run_idle_rate_percent;
  double final_total_mass = 0.0;
  std::int64_t final_leaf_count = 0;

  std::string to_json() const;
  static RunReport from_json(const std::string& text);
  void save(const std::string& path) const;
  static RunReport load(const std::string& path);
};

struct OverheadReport {
  int repetitions = 0;
  struct ModeResult {
    InstrumentationMode mode;
    double median_subgrids_per_second = 0.0;
    double min_subgrids_per_second = 0.0;
    double max_subgrids_per_second = 0.0;
    double overhead_percent = 0.0;  // vs mode IV; IV is 0 by definition
  };
  std::vector<ModeResult> modes;  // order I, II, III, IV

  std::string table() const;  // human-readable
  void save_csv(const std::string& path) const;
};

// Full pipeline: start runtime, wire the mode's instrumentation, build the
// tree, run the step/regrid loop, shut down, report. Physics output is
// identical across modes and scheduler shapes.
RunReport run_scenario(const ScenarioConfig& config, InstrumentationMode mode,
                       const HarnessOptions& options);

// Runs all four modes `repetitions` times, round-robin interleaved, and
// compares median throughput against mode IV.
OverheadReport compare_modes(const ScenarioConfig& config,
                             const HarnessOptions& options, int repetitions);

// CSV: window_ns,locality,idle_rate_percent,amr_boundaries_per_second;
// rows ordered by locality, then window.
void export_scatter(const RunReport& report, const std::string& path);

// CSV: level,xlo,ylo,zlo,xhi,yhi,zhi,owner,idle_rate_percent,mean_value;
// leaf (Morton) order. Throws QueryError when a leaf's owner is unknown.
void export_spatial_idle(const RunReport& report, const std::string& path);

int cli_main(int argc, char** argv);

}  // namespace amt

#endif  // AMTBENCH_HARNESS_HPP
