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

#ifndef AMTBENCH_OBSERVER_HPP
#define AMTBENCH_OBSERVER_HPP

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include "amtbench/counters.hpp"

namespace amt {

enum class TimerKind : int { kStart, kStop, kYield, kResume };

// One dependency-chain timer event. Per task id the kind sequence must be
// start (yield resume)* stop.
struct TimerEvent {
  std::uint64_t task_id = 0;
  std::string label;
  TimerKind kind = TimerKind::kStart;
  std::uint64_t timestamp_ns = 0;
};

// Aggregated statistics per task type label. Inclusive time excludes
// yield->resume gaps.
struct TaskProfile {
  std::uint64_t call_count = 0;
  std::uint64_t total_inclusive_ns = 0;
  std::uint64_t max_ns = 0;
};

// A registered policy: fires either on a named event (synchronously, on the
// emitter's thread) or periodically (on the control thread).
struct Policy {
  std::variant<std::string, std::uint64_t> trigger;  // event name or period ns
  std::function<void()> action;
};

// Energy accounting source. Model mode charges P_busy/P_idle watts per
// locality against the runtime's busy/idle seconds; platform mode reads a
// file of cumulative microjoules (powercap convention) and corrects for
// counter wraparound.
struct EnergyConfig {
  enum class Mode { kModel, kPlatform };
  Mode mode = Mode::kModel;
  std::string platform_path;
  double p_busy_watts = 100.0;
  double p_idle_watts = 30.0;
  double wrap_range_uj = 4294967296.0;  // 2^32, the RAPL MSR width
};

// One row of the asynchronous sample stream. locality -1 marks
// whole-runtime samples (energy).
struct SampleRow {
  std::uint64_t tick_ns = 0;
  std::string query;
  int locality = 0;
  double value = 0.0;
};

// Synchronous task timing plus asynchronous periodic sampling and a policy
// engine, mirroring an in-situ profiling layer over the runtime.
class Observer {
 public:
  // locality_time_source(locality) -> (busy seconds, idle seconds),
  // cumulative; required for model-mode energy.
  using LocalityTimeSource =
      std::function<std::pair<double, double>(int locality)>;

  Observer(EnergyConfig energy, int num_localities,
           LocalityTimeSource time_source);
  ~Observer();

  Observer(const Observer&) = delete;
  Observer& operator=(const Observer&) = delete;

  // --- synchronous timers -------------------------------------------------
  void record_timer(const TimerEvent& event);
  std::unordered_map<std::string, TaskProfile> profiles() const;
  std::uint64_t sequencing_errors() const { return sequencing_errors_.load(); }

  // --- policy engine ------------------------------------------------------
  int register_policy(Policy policy);
  void emit_event(const std::string& name);
  std::uint64_t policy_invocations(int id) const;

  // --- periodic sampler ---------------------------------------------------
  // Validates the queries against the registry up front. period >= 1 ms.
  void start_sampler(std::uint64_t period_ns,
                     std::vector<CounterQuery> queries,
                     const CounterRegistry* registry);
  void stop_sampler();
  std::vector<SampleRow> samples() const;
  void export_samples_csv(const std::string& path) const;

  // --- energy -------------------------------------------------------------
  // Joules since start (or last reset). Falls back to the model with a
  // logged warning if the platform file is unreadable.
  double read_energy(bool reset = false);

 private:
  struct OpenTimer {
    std::string label;
    std::uint64_t start_ns = 0;
    std::uint64_t yield_ns = 0;      // nonzero while yielded
    std::uint64_t excluded_ns = 0;   // accumulated yield->resume gaps
  };

  struct PolicyRec {
    int id;
    std::variant<std::string, std::uint64_t> trigger;
    std::shared_ptr<std::function<void()>> action;
    std::uint64_t next_due_ns = 0;
    std::shared_ptr<std::atomic<std::uint64_t>> invocations;
  };

  static constexpr int kTimerShards = 64;

  struct TimerShard {
    mutable std::mutex m;
    std::unordered_map<std::uint64_t, OpenTimer> open;
  };
  struct ProfileShard {
    mutable std::mutex m;
    std::unordered_map<std::string, TaskProfile> profiles;
  };

  void control_loop();
  void ensure_control_thread();
  double model_joules() const;
  double platform_joules();

  int num_localities_;
  LocalityTimeSource time_source_;
  EnergyConfig energy_;

  std::array<TimerShard, kTimerShards> timer_shards_;
  std::array<ProfileShard, kTimerShards> profile_shards_;
  std::atomic<std::uint64_t> sequencing_errors_{0};

  mutable std::mutex policy_m_;
  std::vector<PolicyRec> policies_;

  mutable std::mutex sample_m_;
  std::vector<SampleRow> sample_rows_;
  std::vector<CounterQuery> sampler_queries_;
  const CounterRegistry* sampler_registry_ = nullptr;
  std::atomic<std::uint64_t> sampler_period_ns_{0};

  std::thread control_thread_;
  std::mutex control_m_;
  std::condition_variable control_cv_;
  bool control_stop_ = false;

  std::mutex energy_m_;
  bool platform_initialized_ = false;
  bool platform_failed_ = false;
  double platform_last_raw_uj_ = 0.0;
  double platform_accum_uj_ = 0.0;
  double energy_baseline_j_ = 0.0;
};

}  // namespace amt

#endif  // AMTBENCH_OBSERVER_HPP
