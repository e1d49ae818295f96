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

#ifndef AMTBENCH_WORKLOAD_HPP
#define AMTBENCH_WORKLOAD_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "amtbench/agas.hpp"
#include "amtbench/amr.hpp"
#include "amtbench/counters.hpp"
#include "amtbench/runtime.hpp"

namespace amt {

// The three application counters, kept per locality as plain atomic adds on
// the hot path. Totals and per-locality reads share read-then-zero
// semantics with the counter registry providers.
class WorkloadCounters {
 public:
  explicit WorkloadCounters(int localities);

  void add_subgrids(int locality, std::int64_t n);
  void add_leaves(int locality, std::int64_t n);
  void add_boundaries(int locality, std::int64_t n);

  std::int64_t subgrids(int locality, bool reset = false);
  std::int64_t leaves(int locality, bool reset = false);
  std::int64_t boundaries(int locality, bool reset = false);

  std::int64_t total_subgrids() const;
  std::int64_t total_leaves() const;
  std::int64_t total_boundaries() const;

  int localities() const { return static_cast<int>(slots_.size()); }

 private:
  struct Slot {
    std::atomic<std::int64_t> subgrids{0};
    std::atomic<std::int64_t> leaves{0};
    std::atomic<std::int64_t> boundaries{0};
  };
  std::vector<std::unique_ptr<Slot>> slots_;
};

// Installs workload/subgrids, workload/subgrid_leaves and
// workload/amr_boundaries. Reads are cumulative; reset zeroes the matched
// locality's accumulator atomically with the read.
void install_workload_counters(CounterRegistry& registry,
                               WorkloadCounters& counters);

// Registers fresh leaves and migrates gids whose owner changed; call after
// assign_owners and after every regrid.
void sync_agas(Octree& tree, AgasRegistry& agas);

// One task-parallel step: a ghost-exchange task per leaf (freezes its
// field), then an update task per leaf depending on its own and its face
// neighbors' exchange tasks. Each neighbor access resolves the neighbor's
// gid through AGAS when a registry is given. Produces bitwise-identical
// fields to step_serial for any scheduler configuration.
void step_parallel(Octree& tree, const ScenarioConfig& config,
                   Runtime& runtime, AgasRegistry* agas,
                   WorkloadCounters* counters);

}  // namespace amt

#endif  // AMTBENCH_WORKLOAD_HPP
