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

#include <thread>
#include <vector>

#include "amtbench/agas.hpp"
#include "amtbench/amr.hpp"
#include "amtbench/counters.hpp"
#include "amtbench/errors.hpp"
#include "amtbench/runtime.hpp"
#include "amtbench/workload.hpp"

using namespace amt;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig config;
  config.n_cells = 4;
  config.max_level = 3;
  config.steps = 10;
  // Low threshold so the coarse 4^3 sampling still yields a multi-level
  // tree with coarse-fine faces.
  config.threshold = 0.03;
  return config;
}

std::vector<std::vector<double>> snapshot(const Octree& tree) {
  std::vector<std::vector<double>> out;
  for (const SubGrid* leaf : tree.leaves()) out.push_back(leaf->cells);
  return out;
}

}  // namespace

TEST_CASE("workload counters: per-locality accumulation and reset") {
  WorkloadCounters counters(3);
  counters.add_subgrids(0, 5);
  counters.add_leaves(1, 4);
  counters.add_boundaries(2, 3);
  CHECK(counters.subgrids(0) == 5);
  CHECK(counters.leaves(1) == 4);
  CHECK(counters.boundaries(2) == 3);
  CHECK(counters.total_subgrids() == 5);
  CHECK(counters.subgrids(0, true) == 5);
  CHECK(counters.subgrids(0) == 0);
}

TEST_CASE("install_workload_counters exposes the three counters") {
  CounterRegistry registry(2);
  WorkloadCounters counters(2);
  install_workload_counters(registry, counters);
  const auto listed = registry.list("workload/");
  REQUIRE(listed.size() == 3);
  CHECK(listed[0].first == "workload/amr_boundaries");
  CHECK(listed[1].first == "workload/subgrid_leaves");
  CHECK(listed[2].first == "workload/subgrids");
  CHECK(listed[1].second == "total number of subgrid leaves processed");

  counters.add_leaves(1, 9);
  auto samples = registry.read("workload/subgrid_leaves@locality#1", true);
  CHECK(samples[0].value == 9);
  samples = registry.read("workload/subgrid_leaves@locality#1");
  CHECK(samples[0].value == 0);
}

TEST_CASE("sync_agas registers each leaf once and migrates on reassign") {
  ScenarioConfig config = small_config();
  Octree tree = build_initial_tree(config);
  AgasRegistry agas(4);
  assign_owners(tree, 2);
  sync_agas(tree, agas);
  const std::uint64_t registered = agas.entry_count();
  CHECK(registered == tree.leaves().size());
  for (const SubGrid* leaf : tree.leaves()) {
    REQUIRE(leaf->gid.valid());
    const auto res = agas.resolve(leaf->gid);
    CHECK(res.owner == leaf->owner);
    CHECK(res.local_ref == leaf);
    CHECK(res.generation == 0);
  }

  // Re-partitioning into 4 chunks moves some leaves: migrations, not
  // re-registrations.
  assign_owners(tree, 4);
  sync_agas(tree, agas);
  CHECK(agas.entry_count() == registered);
  bool migrated = false;
  for (const SubGrid* leaf : tree.leaves()) {
    const auto res = agas.resolve(leaf->gid);
    CHECK(res.owner == leaf->owner);
    migrated |= res.generation > 0;
  }
  CHECK(migrated);
}

TEST_CASE("step_parallel matches step_serial bitwise") {
  ScenarioConfig config = small_config();

  Octree reference = build_initial_tree(config);
  for (int s = 0; s < 10; ++s) step_serial(reference, config);
  const auto expected = snapshot(reference);

  for (auto [localities, workers] : std::vector<std::pair<int, int>>{
           {1, 1}, {1, 4}, {2, 2}, {4, 2}}) {
    CAPTURE(localities);
    CAPTURE(workers);
    Octree tree = build_initial_tree(config);
    assign_owners(tree, localities);
    Runtime runtime(localities, workers, 7);
    AgasRegistry agas(localities);
    sync_agas(tree, agas);
    WorkloadCounters counters(localities);
    for (int s = 0; s < 10; ++s)
      step_parallel(tree, config, runtime, &agas, &counters);
    runtime.shutdown();

    const auto got = snapshot(tree);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected[i]);
  }
}

TEST_CASE("step_parallel works without agas or counters attached") {
  ScenarioConfig config = small_config();
  Octree reference = build_initial_tree(config);
  step_serial(reference, config);

  Octree tree = build_initial_tree(config);
  assign_owners(tree, 2);
  Runtime runtime(2, 2);
  step_parallel(tree, config, runtime, nullptr, nullptr);
  runtime.shutdown();
  CHECK(snapshot(tree) == snapshot(reference));
}

TEST_CASE("bitwise determinism holds across regrids and seeds") {
  ScenarioConfig config = small_config();
  config.steps = 30;

  auto run = [&](int localities, int workers, std::uint64_t seed) {
    Octree tree = build_initial_tree(config);
    assign_owners(tree, localities);
    Runtime runtime(localities, workers, seed);
    AgasRegistry agas(localities);
    sync_agas(tree, agas);
    for (int s = 1; s <= config.steps; ++s) {
      step_parallel(tree, config, runtime, &agas, nullptr);
      if (s % config.regrid_interval == 0 && s < config.steps) {
        regrid(tree, config);
        assign_owners(tree, localities);
        sync_agas(tree, agas);
      }
    }
    runtime.shutdown();
    return std::make_pair(snapshot(tree), total_mass(tree));
  };

  const auto [fields_a, mass_a] = run(1, 1, 0);
  const auto [fields_b, mass_b] = run(4, 4, 123);
  CHECK(mass_a == mass_b);  // bitwise: no tolerance
  REQUIRE(fields_a.size() == fields_b.size());
  for (std::size_t i = 0; i < fields_a.size(); ++i)
    CHECK(fields_a[i] == fields_b[i]);
}

TEST_CASE("counter consistency: S steps with no regrid") {
  ScenarioConfig config = small_config();
  Octree tree = build_initial_tree(config);
  assign_owners(tree, 2);
  const auto n_leaves = static_cast<std::int64_t>(tree.leaves().size());
  const auto n_nodes = static_cast<std::int64_t>(tree.node_count());
  const auto n_boundaries =
      static_cast<std::int64_t>(count_amr_boundaries(tree));
  REQUIRE(n_boundaries > 0);

  Runtime runtime(2, 2);
  WorkloadCounters counters(2);
  constexpr int kSteps = 7;
  for (int s = 0; s < kSteps; ++s)
    step_parallel(tree, config, runtime, nullptr, &counters);
  runtime.shutdown();

  CHECK(counters.total_leaves() == kSteps * n_leaves);
  CHECK(counters.total_subgrids() == kSteps * n_nodes);
  CHECK(counters.total_boundaries() == kSteps * n_boundaries);
  CHECK(counters.total_subgrids() >= counters.total_leaves());
}

TEST_CASE("counter attribution follows leaf ownership") {
  ScenarioConfig config = small_config();
  Octree tree = build_initial_tree(config);
  const std::vector<int> counts = assign_owners(tree, 2);
  Runtime runtime(2, 2);
  WorkloadCounters counters(2);
  step_parallel(tree, config, runtime, nullptr, &counters);
  runtime.shutdown();
  CHECK(counters.leaves(0) == counts[0]);
  CHECK(counters.leaves(1) == counts[1]);
}
