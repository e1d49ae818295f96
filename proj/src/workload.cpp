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

#include "amtbench/workload.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

#include "amtbench/errors.hpp"

namespace amt {

WorkloadCounters::WorkloadCounters(int localities) {
  if (localities < 1) throw ConfigError("localities must be >= 1");
  slots_.reserve(localities);
  for (int l = 0; l < localities; ++l)
    slots_.push_back(std::make_unique<Slot>());
}

void WorkloadCounters::add_subgrids(int locality, std::int64_t n) {
  slots_[locality]->subgrids.fetch_add(n, std::memory_order_relaxed);
}
void WorkloadCounters::add_leaves(int locality, std::int64_t n) {
  slots_[locality]->leaves.fetch_add(n, std::memory_order_relaxed);
}
void WorkloadCounters::add_boundaries(int locality, std::int64_t n) {
  slots_[locality]->boundaries.fetch_add(n, std::memory_order_relaxed);
}

namespace {

std::int64_t read_slot(std::atomic<std::int64_t>& slot, bool reset) {
  return reset ? slot.exchange(0) : slot.load();
}

}  // namespace

std::int64_t WorkloadCounters::subgrids(int locality, bool reset) {
  return read_slot(slots_[locality]->subgrids, reset);
}
std::int64_t WorkloadCounters::leaves(int locality, bool reset) {
  return read_slot(slots_[locality]->leaves, reset);
}
std::int64_t WorkloadCounters::boundaries(int locality, bool reset) {
  return read_slot(slots_[locality]->boundaries, reset);
}

std::int64_t WorkloadCounters::total_subgrids() const {
  std::int64_t total = 0;
  for (const auto& slot : slots_) total += slot->subgrids.load();
  return total;
}
std::int64_t WorkloadCounters::total_leaves() const {
  std::int64_t total = 0;
  for (const auto& slot : slots_) total += slot->leaves.load();
  return total;
}
std::int64_t WorkloadCounters::total_boundaries() const {
  std::int64_t total = 0;
  for (const auto& slot : slots_) total += slot->boundaries.load();
  return total;
}

void install_workload_counters(CounterRegistry& registry,
                               WorkloadCounters& counters) {
  registry.install(
      "workload/subgrids",
      [&counters](int locality, bool reset) {
        return counters.subgrids(locality, reset);
      },
      "total number of sub-grids processed");
  registry.install(
      "workload/subgrid_leaves",
      [&counters](int locality, bool reset) {
        return counters.leaves(locality, reset);
      },
      "total number of subgrid leaves processed");
  registry.install(
      "workload/amr_boundaries",
      [&counters](int locality, bool reset) {
        return counters.boundaries(locality, reset);
      },
      "total number of AMR boundaries processed");
}

void sync_agas(Octree& tree, AgasRegistry& agas) {
  for (SubGrid* leaf : tree.leaves()) {
    if (!leaf->gid.valid()) {
      leaf->gid = agas.register_object(leaf->owner, leaf);
    } else if (agas.resolve(leaf->gid).owner != leaf->owner) {
      agas.migrate(leaf->gid, leaf->owner);
    }
  }
}

void step_parallel(Octree& tree, const ScenarioConfig& config,
                   Runtime& runtime, AgasRegistry* agas,
                   WorkloadCounters* counters) {
  std::vector<SubGrid*> leaves = tree.leaves();

  // Distinct neighbor leaves per leaf, for the dependency edges.
  std::vector<std::vector<SubGrid*>> neighbor_sets(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto& set = neighbor_sets[i];
    for (int axis = 0; axis < 3; ++axis)
      for (int dir = -1; dir <= 1; dir += 2) {
        const FaceNeighbor fn = face_neighbor(tree, *leaves[i], axis, dir);
        switch (fn.kind) {
          case FaceNeighbor::Kind::kBoundary:
            break;
          case FaceNeighbor::Kind::kSame:
          case FaceNeighbor::Kind::kCoarse:
            set.push_back(const_cast<SubGrid*>(fn.neighbor));
            break;
          case FaceNeighbor::Kind::kFine:
            for (const SubGrid* f : fn.fine)
              set.push_back(const_cast<SubGrid*>(f));
            break;
        }
      }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }

  std::unordered_map<const SubGrid*, TaskHandle> exchange;
  exchange.reserve(leaves.size());
  for (SubGrid* leaf : leaves) {
    exchange[leaf] = runtime.spawn(leaf->owner, "ghost_exchange",
                                   [leaf]() -> std::any {
                                     leaf->frozen = leaf->cells;
                                     return {};
                                   });
  }

  std::vector<TaskHandle> updates;
  updates.reserve(leaves.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    SubGrid* leaf = leaves[i];
    std::vector<TaskHandle> deps;
    deps.reserve(neighbor_sets[i].size() + 1);
    deps.push_back(exchange[leaf]);
    for (SubGrid* nb : neighbor_sets[i]) deps.push_back(exchange[nb]);

    auto neighbors = neighbor_sets[i];
    updates.push_back(runtime.spawn(
        leaf->owner, "leaf_update",
        [leaf, neighbors = std::move(neighbors), &tree, &config, agas,
         counters]() -> std::any {
          if (agas)
            for (const SubGrid* nb : neighbors) agas->resolve(nb->gid);
          int amr_faces = 0;
          leaf->cells = advect_leaf(tree, *leaf, config, &amr_faces);
          if (counters) {
            counters->add_leaves(leaf->owner, 1);
            counters->add_subgrids(leaf->owner, 1);
            counters->add_boundaries(leaf->owner, amr_faces);
          }
          return {};
        },
        deps));
  }

  for (const TaskHandle& h : updates) runtime.wait(h);

  // Interior nodes count as processed sub-grids too, attributed to the
  // owner of their first leaf descendant.
  if (counters) {
    std::function<void(const SubGrid&)> rec = [&](const SubGrid& g) {
      if (g.is_leaf()) return;
      counters->add_subgrids(g.owner, 1);
      for (const auto& child : g.children) rec(*child);
    };
    rec(tree.root());
  }
}

}  // namespace amt
