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

#include "amtbench/agas.hpp"

#include <string>

#include "amtbench/clock.hpp"
#include "amtbench/errors.hpp"

namespace amt {

namespace {

// Adds the elapsed wall time of one AGAS entry point to the clock.
class ScopedAgasTimer {
 public:
  explicit ScopedAgasTimer(std::atomic<std::uint64_t>& clock)
      : clock_(clock), start_(now_ns()) {}
  ~ScopedAgasTimer() {
    clock_.fetch_add(now_ns() - start_, std::memory_order_relaxed);
  }

 private:
  std::atomic<std::uint64_t>& clock_;
  std::uint64_t start_;
};

}  // namespace

AgasRegistry::AgasRegistry(int num_localities)
    : num_localities_(num_localities) {
  if (num_localities < 1)
    throw ConfigError("AGAS needs at least one locality");
}

GlobalId AgasRegistry::register_object(int owner, void* local_ref) {
  ScopedAgasTimer timer(clock_ns_);
  if (owner < 0 || owner >= num_localities_)
    throw QueryError("unknown locality " + std::to_string(owner));
  const std::uint64_t value = next_gid_.fetch_add(1);
  Shard& shard = shard_for(value);
  std::lock_guard<std::mutex> g(shard.m);
  shard.map.emplace(value, Entry{owner, local_ref, 0});
  return GlobalId{value};
}

AgasRegistry::Resolution AgasRegistry::resolve(GlobalId gid) const {
  ScopedAgasTimer timer(clock_ns_);
  if (!gid.valid()) throw QueryError("cannot resolve invalid gid 0");
  Shard& shard = shard_for(gid.value);
  std::lock_guard<std::mutex> g(shard.m);
  auto it = shard.map.find(gid.value);
  if (it == shard.map.end())
    throw QueryError("unknown gid " + std::to_string(gid.value));
  return Resolution{it->second.owner, it->second.local_ref,
                    it->second.generation};
}

void AgasRegistry::migrate(GlobalId gid, int dest) {
  ScopedAgasTimer timer(clock_ns_);
  if (dest < 0 || dest >= num_localities_)
    throw QueryError("unknown destination locality " + std::to_string(dest));
  if (!gid.valid()) throw QueryError("cannot migrate invalid gid 0");
  Shard& shard = shard_for(gid.value);
  std::lock_guard<std::mutex> g(shard.m);
  auto it = shard.map.find(gid.value);
  if (it == shard.map.end())
    throw QueryError("unknown gid " + std::to_string(gid.value));
  it->second.owner = dest;
  it->second.generation += 1;
}

std::uint64_t AgasRegistry::cumulative_ns(bool reset) const {
  if (reset) return clock_ns_.exchange(0, std::memory_order_relaxed);
  return clock_ns_.load(std::memory_order_relaxed);
}

double AgasRegistry::overhead_percent(std::uint64_t total_busy_ns,
                                      bool reset) const {
  const std::uint64_t agas = cumulative_ns(reset);
  if (total_busy_ns == 0) return 0.0;
  const double percent = 100.0 * static_cast<double>(agas) /
                         static_cast<double>(total_busy_ns);
  return percent > 100.0 ? 100.0 : percent;
}

std::uint64_t AgasRegistry::entry_count() const {
  std::uint64_t n = 0;
  for (const auto& shard : shards_) {
    std::lock_guard<std::mutex> g(shard.m);
    n += shard.map.size();
  }
  return n;
}

}  // namespace amt
