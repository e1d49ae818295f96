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

#ifndef AMTBENCH_AGAS_HPP
#define AMTBENCH_AGAS_HPP

#include <array>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <unordered_map>

namespace amt {

// Global object identity. Value 0 is reserved as invalid; values are never
// reused within a run.
struct GlobalId {
  std::uint64_t value = 0;

  bool valid() const noexcept { return value != 0; }
  friend bool operator==(GlobalId a, GlobalId b) { return a.value == b.value; }
};

// Registry mapping global ids to (owner locality, local object), with
// migration. The registry is sharded by gid; every entry point adds its
// wall time to a relaxed atomic clock, which backs the "agas/overhead"
// counter.
class AgasRegistry {
 public:
  struct Resolution {
    int owner = -1;
    void* local_ref = nullptr;
    std::uint64_t generation = 0;
  };

  explicit AgasRegistry(int num_localities);

  GlobalId register_object(int owner, void* local_ref);
  Resolution resolve(GlobalId gid) const;
  void migrate(GlobalId gid, int dest);

  // Nanoseconds spent inside register/resolve/migrate, summed over threads.
  std::uint64_t cumulative_ns(bool reset = false) const;

  // 100 x cumulative_ns / total_busy_ns; 0 when there was no busy time.
  double overhead_percent(std::uint64_t total_busy_ns, bool reset = false) const;

  std::uint64_t entry_count() const;

 private:
  static constexpr int kShards = 16;

  struct Entry {
    int owner;
    void* local_ref;
    std::uint64_t generation;
  };

  struct Shard {
    mutable std::mutex m;
    std::unordered_map<std::uint64_t, Entry> map;
  };

  Shard& shard_for(std::uint64_t value) const {
    return shards_[value % kShards];
  }

  int num_localities_;
  mutable std::array<Shard, kShards> shards_;
  std::atomic<std::uint64_t> next_gid_{1};
  mutable std::atomic<std::uint64_t> clock_ns_{0};
};

}  // namespace amt

#endif  // AMTBENCH_AGAS_HPP
