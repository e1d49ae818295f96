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

#ifndef AMTBENCH_COUNTERS_HPP
#define AMTBENCH_COUNTERS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace amt {

// Counter values are 64-bit integers; rate-style counters (idle-rate, agas
// overhead) report fixed-point percent x100 so read-with-reset stays a
// single atomic operation.
using CounterProvider = std::function<std::int64_t(int locality, bool reset)>;

// Parsed form of `<namespace>/<counter>[@locality#(<digits>|*)]`.
// An absent locality means wildcard-all.
struct CounterQuery {
  std::string ns;
  std::string counter;
  std::optional<int> locality;  // nullopt = all localities

  std::string name() const { return ns + "/" + counter; }
  friend bool operator==(const CounterQuery& a, const CounterQuery& b) {
    return a.ns == b.ns && a.counter == b.counter && a.locality == b.locality;
  }
};

struct CounterSample {
  CounterQuery query;
  int locality = 0;
  std::int64_t value = 0;
  std::uint64_t timestamp_ns = 0;
};

// Throws ParseError (with position) on any deviation from the grammar.
CounterQuery parse_counter_query(std::string_view text);
std::string to_string(const CounterQuery& query);

// Registry of named counter types. Installation is serialized; reads are
// concurrent. Providers are called once per matched locality.
class CounterRegistry {
 public:
  explicit CounterRegistry(int num_localities);

  void install(const std::string& name, CounterProvider provider,
               std::string description);
  bool installed(const std::string& name) const;

  std::vector<CounterSample> read(const CounterQuery& query,
                                  bool reset = false) const;
  std::vector<CounterSample> read(const std::string& query_text,
                                  bool reset = false) const;

  // Lexicographically sorted (name, description) pairs matching the prefix.
  std::vector<std::pair<std::string, std::string>> list(
      std::string_view prefix = {}) const;

  int num_localities() const noexcept { return num_localities_; }

 private:
  struct Installed {
    CounterProvider provider;
    std::string description;
  };

  int num_localities_;
  mutable std::shared_mutex m_;
  std::map<std::string, Installed> counters_;
};

}  // namespace amt

#endif  // AMTBENCH_COUNTERS_HPP
