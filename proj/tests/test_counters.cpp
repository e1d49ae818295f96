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

#include <atomic>
#include <random>
#include <thread>
#include <vector>

#include "amtbench/counters.hpp"
#include "amtbench/errors.hpp"

using namespace amt;

TEST_CASE("query parsing: explicit locality") {
  const CounterQuery q = parse_counter_query("workload/subgrid_leaves@locality#0");
  CHECK(q.ns == "workload");
  CHECK(q.counter == "subgrid_leaves");
  REQUIRE(q.locality.has_value());
  CHECK(*q.locality == 0);
}

TEST_CASE("query parsing: omitted locality is wildcard") {
  const CounterQuery q = parse_counter_query("runtime/idle-rate");
  CHECK(q.ns == "runtime");
  CHECK(q.counter == "idle-rate");
  CHECK_FALSE(q.locality.has_value());
}

TEST_CASE("query parsing: explicit wildcard") {
  const CounterQuery q = parse_counter_query("agas/overhead@locality#*");
  CHECK_FALSE(q.locality.has_value());
}

TEST_CASE("query parsing: multi-digit locality") {
  CHECK(*parse_counter_query("a/b@locality#128").locality == 128);
}

TEST_CASE("query parsing errors carry the offending position") {
  // Non-digit locality.
  CHECK_THROWS_AS(parse_counter_query("runtime/idle-rate@locality#x"),
                  ParseError);
  try {
    parse_counter_query("runtime/idle-rate@locality#x");
  } catch (const ParseError& e) {
    CHECK(e.position() == 27);  // the 'x'
  }

  // Missing counter segment.
  try {
    parse_counter_query("bad//name");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }

  CHECK_THROWS_AS(parse_counter_query(""), ParseError);
  CHECK_THROWS_AS(parse_counter_query("noslash"), ParseError);
  CHECK_THROWS_AS(parse_counter_query("a/b@loc#1"), ParseError);
  CHECK_THROWS_AS(parse_counter_query("a/b@locality#"), ParseError);
  CHECK_THROWS_AS(parse_counter_query("a/b@locality#3x"), ParseError);
  CHECK_THROWS_AS(parse_counter_query("a/b extra"), ParseError);
  CHECK_THROWS_AS(parse_counter_query("a.b/c"), ParseError);
}

TEST_CASE("query round-trip: parse(serialize(q)) == q") {
  std::mt19937 rng(7);
  const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
  for (int trial = 0; trial < 200; ++trial) {
    CounterQuery q;
    auto segment = [&] {
      const int len = 1 + static_cast<int>(rng() % 12);
      std::string s;
      for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
      return s;
    };
    q.ns = segment();
    q.counter = segment();
    if (rng() % 2)
      q.locality = static_cast<int>(rng() % 1000);
    else
      q.locality.reset();
    CHECK(parse_counter_query(to_string(q)) == q);
  }
}

TEST_CASE("registry: install, read, list") {
  CounterRegistry registry(4);
  std::atomic<std::int64_t> hits{0};
  registry.install(
      "workload/subgrid_leaves",
      [&hits](int, bool reset) {
        return reset ? hits.exchange(0) : hits.load();
      },
      "total number of subgrid leaves processed");

  CHECK(registry.installed("workload/subgrid_leaves"));
  CHECK_FALSE(registry.installed("workload/other"));

  SUBCASE("read of never-incremented counter is 0") {
    const auto samples = registry.read("workload/subgrid_leaves@locality#2");
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].value == 0);
    CHECK(samples[0].locality == 2);
  }

  SUBCASE("read with reset returns the count once, then zero") {
    hits = 9;
    auto samples = registry.read("workload/subgrid_leaves@locality#0", true);
    CHECK(samples[0].value == 9);
    samples = registry.read("workload/subgrid_leaves@locality#0", true);
    CHECK(samples[0].value == 0);
  }

  SUBCASE("wildcard read returns one sample per locality, in order") {
    const auto samples = registry.read("workload/subgrid_leaves");
    REQUIRE(samples.size() == 4);
    for (int l = 0; l < 4; ++l) CHECK(samples[l].locality == l);
  }

  SUBCASE("timestamps are non-decreasing per stream") {
    std::uint64_t last = 0;
    for (int i = 0; i < 10; ++i) {
      const auto samples =
          registry.read("workload/subgrid_leaves@locality#1");
      CHECK(samples[0].timestamp_ns >= last);
      last = samples[0].timestamp_ns;
    }
  }

  SUBCASE("duplicate install is a registration error") {
    CHECK_THROWS_AS(registry.install("workload/subgrid_leaves",
                                     [](int, bool) { return 0; }, ""),
                    ConfigError);
  }

  SUBCASE("malformed names are parse errors") {
    CHECK_THROWS_AS(
        registry.install("bad//name", [](int, bool) { return 0; }, ""),
        ParseError);
    CHECK_THROWS_AS(
        registry.install("a/b@locality#1", [](int, bool) { return 0; }, ""),
        ParseError);
  }

  SUBCASE("unknown counter / locality are query errors") {
    CHECK_THROWS_AS(registry.read("workload/missing"), QueryError);
    CHECK_THROWS_AS(registry.read("workload/subgrid_leaves@locality#4"),
                    QueryError);
  }

  SUBCASE("list is sorted and prefix-filtered") {
    registry.install("workload/subgrids", [](int, bool) { return 0; },
                     "total number of sub-grids processed");
    registry.install("runtime/steals", [](int, bool) { return 0; }, "steals");
    const auto all = registry.list();
    REQUIRE(all.size() == 3);
    CHECK(all[0].first == "runtime/steals");
    CHECK(all[1].first == "workload/subgrid_leaves");
    CHECK(all[2].first == "workload/subgrids");
    CHECK(registry.list("workload/").size() == 2);
    CHECK(registry.list("nomatch/").empty());
  }
}

TEST_CASE("read-reset atomicity: no increment lost or double-counted") {
  CounterRegistry registry(1);
  std::atomic<std::int64_t> counter{0};
  registry.install(
      "test/hits",
      [&counter](int, bool reset) {
        return reset ? counter.exchange(0) : counter.load();
      },
      "");

  constexpr int kThreads = 8;
  constexpr std::int64_t kPerThread = 125000;  // total 1e6
  std::atomic<bool> done{false};

  std::int64_t harvested = 0;
  std::thread reader([&] {
    while (!done.load()) {
      harvested += registry.read("test/hits@locality#0", true)[0].value;
    }
  });

  std::vector<std::thread> incrementers;
  for (int t = 0; t < kThreads; ++t)
    incrementers.emplace_back([&counter] {
      for (std::int64_t i = 0; i < kPerThread; ++i)
        counter.fetch_add(1, std::memory_order_relaxed);
    });
  for (auto& t : incrementers) t.join();
  done = true;
  reader.join();

  const std::int64_t residual =
      registry.read("test/hits@locality#0", true)[0].value;
  CHECK(harvested + residual == kThreads * kPerThread);
}

TEST_CASE("rate counters report fixed-point percent x100") {
  CounterRegistry registry(2);
  // A provider following the fixed-point convention for 12.34%.
  registry.install("test/rate", [](int, bool) { return std::int64_t{1234}; },
                   "percent x100");
  const auto samples = registry.read("test/rate@locality#0");
  CHECK(samples[0].value == 1234);
  CHECK(static_cast<double>(samples[0].value) / 100.0 ==
        doctest::Approx(12.34));
}
