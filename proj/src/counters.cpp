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

#include "amtbench/counters.hpp"

#include <cctype>
#include <mutex>

#include "amtbench/clock.hpp"
#include "amtbench/errors.hpp"

namespace amt {

namespace {

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Consumes a nonempty run of name characters starting at pos.
std::string parse_segment(std::string_view text, std::size_t& pos,
                          const char* what) {
  const std::size_t start = pos;
  while (pos < text.size() && name_char(text[pos])) ++pos;
  if (pos == start)
    throw ParseError(std::string("expected ") + what, start);
  return std::string(text.substr(start, pos - start));
}

}  // namespace

CounterQuery parse_counter_query(std::string_view text) {
  std::size_t pos = 0;
  CounterQuery q;
  q.ns = parse_segment(text, pos, "namespace");
  if (pos >= text.size() || text[pos] != '/')
    throw ParseError("expected '/'", pos);
  ++pos;
  q.counter = parse_segment(text, pos, "counter name");

  if (pos < text.size()) {
    static constexpr std::string_view kLocalityTag = "@locality#";
    if (text.substr(pos, kLocalityTag.size()) != kLocalityTag)
      throw ParseError("expected '@locality#'", pos);
    pos += kLocalityTag.size();
    if (pos < text.size() && text[pos] == '*') {
      q.locality.reset();
      ++pos;
    } else {
      const std::size_t start = pos;
      long value = 0;
      while (pos < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos]))) {
        value = value * 10 + (text[pos] - '0');
        ++pos;
      }
      if (pos == start)
        throw ParseError("expected locality digits or '*'", start);
      q.locality = static_cast<int>(value);
    }
  }
  if (pos != text.size()) throw ParseError("trailing characters", pos);
  return q;
}

std::string to_string(const CounterQuery& query) {
  std::string out = query.ns + "/" + query.counter + "@locality#";
  if (query.locality)
    out += std::to_string(*query.locality);
  else
    out += '*';
  return out;
}

CounterRegistry::CounterRegistry(int num_localities)
    : num_localities_(num_localities) {
  if (num_localities < 1)
    throw ConfigError("counter registry needs at least one locality");
}

void CounterRegistry::install(const std::string& name,
                              CounterProvider provider,
                              std::string description) {
  // Validate the name against the query grammar (no locality suffix).
  const CounterQuery parsed = parse_counter_query(name);
  if (parsed.name() != name)
    throw ParseError("counter name must be <namespace>/<counter>", 0);
  if (!provider) throw ConfigError("counter provider must be callable");

  std::unique_lock<std::shared_mutex> g(m_);
  auto [it, inserted] =
      counters_.emplace(name, Installed{std::move(provider),
                                        std::move(description)});
  (void)it;
  if (!inserted)
    throw ConfigError("counter '" + name + "' already installed");
}

bool CounterRegistry::installed(const std::string& name) const {
  std::shared_lock<std::shared_mutex> g(m_);
  return counters_.count(name) != 0;
}

std::vector<CounterSample> CounterRegistry::read(const CounterQuery& query,
                                                 bool reset) const {
  CounterProvider provider;
  {
    std::shared_lock<std::shared_mutex> g(m_);
    auto it = counters_.find(query.name());
    if (it == counters_.end())
      throw QueryError("unknown counter '" + query.name() + "'");
    provider = it->second.provider;
  }

  std::vector<CounterSample> samples;
  if (query.locality) {
    if (*query.locality < 0 || *query.locality >= num_localities_)
      throw QueryError("unknown locality " + std::to_string(*query.locality));
    samples.push_back({query, *query.locality,
                       provider(*query.locality, reset), now_ns()});
  } else {
    samples.reserve(num_localities_);
    for (int l = 0; l < num_localities_; ++l)
      samples.push_back({query, l, provider(l, reset), now_ns()});
  }
  return samples;
}

std::vector<CounterSample> CounterRegistry::read(const std::string& query_text,
                                                 bool reset) const {
  return read(parse_counter_query(query_text), reset);
}

std::vector<std::pair<std::string, std::string>> CounterRegistry::list(
    std::string_view prefix) const {
  std::shared_lock<std::shared_mutex> g(m_);
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, entry] : counters_) {
    if (name.size() >= prefix.size() &&
        std::string_view(name).substr(0, prefix.size()) == prefix)
      out.emplace_back(name, entry.description);
  }
  return out;  // std::map iteration is already lexicographic
}

}  // namespace amt
