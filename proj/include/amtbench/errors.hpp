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

#ifndef AMTBENCH_ERRORS_HPP
#define AMTBENCH_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace amt {

// Bad construction parameters (zero worker counts, CFL violations, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation issued against a runtime in the wrong state (spawn after
// shutdown, double shutdown).
class LifecycleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lookup of something that does not exist (unknown locality, counter, gid).
class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed counter name or query text; carries the offset of the first
// offending character.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (at position " +
                           std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace amt

#endif  // AMTBENCH_ERRORS_HPP
