# Copyright 2026 the amtbench authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python interface to the amtbench task-runtime and AMR benchmark core.

The heavy lifting lives in the compiled ``_amtbench`` extension.  When the
package is installed the extension sits next to this file; during in-tree
development it is importable from the CMake build directory instead, so we
try the relative import first and fall back to a top-level one.
"""

try:
    from ._amtbench import (  # type: ignore[attr-defined]
        ConfigError,
        CounterParseError,
        QueryError,
        ScenarioConfig,
        compare_modes,
        export_scatter,
        export_spatial_idle,
        parse_counter_query,
        run_scenario,
        tree_summary,
    )
except ImportError:
    from _amtbench import (  # type: ignore[no-redef]
        ConfigError,
        CounterParseError,
        QueryError,
        ScenarioConfig,
        compare_modes,
        export_scatter,
        export_spatial_idle,
        parse_counter_query,
        run_scenario,
        tree_summary,
    )

__all__ = [
    "ConfigError",
    "CounterParseError",
    "QueryError",
    "ScenarioConfig",
    "compare_modes",
    "export_scatter",
    "export_spatial_idle",
    "parse_counter_query",
    "run_scenario",
    "tree_summary",
]
