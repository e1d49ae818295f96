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

"""Smoke tests for the Python bindings.

These exercise the binding surface end to end on a tiny scenario; the
exhaustive behavioral tests live in the C++ suites.
"""

import json

import pytest

import amtbench


def tiny_config():
    config = amtbench.ScenarioConfig()
    config.n_cells = 4
    config.max_level = 3
    config.steps = 10
    config.regrid_interval = 5
    config.threshold = 0.03
    return config


def test_counter_query_round_trip():
    q = amtbench.parse_counter_query("runtime/idle-rate@locality#3")
    assert q["namespace"] == "runtime"
    assert q["counter"] == "idle-rate"
    assert q["locality"] == 3
    assert q["canonical"] == "runtime/idle-rate@locality#3"

    wildcard = amtbench.parse_counter_query("agas/overhead")
    assert wildcard["locality"] is None
    assert wildcard["canonical"] == "agas/overhead@locality#*"


def test_counter_query_errors_map_to_value_error():
    with pytest.raises(ValueError):
        amtbench.parse_counter_query("bad//name")
    with pytest.raises(amtbench.CounterParseError):
        amtbench.parse_counter_query("runtime/idle-rate@locality#x")


def test_config_validation():
    config = tiny_config()
    config.validate()
    assert config.effective_dt() > 0.0
    assert config.digest() == tiny_config().digest()

    config.n_cells = 3  # must be even
    with pytest.raises(amtbench.ConfigError):
        config.validate()


def test_tree_summary():
    summary = amtbench.tree_summary(tiny_config())
    assert summary["leaf_count"] > 1
    assert summary["node_count"] > summary["leaf_count"]
    assert summary["total_mass"] > 0.0
    assert summary["amr_boundaries"] > 0


def test_run_scenario_reports_physics_and_throughput():
    report = amtbench.run_scenario(tiny_config(), mode="I", localities=2,
                                   workers=2)
    assert report["mode"] == "I"
    assert report["subgrids_processed"] > 0
    assert report["subgrids_per_second"] > 0.0
    assert report["final_leaf_count"] > 1
    assert len(report["run_idle_rate_percent"]) == 2
    assert all(0.0 <= r <= 100.0 for r in report["run_idle_rate_percent"])
    parsed = json.loads(report["json"])
    assert parsed["final_total_mass"] == report["final_total_mass"]


def test_run_scenario_is_deterministic_across_shapes():
    a = amtbench.run_scenario(tiny_config(), mode="IV", localities=1,
                              workers=1)
    b = amtbench.run_scenario(tiny_config(), mode="I", localities=4,
                              workers=2, seed=99)
    assert a["final_total_mass"] == b["final_total_mass"]  # bitwise
    assert a["final_leaf_count"] == b["final_leaf_count"]


def test_compare_modes_orders_rows_and_pins_baseline():
    rows = amtbench.compare_modes(tiny_config(), localities=1, workers=2,
                                  repetitions=3)
    assert [r["mode"] for r in rows] == ["I", "II", "III", "IV"]
    assert rows[3]["overhead_percent"] == 0.0
    with pytest.raises(amtbench.ConfigError):
        amtbench.compare_modes(tiny_config(), repetitions=2)


def test_export_csvs(tmp_path):
    report = amtbench.run_scenario(tiny_config(), mode="III", localities=2,
                                   workers=2)
    scatter = tmp_path / "scatter.csv"
    spatial = tmp_path / "spatial.csv"
    amtbench.export_scatter(report["json"], str(scatter))
    amtbench.export_spatial_idle(report["json"], str(spatial))

    scatter_lines = scatter.read_text().splitlines()
    assert scatter_lines[0] == \
        "window_ns,locality,idle_rate_percent,amr_boundaries_per_second"
    assert len(scatter_lines) > 1

    spatial_lines = spatial.read_text().splitlines()
    assert spatial_lines[0] == \
        "level,xlo,ylo,zlo,xhi,yhi,zhi,owner,idle_rate_percent,mean_value"
    assert len(spatial_lines) == 1 + report["final_leaf_count"]

    with pytest.raises(ValueError):
        amtbench.export_scatter("{not json", str(scatter))
