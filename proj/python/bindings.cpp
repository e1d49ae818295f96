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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amtbench/amr.hpp"
#include "amtbench/counters.hpp"
#include "amtbench/errors.hpp"
#include "amtbench/harness.hpp"

namespace py = pybind11;
using namespace amt;

namespace {

// Tree construction and mass/boundary summaries for a config, without
// exposing the full C++ octree object model.
py::dict tree_summary(const ScenarioConfig& config) {
  Octree tree = build_initial_tree(config);
  py::dict out;
  out["leaf_count"] = tree.leaves().size();
  out["node_count"] = tree.node_count();
  out["total_mass"] = total_mass(tree);
  out["amr_boundaries"] = count_amr_boundaries(tree);
  return out;
}

py::dict report_to_dict(const RunReport& r) {
  py::dict out;
  out["mode"] = to_string(r.mode);
  out["localities"] = r.localities;
  out["workers"] = r.workers;
  out["seed"] = r.seed;
  out["scenario_digest"] = r.scenario_digest;
  out["wall_seconds"] = r.wall_seconds;
  out["subgrids_processed"] = r.subgrids_processed;
  out["subgrids_per_second"] = r.subgrids_per_second;
  out["leaves_processed"] = r.leaves_processed;
  out["amr_boundaries_processed"] = r.amr_boundaries_processed;
  out["energy_kj"] = r.energy_kj;
  out["subgrids_per_kj"] = r.subgrids_per_kj;
  out["agas_overhead_percent"] = r.agas_overhead_percent;
  out["run_idle_rate_percent"] = r.run_idle_rate_percent;
  out["final_total_mass"] = r.final_total_mass;
  out["final_leaf_count"] = r.final_leaf_count;
  out["json"] = r.to_json();
  return out;
}

}  // namespace

PYBIND11_MODULE(_amtbench, m) {
  m.doc() = "asynchronous many-task AMR runtime measurement harness";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<QueryError>(m, "QueryError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "CounterParseError", PyExc_ValueError);

  py::class_<Blob>(m, "Blob")
      .def(py::init<>())
      .def_readwrite("center", &Blob::center)
      .def_readwrite("width", &Blob::width)
      .def_readwrite("amplitude", &Blob::amplitude);

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("max_level", &ScenarioConfig::max_level)
      .def_readwrite("n_cells", &ScenarioConfig::n_cells)
      .def_readwrite("threshold", &ScenarioConfig::threshold)
      .def_readwrite("regrid_interval", &ScenarioConfig::regrid_interval)
      .def_readwrite("blobs", &ScenarioConfig::blobs)
      .def_readwrite("omega", &ScenarioConfig::omega)
      .def_readwrite("cfl", &ScenarioConfig::cfl)
      .def_readwrite("dt", &ScenarioConfig::dt)
      .def_readwrite("steps", &ScenarioConfig::steps)
      .def("validate", &ScenarioConfig::validate)
      .def("effective_dt", &ScenarioConfig::effective_dt)
      .def("digest", &ScenarioConfig::digest);

  m.def("tree_summary", &tree_summary, py::arg("config"),
        "Build the initial tree and return leaf/node counts, total mass and "
        "the AMR boundary count.");

  m.def(
      "parse_counter_query",
      [](const std::string& text) {
        const CounterQuery q = parse_counter_query(text);
        py::dict out;
        out["namespace"] = q.ns;
        out["counter"] = q.counter;
        out["locality"] =
            q.locality ? py::object(py::int_(*q.locality)) : py::none();
        out["canonical"] = to_string(q);
        return out;
      },
      py::arg("text"), "Parse a performance counter query string.");

  m.def(
      "run_scenario",
      [](const ScenarioConfig& config, const std::string& mode, int localities,
         int workers, std::uint64_t seed) {
        HarnessOptions options;
        options.localities = localities;
        options.workers = workers;
        options.seed = seed;
        py::gil_scoped_release release;
        const RunReport report =
            run_scenario(config, parse_mode(mode), options);
        py::gil_scoped_acquire acquire;
        return report_to_dict(report);
      },
      py::arg("config"), py::arg("mode") = "IV", py::arg("localities") = 2,
      py::arg("workers") = 2, py::arg("seed") = 0,
      "Run one scenario and return the run report as a dict.");

  m.def(
      "compare_modes",
      [](const ScenarioConfig& config, int localities, int workers,
         int repetitions) {
        HarnessOptions options;
        options.localities = localities;
        options.workers = workers;
        OverheadReport report;
        {
          py::gil_scoped_release release;
          report = compare_modes(config, options, repetitions);
        }
        py::list rows;
        for (const auto& r : report.modes) {
          py::dict row;
          row["mode"] = to_string(r.mode);
          row["median_subgrids_per_second"] = r.median_subgrids_per_second;
          row["min_subgrids_per_second"] = r.min_subgrids_per_second;
          row["max_subgrids_per_second"] = r.max_subgrids_per_second;
          row["overhead_percent"] = r.overhead_percent;
          rows.append(row);
        }
        return rows;
      },
      py::arg("config"), py::arg("localities") = 2, py::arg("workers") = 2,
      py::arg("repetitions") = 3,
      "Compare the four instrumentation modes; returns one dict per mode.");

  m.def(
      "export_scatter",
      [](const std::string& report_json, const std::string& path) {
        export_scatter(RunReport::from_json(report_json), path);
      },
      py::arg("report_json"), py::arg("path"),
      "Write the idle-rate / boundary-rate scatter CSV from a report JSON "
      "string.");

  m.def(
      "export_spatial_idle",
      [](const std::string& report_json, const std::string& path) {
        export_spatial_idle(RunReport::from_json(report_json), path);
      },
      py::arg("report_json"), py::arg("path"),
      "Write the spatial idle-rate projection CSV from a report JSON "
      "string.");
}
