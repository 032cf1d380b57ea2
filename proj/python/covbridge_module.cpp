/*
 Copyright 2026 The covbridge Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "covbridge/bridge_solver.hpp"
#include "covbridge/commands.hpp"
#include "covbridge/config.hpp"
#include "covbridge/entropy_analysis.hpp"
#include "covbridge/errors.hpp"
#include "covbridge/sde_sim.hpp"
#include "covbridge/system_model.hpp"

namespace py = pybind11;
using namespace covbridge;

namespace {

py::list crossings_to_list(const std::vector<SingularCrossing>& crossings) {
  py::list out;
  for (const auto& c : crossings) out.append(py::make_tuple(c.time, c.which, c.eigenvalue));
  return out;
}

}  // namespace

PYBIND11_MODULE(_covbridge, m) {
  m.doc() = "Covariance steering and bridge verification for linear stochastic systems";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result([&m]() {
    return py::object(py::exception<Error>(m, "CovbridgeError", PyExc_RuntimeError));
  });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& cls = error_type.get_stored();
      py::object inst = cls(e.what());
      inst.attr("kind") = to_string(e.kind());
      PyErr_SetObject(cls.ptr(), inst.ptr());
    }
  });

  py::class_<TimeGrid>(m, "TimeGrid")
      .def_readonly("horizon", &TimeGrid::horizon)
      .def_readonly("steps", &TimeGrid::steps)
      .def_readonly("nodes", &TimeGrid::nodes)
      .def_property_readonly("dt", &TimeGrid::dt);
  m.def("build_time_grid", &build_time_grid, py::arg("horizon"), py::arg("steps"));

  py::class_<LtvSystem>(m, "LtvSystem")
      .def_static("constant", &LtvSystem::constant, py::arg("a"), py::arg("b"), py::arg("horizon"))
      .def_static("inertial", &LtvSystem::inertial, py::arg("horizon") = 1.0)
      .def_static("rlc", &LtvSystem::rlc, py::arg("horizon") = 1.0, py::arg("resistance") = 1.0,
                  py::arg("inductance") = 1.0, py::arg("capacitance") = 1.0)
      .def_static("brownian_scalar", &LtvSystem::brownian_scalar, py::arg("horizon") = 1.0)
      .def_static(
          "piecewise_constant",
          [](const std::vector<std::tuple<double, Matrix, Matrix>>& rows, double horizon) {
            std::vector<TableEntry> table;
            for (const auto& [t, a, b] : rows) table.push_back({t, a, b});
            return LtvSystem::piecewise_constant(std::move(table), horizon);
          },
          py::arg("table"), py::arg("horizon"))
      .def_property_readonly("state_dim", &LtvSystem::state_dim)
      .def_property_readonly("input_dim", &LtvSystem::input_dim)
      .def_property_readonly("horizon", &LtvSystem::horizon)
      .def_property_readonly("name", &LtvSystem::name)
      .def("eval", [](const LtvSystem& sys, double t) {
        const auto mats = eval_system(sys, t);
        return py::make_tuple(mats.a, mats.b);
      });

  py::class_<SystemSchedules>(m, "SystemSchedules")
      .def_readonly("grid", &SystemSchedules::grid)
      .def_readonly("phi", &SystemSchedules::phi)
      .def_readonly("phi_inv", &SystemSchedules::phi_inv)
      .def_readonly("m_gram", &SystemSchedules::m_gram)
      .def_readonly("n_gram", &SystemSchedules::n_gram)
      .def_property_readonly("controllable",
                             [](const SystemSchedules& s) { return s.controllability.controllable; })
      .def_property_readonly("phi_T0", &SystemSchedules::phi_T0)
      .def_property_readonly("m_TT", &SystemSchedules::m_TT)
      .def_property_readonly("n_T0", &SystemSchedules::n_T0);
  m.def("compute_schedules", &compute_schedules, py::arg("system"), py::arg("grid"),
        py::arg("rel_tol") = 1e-10);

  py::enum_<Branch>(m, "Branch").value("minus", Branch::minus).value("plus", Branch::plus);

  py::class_<BoundaryValues>(m, "BoundaryValues")
      .def_readonly("branch", &BoundaryValues::branch)
      .def_readonly("pi0", &BoundaryValues::pi0)
      .def_readonly("q0", &BoundaryValues::q0)
      .def_readonly("p0", &BoundaryValues::p0)
      .def_readonly("alternate_discrepancy", &BoundaryValues::alternate_discrepancy)
      .def_property_readonly("q_infinite", &BoundaryValues::q_infinite);
  m.def(
      "closed_form_boundary",
      [](const SystemSchedules& s, const Matrix& sigma0, const Matrix& sigma_t, Branch branch) {
        return closed_form_boundary(s, sigma0, sigma_t, branch);
      },
      py::arg("schedules"), py::arg("sigma0"), py::arg("sigma_t"),
      py::arg("branch") = Branch::minus);
  m.def("alternate_boundary_pi", &alternate_boundary_pi, py::arg("sigma0"), py::arg("sigma_t"),
        py::arg("phi_T0"), py::arg("m_TT"), py::arg("branch") = Branch::minus);

  py::class_<IterationResult>(m, "IterationResult")
      .def_readonly("q0", &IterationResult::q0)
      .def_readonly("p0", &IterationResult::p0)
      .def_readonly("iterations", &IterationResult::iterations)
      .def_property_readonly("converged", &IterationResult::converged);
  m.def("boundary_via_iteration", &boundary_via_iteration, py::arg("sigma0"), py::arg("sigma_t"),
        py::arg("phi_T0"), py::arg("m_TT"), py::arg("init_p0"), py::arg("max_iter") = 500,
        py::arg("tol") = 1e-12);

  py::class_<BridgeSolution>(m, "BridgeSolution")
      .def_readonly("branch", &BridgeSolution::branch)
      .def_readonly("grid", &BridgeSolution::grid)
      .def_readonly("boundary", &BridgeSolution::boundary)
      .def_readonly("pi", &BridgeSolution::pi_sched)
      .def_readonly("q", &BridgeSolution::q_sched)
      .def_readonly("p", &BridgeSolution::p_sched)
      .def_readonly("sigma", &BridgeSolution::sigma_sched)
      .def_readonly("gain", &BridgeSolution::gain_sched)
      .def_readonly("residual_0", &BridgeSolution::residual_0)
      .def_readonly("residual_T", &BridgeSolution::residual_T)
      .def_property_readonly("singular_times", [](const BridgeSolution& s) {
        return crossings_to_list(s.singular_times);
      });
  m.def("solve_bridge", &solve_bridge, py::arg("system"), py::arg("schedules"), py::arg("sigma0"),
        py::arg("sigma_t"), py::arg("branch") = Branch::minus);
  m.def(
      "verify_bridge",
      [](const BridgeSolution& sol, const Matrix& sigma0, const Matrix& sigma_t, double tol) {
        const BridgeReport r = verify_bridge(sol, sigma0, sigma_t, tol);
        py::dict out;
        out["residual_0"] = r.residual_0;
        out["residual_T"] = r.residual_T;
        out["terminal_error"] = r.terminal_error;
        out["min_sigma_eig"] = r.min_sigma_eig;
        out["passed"] = r.passed;
        return out;
      },
      py::arg("solution"), py::arg("sigma0"), py::arg("sigma_t"), py::arg("tol") = 1e-6);
  m.def("schedule_energy", [](const BridgeSolution& s) {
    return schedule_energy(s.grid, s.gain_sched, s.sigma_sched);
  });

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init([](std::size_t paths, std::uint64_t seed, std::size_t sim_steps,
                       std::size_t record_stride, unsigned workers) {
             return SimConfig{paths, seed, sim_steps, record_stride, workers};
           }),
           py::arg("paths") = 10000, py::arg("seed") = 42, py::arg("sim_steps") = 4000,
           py::arg("record_stride") = 20, py::arg("workers") = 1)
      .def_readwrite("paths", &SimConfig::paths)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("sim_steps", &SimConfig::sim_steps)
      .def_readwrite("record_stride", &SimConfig::record_stride)
      .def_readwrite("workers", &SimConfig::workers);

  py::class_<PathEnsemble>(m, "PathEnsemble")
      .def_readonly("times", &PathEnsemble::times)
      .def_readonly("states", &PathEnsemble::states)
      .def_readonly("controls", &PathEnsemble::controls)
      .def_readonly("seed", &PathEnsemble::seed)
      .def_readonly("paths", &PathEnsemble::paths)
      .def_readonly("scheme", &PathEnsemble::scheme);
  m.def("simulate_prior", &simulate_prior, py::arg("system"), py::arg("grid"), py::arg("sigma0"),
        py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "simulate_bridge",
      [](const LtvSystem& sys, const BridgeSolution& sol, const Matrix& sigma0,
         const SimConfig& cfg) { return simulate_bridge(sys, sol, sigma0, cfg); },
      py::arg("system"), py::arg("solution"), py::arg("sigma0"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>());
  m.def("simulate_pinned", &simulate_pinned, py::arg("system"), py::arg("grid"), py::arg("x0"),
        py::arg("x_t"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("empirical_covariance", &empirical_covariance, py::arg("ensemble"), py::arg("t"));
  m.def("empirical_mean", &empirical_mean, py::arg("ensemble"), py::arg("t"));
  m.def("empirical_energy", &empirical_energy, py::arg("ensemble"));

  m.def("gaussian_kl", &gaussian_kl, py::arg("sigma"), py::arg("s"));
  m.def(
      "prior_joint",
      [](const Matrix& sigma0, const Matrix& phi_T0, const Matrix& m_TT) {
        return prior_joint(sigma0, phi_T0, m_TT).value;
      },
      py::arg("sigma0"), py::arg("phi_T0"), py::arg("m_TT"));
  m.def(
      "closed_loop_transition",
      [](const LtvSystem& sys, const BridgeSolution& sol) {
        return closed_loop_transition(sys, sol.grid, sol.pi_sched).phi;
      },
      py::arg("system"), py::arg("solution"));
  m.def(
      "foc_residual",
      [](const Matrix& y, const Matrix& sigma0, const Matrix& sigma_t, const Matrix& phi_T0,
         const Matrix& m_TT) {
        const FocResult r = foc_residual(y, sigma0, sigma_t, phi_T0, m_TT);
        return py::make_tuple(r.residual, r.objective);
      },
      py::arg("y"), py::arg("sigma0"), py::arg("sigma_t"), py::arg("phi_T0"), py::arg("m_TT"));
  m.def(
      "reciprocal_identity_residuals",
      [](const LtvSystem& sys, const SystemSchedules& s, const BridgeSolution& sol,
         const Matrix& sigma0) {
        const ReciprocalReport r = reciprocal_identity_residuals(sys, s, sol, sigma0);
        py::dict out;
        out["f_residual"] = r.f_residual;
        out["drift_residual"] = r.drift_residual;
        out["offset_residual"] = r.offset_residual;
        out["nodes_checked"] = r.nodes_checked;
        return out;
      },
      py::arg("system"), py::arg("schedules"), py::arg("solution"), py::arg("sigma0"));
  m.def(
      "joint_optimality_check",
      [](const Matrix& y_star, const Matrix& sigma0, const Matrix& sigma_t, const Matrix& phi_T0,
         const Matrix& m_TT, int trials, std::uint64_t seed) {
        const OptimalityReport r =
            joint_optimality_check(y_star, sigma0, sigma_t, phi_T0, m_TT, trials, seed);
        py::dict out;
        out["kl_optimal"] = r.kl_optimal;
        out["min_gap"] = r.min_gap;
        out["accepted"] = r.accepted;
        out["passed"] = r.passed;
        return out;
      },
      py::arg("y_star"), py::arg("sigma0"), py::arg("sigma_t"), py::arg("phi_T0"),
      py::arg("m_TT"), py::arg("trials") = 100, py::arg("seed") = 42);

  py::class_<ProblemConfig>(m, "ProblemConfig")
      .def_readonly("name", &ProblemConfig::name)
      .def_readonly("horizon", &ProblemConfig::horizon)
      .def_readonly("steps", &ProblemConfig::steps)
      .def_readonly("sigma0", &ProblemConfig::sigma0)
      .def_readonly("sigma_t", &ProblemConfig::sigma_t)
      .def("to_json", &config_to_json_text);
  m.def("load_config_text", &load_config_text, py::arg("text"), py::arg("origin") = "<text>");
  m.def("load_config_file", &load_config_file, py::arg("path"));
  m.def("scenario_config", &scenario_config, py::arg("name"));
  m.def("scenario_names", [] {
    std::vector<std::string> names;
    for (const auto& s : scenario_catalog()) names.push_back(s.name);
    return names;
  });
  m.def("build_system", &build_system, py::arg("config"));
  m.def(
      "run_command",
      [](const std::string& command, const std::string& argument,
         std::optional<std::int64_t> steps, std::optional<std::size_t> paths,
         std::optional<std::uint64_t> seed, std::optional<std::string> out, unsigned workers) {
        RunOptions opts;
        opts.steps = steps;
        opts.paths = paths;
        opts.seed = seed;
        opts.out = out;
        opts.workers = workers;
        std::ostringstream so;
        std::ostringstream se;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_command(command, argument, opts, so, se);
        }
        return py::make_tuple(code, so.str(), se.str());
      },
      py::arg("command"), py::arg("argument"), py::arg("steps") = py::none(),
      py::arg("paths") = py::none(), py::arg("seed") = py::none(), py::arg("out") = py::none(),
      py::arg("workers") = 1);
}
