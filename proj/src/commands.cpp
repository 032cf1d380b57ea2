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
#include "covbridge/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <sstream>

#include "covbridge/entropy_analysis.hpp"
#include "covbridge/errors.hpp"
#include "covbridge/io.hpp"
#include "covbridge/sde_sim.hpp"

namespace covbridge {

using nlohmann::json;

namespace {

constexpr double kDegenerateGain = 1e-7;
constexpr double kCrossMethodTol = 1e-8;
constexpr double kFormulaTol = 1e-10;
constexpr double kFocTol = 1e-6;
constexpr double kReciprocalTol = 1e-5;
constexpr int kOptimalityTrials = 100;

double relative_gap(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json crossings_json(const std::vector<SingularCrossing>& crossings) {
  json out = json::array();
  for (const auto& c : crossings) {
    out.push_back({{"time", c.time}, {"which", c.which}, {"eigenvalue", c.eigenvalue},
                   {"node", c.node}});
  }
  return out;
}

json check(const std::string& name, double value, double tol, bool passed) {
  return {{"name", name}, {"value", finite_or_null(value)}, {"tol", tol}, {"passed", passed}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::numerical_failure:
      case ErrorKind::escape_detected:
        return static_cast<int>(ExitCode::numerical_failure);
      case ErrorKind::invalid_argument:
      case ErrorKind::out_of_range:
      case ErrorKind::not_controllable:
      case ErrorKind::infeasible_coupling:
      case ErrorKind::config_error:
        return static_cast<int>(ExitCode::input_error);
    }
  }
  return static_cast<int>(ExitCode::numerical_failure);
}

void apply_overrides(ProblemConfig& cfg, const RunOptions& opts) {
  if (opts.steps) cfg.steps = *opts.steps;
  if (opts.paths || opts.seed) {
    if (!cfg.simulate) cfg.simulate = SimulateSpec{};
    if (opts.paths) cfg.simulate->paths = *opts.paths;
    if (opts.seed) cfg.simulate->seed = *opts.seed;
  }
  if (opts.out) cfg.output.dir = *opts.out;
  validate_config(cfg);
}

std::filesystem::path resolve_output_dir(const ProblemConfig& cfg, const RunOptions& opts) {
  if (opts.out && !opts.out->empty()) return *opts.out;
  if (!cfg.output.dir.empty()) return cfg.output.dir;
  if (const char* env = std::getenv("COVBRIDGE_OUT"); env != nullptr && *env != '\0') return env;
  return "covbridge_out";
}

SolveOutcome solve_problem(const ProblemConfig& cfg, const RunOptions& opts) {
  SolveOutcome res(build_system(cfg));
  const TimeGrid grid = build_time_grid(cfg.horizon, cfg.steps);
  res.schedules = compute_schedules(res.sys, grid);
  const auto& ctrl = res.schedules.controllability;
  if (!ctrl.controllable) {
    std::ostringstream msg;
    msg << "system is not controllable on [0, T]: lambda_min(M(T,0)) = " << ctrl.lambda_min
        << ", lambda_max = " << ctrl.lambda_max;
    throw Error(ErrorKind::not_controllable, msg.str());
  }

  res.minus = solve_bridge(res.sys, res.schedules, cfg.sigma0, cfg.sigma_t, Branch::minus);
  if (opts.gain_scale != 1.0) {
    res.minus = with_scaled_gain(res.sys, res.minus, cfg.sigma0, opts.gain_scale);
  }
  try {
    res.plus = solve_bridge(res.sys, res.schedules, cfg.sigma0, cfg.sigma_t, Branch::plus);
  } catch (const Error& e) {
    res.plus_error = e.what();
  }

  res.iteration = boundary_via_iteration(cfg.sigma0, cfg.sigma_t, res.schedules.phi_T0(),
                                         res.schedules.m_TT(), cfg.sigma0);
  const auto& bnd = res.minus.boundary;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.iteration_q_gap = nan;
  res.iteration_p_gap = nan;
  if (res.iteration.converged()) {
    if (bnd.q0) res.iteration_q_gap = relative_gap(res.iteration.q0, *bnd.q0);
    res.iteration_p_gap = relative_gap(res.iteration.p0, bnd.p0);
  }

  for (const auto& k : res.minus.gain_sched) res.max_gain_norm = std::max(res.max_gain_norm, k.norm());
  res.degenerate_zero_gain = res.max_gain_norm <= kDegenerateGain;
  return res;
}

json solve_report(const ProblemConfig& cfg, const SolveOutcome& res) {
  const auto& sol = res.minus;
  const auto& bnd = sol.boundary;
  const BridgeReport br = verify_bridge(sol, cfg.sigma0, cfg.sigma_t, cfg.verify_tol);
  const auto& ctrl = res.schedules.controllability;

  json flags = json::array();
  if (res.degenerate_zero_gain) flags.push_back("degenerate-zero-gain");
  if (bnd.q_infinite()) flags.push_back("infinite-q0");

  json plus;
  if (res.plus) {
    plus["singular_times"] = crossings_json(res.plus->singular_times);
    if (res.plus->escape_node) {
      plus["escape_time"] = res.plus->grid.nodes[*res.plus->escape_node];
    } else {
      plus["escape_time"] = nullptr;
    }
    plus["q0"] = res.plus->boundary.q0 ? matrix_to_json(*res.plus->boundary.q0) : json(nullptr);
    plus["p0"] = matrix_to_json(res.plus->boundary.p0);
  } else {
    plus["error"] = res.plus_error;
  }

  json report;
  report["name"] = cfg.name;
  report["system"] = res.sys.name();
  report["n"] = res.sys.state_dim();
  report["m"] = res.sys.input_dim();
  report["T"] = cfg.horizon;
  report["steps"] = cfg.steps;
  report["branch"] = to_string(sol.branch);
  report["flags"] = std::move(flags);
  report["boundary"] = {
      {"q0", bnd.q0 ? matrix_to_json(*bnd.q0) : json(nullptr)},
      {"pi0", matrix_to_json(bnd.pi0)},
      {"p0", matrix_to_json(bnd.p0)},
      {"q_infinite", bnd.q_infinite()},
      {"inner_min_abs_eig", bnd.inner_min_abs_eig},
      {"alternate_formula_gap", finite_or_null(bnd.alternate_discrepancy)},
  };
  report["residuals"] = {
      {"residual_0", finite_or_null(br.residual_0)},
      {"residual_T", finite_or_null(br.residual_T)},
      {"terminal_error", finite_or_null(br.terminal_error)},
      {"max_asymmetry", finite_or_null(br.max_asymmetry)},
      {"min_sigma_eig", finite_or_null(br.min_sigma_eig)},
      {"tol", br.tol},
      {"passed", br.passed},
  };
  report["iteration"] = {
      {"status", to_string(res.iteration.status)},
      {"iterations", res.iteration.iterations},
      {"last_change", finite_or_null(res.iteration.last_change)},
      {"q0_gap", finite_or_null(res.iteration_q_gap)},
      {"p0_gap", finite_or_null(res.iteration_p_gap)},
      {"breakdown_reason", res.iteration.breakdown_reason},
  };
  report["plus_branch"] = std::move(plus);
  report["controllability"] = {
      {"controllable", ctrl.controllable},
      {"lambda_min", ctrl.lambda_min},
      {"lambda_max", ctrl.lambda_max},
      {"margin", ctrl.lambda_min / std::max(1.0, ctrl.lambda_max)},
      {"rel_tol", ctrl.rel_tol},
  };
  report["max_gain_norm"] = res.max_gain_norm;
  report["expected_energy"] = schedule_energy(sol.grid, sol.gain_sched, sol.sigma_sched);
  return report;
}

json verify_report(const ProblemConfig& cfg, const SolveOutcome& res, bool& passed) {
  const auto& sol = res.minus;
  const auto& bnd = sol.boundary;
  const auto& sched = res.schedules;
  json checks = json::array();

  const BridgeReport br = verify_bridge(sol, cfg.sigma0, cfg.sigma_t, cfg.verify_tol);
  const double boundary_worst = std::max({br.residual_0, br.residual_T, br.terminal_error});
  checks.push_back(check("boundary_residuals", boundary_worst, cfg.verify_tol, br.passed));
  checks.push_back(check("sigma_positive", br.min_sigma_eig, 0.0, br.min_sigma_eig > 0.0));

  const double alt = bnd.alternate_discrepancy;
  checks.push_back(check("closed_form_vs_alternate", alt, kFormulaTol,
                         std::isfinite(alt) && alt <= kFormulaTol));

  if (bnd.q_infinite()) {
    // The fixed point sits at infinite Q(0); the iteration cannot reach it.
    json c = check("closed_form_vs_iteration", std::numeric_limits<double>::quiet_NaN(),
                   kCrossMethodTol, true);
    c["skipped"] = "Q(0) is infinite";
    checks.push_back(std::move(c));
  } else {
    const double gap = std::max(res.iteration_q_gap, res.iteration_p_gap);
    checks.push_back(check("closed_form_vs_iteration", gap, kCrossMethodTol,
                           res.iteration.converged() && gap <= kCrossMethodTol));
  }

  const bool plus_singular =
      res.plus && (!res.plus->singular_times.empty() || res.plus->escape_node.has_value());
  json plus_check = check("plus_branch_singular",
                          res.plus ? static_cast<double>(res.plus->singular_times.size()) : 0.0,
                          1.0, plus_singular);
  if (res.plus) plus_check["singular_times"] = crossings_json(res.plus->singular_times);
  checks.push_back(std::move(plus_check));

  const ClosedLoopTransition closed = closed_loop_transition(res.sys, sol.grid, sol.pi_sched);
  const Matrix y_star = closed.phi.back() * cfg.sigma0;
  double foc = std::numeric_limits<double>::infinity();
  try {
    foc = foc_residual(y_star, cfg.sigma0, cfg.sigma_t, sched.phi_T0(), sched.m_TT()).residual;
  } catch (const Error&) {
  }
  checks.push_back(check("foc_residual", foc, kFocTol, foc <= kFocTol));
  const double foc_inv = foc_inverse_form_residual(closed.phi.back(), cfg.sigma0, cfg.sigma_t,
                                                   sched.phi_T0(), sched.m_TT());
  checks.push_back(check("foc_inverse_form", foc_inv, kFocTol, foc_inv <= kFocTol));

  const ReciprocalReport rec = reciprocal_identity_residuals(res.sys, sched, sol, cfg.sigma0);
  checks.push_back(check("f_identities", rec.f_residual, kReciprocalTol,
                         rec.f_residual <= kReciprocalTol));
  const double drift = std::max(rec.drift_residual, rec.offset_residual);
  json drift_check = check("pinned_drift_equivalence", drift, kReciprocalTol, drift <= kReciprocalTol);
  drift_check["drift"] = rec.drift_residual;
  drift_check["offset"] = rec.offset_residual;
  drift_check["drift_literal_relative"] = finite_or_null(rec.drift_residual_literal);
  drift_check["offset_literal_relative"] = finite_or_null(rec.offset_residual_literal);
  drift_check["nodes_checked"] = rec.nodes_checked;
  checks.push_back(std::move(drift_check));

  const std::uint64_t seed = cfg.simulate ? cfg.simulate->seed : 42;
  const OptimalityReport opt = joint_optimality_check(y_star, cfg.sigma0, cfg.sigma_t,
                                                      sched.phi_T0(), sched.m_TT(),
                                                      kOptimalityTrials, seed);
  json opt_check = check("joint_optimality", opt.min_gap, -1e-10, opt.passed);
  opt_check["kl_optimal"] = opt.kl_optimal;
  opt_check["trials"] = opt.trials;
  opt_check["accepted"] = opt.accepted;
  checks.push_back(std::move(opt_check));

  passed = true;
  for (const auto& c : checks) passed = passed && c["passed"].get<bool>();

  json report = solve_report(cfg, res);
  report["checks"] = std::move(checks);
  report["passed"] = passed;
  return report;
}

int cmd_solve(const ProblemConfig& cfg, const RunOptions& opts, std::ostream& out) {
  const SolveOutcome res = solve_problem(cfg, opts);
  const auto dir = resolve_output_dir(cfg, opts);
  const auto& sol = res.minus;
  if (cfg.output.csv) {
    write_output(dir, "gain.csv", schedule_csv(sol.grid.nodes, sol.gain_sched, "K"));
    write_output(dir, "covariance.csv", schedule_csv(sol.grid.nodes, sol.sigma_sched, "S"));
  }
  if (cfg.output.json) {
    json sj;
    sj["t"] = sol.grid.nodes;
    sj["pi"] = schedule_to_json(sol.pi_sched);
    sj["sigma"] = schedule_to_json(sol.sigma_sched);
    sj["gain"] = schedule_to_json(sol.gain_sched);
    sj["p"] = schedule_to_json(sol.p_sched);
    sj["q"] = sol.has_q() ? schedule_to_json(sol.q_sched) : json(nullptr);
    write_output(dir, "schedules.json", sj.dump() + "\n");
  }
  const json report = solve_report(cfg, res);
  write_output(dir, "report.json", dump(report));
  out << "solved " << (cfg.name.empty() ? res.sys.name() : cfg.name) << " (" << cfg.steps
      << " steps); terminal error " << report["residuals"]["terminal_error"]
      << "; output in " << dir.string() << "\n";
  return static_cast<int>(ExitCode::ok);
}

int cmd_simulate(const ProblemConfig& cfg, const RunOptions& opts, std::ostream& out) {
  if (!cfg.simulate) {
    throw Error(ErrorKind::config_error, "simulate: config has no \"simulate\" block");
  }
  const SolveOutcome res = solve_problem(cfg, opts);
  const auto& spec = *cfg.simulate;
  SimConfig sim;
  sim.paths = spec.paths;
  sim.seed = spec.seed;
  sim.sim_steps = spec.sim_steps;
  sim.record_stride = spec.record_stride;
  sim.workers = std::max(1u, opts.workers);
  const PathEnsemble ens = simulate_bridge(res.sys, res.minus, cfg.sigma0, sim);

  const auto dir = resolve_output_dir(cfg, opts);
  const auto& sol = res.minus;
  if (cfg.output.csv) {
    write_output(dir, "paths.csv", paths_csv(ens, spec.display_paths));
    const std::size_t tube_stride = default_record_stride(sol.grid.steps);
    write_output(dir, "tube.csv",
                 tube_csv(sol.grid.nodes, sol.sigma_sched, cfg.output.tube_level, tube_stride));
  }

  json emp;
  emp["paths"] = ens.paths;
  emp["seed"] = ens.seed;
  emp["sim_steps"] = ens.sim_steps;
  emp["record_stride"] = spec.record_stride;
  emp["scheme"] = ens.scheme;
  const double expected = schedule_energy(sol.grid, sol.gain_sched, sol.sigma_sched);
  emp["energy_schedule"] = expected;
  if (ens.paths >= 2) {
    const Matrix cov = empirical_covariance(ens, ens.times.back());
    const double err = (cov - cfg.sigma_t).norm();
    const double tol = 4.0 * std::sqrt(2.0 / static_cast<double>(ens.paths)) * cfg.sigma_t.norm();
    const double energy = empirical_energy(ens);
    emp["terminal_covariance"] = matrix_to_json(cov);
    emp["target_covariance"] = matrix_to_json(cfg.sigma_t);
    emp["terminal_error"] = err;
    emp["terminal_tolerance"] = tol;
    emp["terminal_within_tolerance"] = err <= tol;
    emp["energy_empirical"] = energy;
    emp["energy_relative_gap"] =
        expected > 0.0 ? json(std::abs(energy - expected) / expected) : json(nullptr);
    out << "simulated " << ens.paths << " paths; terminal covariance error " << err
        << " (tolerance " << tol << ")\n";
  } else {
    out << "simulated " << ens.paths << " paths\n";
  }
  write_output(dir, "empirical.json", dump(emp));
  return static_cast<int>(ExitCode::ok);
}

int cmd_verify(const ProblemConfig& cfg, const RunOptions& opts, std::ostream& out) {
  const SolveOutcome res = solve_problem(cfg, opts);
  bool passed = false;
  const json report = verify_report(cfg, res, passed);
  const auto dir = resolve_output_dir(cfg, opts);
  write_output(dir, "report.json", dump(report));
  for (const auto& c : report["checks"]) {
    out << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>()
        << "  value=" << c["value"] << "  tol=" << c["tol"] << "\n";
  }
  if (res.minus.boundary.q0) {
    out << "Q(0) = " << report["boundary"]["q0"] << "\n";
  }
  out << (passed ? "verify: all checks passed" : "verify: FAILED") << "\n";
  return static_cast<int>(passed ? ExitCode::ok : ExitCode::verify_failed);
}

int cmd_scenario(const std::string& name, const RunOptions& opts, std::ostream& out) {
  if (name == "list") {
    for (const auto& s : scenario_catalog()) out << s.name << "\t" << s.description << "\n";
    return static_cast<int>(ExitCode::ok);
  }
  ProblemConfig cfg = scenario_config(name);
  if (opts.steps || opts.paths || opts.seed) {
    RunOptions numeric = opts;
    numeric.out.reset();
    apply_overrides(cfg, numeric);
  }
  const std::string text = config_to_json_text(cfg);
  if (opts.out) {
    const auto path = write_output(*opts.out, name + ".json", text);
    out << path.string() << "\n";
  } else {
    out << text;
  }
  return static_cast<int>(ExitCode::ok);
}

int run_command(const std::string& command, const std::string& argument, const RunOptions& opts,
                std::ostream& out, std::ostream& err) {
  try {
    if (command == "scenario") return cmd_scenario(argument, opts, out);
    ProblemConfig cfg = load_config_file(argument);
    apply_overrides(cfg, opts);
    if (command == "solve") return cmd_solve(cfg, opts, out);
    if (command == "simulate") return cmd_simulate(cfg, opts, out);
    if (command == "verify") return cmd_verify(cfg, opts, out);
    err << "error: unknown command \"" << command << "\"\n";
    return static_cast<int>(ExitCode::input_error);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace covbridge
