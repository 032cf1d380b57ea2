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
#include "covbridge/bridge_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covbridge/errors.hpp"
#include "covbridge/ode.hpp"

namespace covbridge {

const char* to_string(Branch branch) noexcept {
  return branch == Branch::minus ? "minus" : "plus";
}

const char* to_string(IterationStatus status) noexcept {
  switch (status) {
    case IterationStatus::converged: return "converged";
    case IterationStatus::max_iterations: return "max-iterations";
    case IterationStatus::breakdown: return "breakdown";
  }
  return "unknown";
}

NormalizedMarginals normalized_marginals(const Matrix& sigma0, const Matrix& sigma_t,
                                         const Matrix& n_T0, const Matrix& phi_0T) {
  require_spd(sigma0, "Sigma0");
  require_spd(sigma_t, "SigmaT");
  if (n_T0.rows() != sigma0.rows() || !is_spd(n_T0, 1e-10)) {
    throw Error(ErrorKind::not_controllable,
                "controllability gramian N(T,0) is not positive definite");
  }
  const Matrix n_ihalf = inv_sqrtm_spd(n_T0);
  NormalizedMarginals out;
  out.s0 = symmetrize(n_ihalf * sigma0 * n_ihalf);
  // Both Phi(0,T) factors enter as a congruence, Phi Sigma_T Phi'.
  out.s_t = symmetrize(n_ihalf * phi_0T * sigma_t * phi_0T.transpose() * n_ihalf);
  return out;
}

BoundaryValues closed_form_boundary(const NormalizedMarginals& norm, const Matrix& n_T0,
                                    const Matrix& sigma0, Branch branch) {
  const auto n = norm.s0.rows();
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix s0_half = sqrtm_spd(norm.s0);
  const Matrix s0_ihalf = inv_sqrtm_spd(norm.s0);
  const Matrix root = sqrtm_spd(symmetrize(s0_half * norm.s_t * s0_half) + 0.25 * eye);
  const double sign = branch == Branch::minus ? -1.0 : 1.0;
  const Matrix inner = symmetrize(norm.s0 + 0.5 * eye + sign * root);

  const Matrix n_half = sqrtm_spd(n_T0);
  const Matrix n_ihalf = inv_sqrtm_spd(n_T0);

  BoundaryValues out;
  out.branch = branch;
  out.pi0 = symmetrize(n_ihalf * s0_ihalf * inner * s0_ihalf * n_ihalf);
  out.inner_min_abs_eig = min_abs_eigenvalue(inner);
  const double scale = lambda_max(norm.s0) + 0.5;
  if (out.inner_min_abs_eig > kInfiniteQThreshold * scale) {
    const Matrix inner_inv = checked_inverse(inner, "closed-form inner matrix");
    out.q0 = symmetrize(n_half * s0_half * inner_inv * s0_half * n_half);
  }
  const Matrix h0 = symmetrize(spd_inverse(sigma0, "Sigma0") - out.pi0);
  out.p0 = symmetrize(checked_inverse(h0, "Sigma0^{-1} - Q(0)^{-1}"));
  return out;
}

Matrix alternate_boundary_pi(const Matrix& sigma0, const Matrix& sigma_t, const Matrix& phi_T0,
                             const Matrix& m_TT, Branch branch) {
  const auto n = sigma0.rows();
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix m_inv = spd_inverse(m_TT, "M(T,0)");
  const Matrix s_half = sqrtm_spd(sigma0);
  const Matrix s_ihalf = inv_sqrtm_spd(sigma0);
  const Matrix g = m_inv * phi_T0 * s_half;
  const Matrix drift_term = symmetrize(g.transpose() * m_TT * g);
  const Matrix target_term = symmetrize(g.transpose() * sigma_t * g);
  const double sign = branch == Branch::minus ? -1.0 : 1.0;
  const Matrix inner = symmetrize(0.5 * eye + drift_term + sign * sqrtm_spd(0.25 * eye + target_term));
  return symmetrize(s_ihalf * inner * s_ihalf);
}

BoundaryValues closed_form_boundary(const SystemSchedules& schedules, const Matrix& sigma0,
                                    const Matrix& sigma_t, Branch branch) {
  if (!schedules.controllability.controllable) {
    std::ostringstream msg;
    msg << "system is not controllable on [0, T] (lambda_min(M(T,0)) = "
        << schedules.controllability.lambda_min << ")";
    throw Error(ErrorKind::not_controllable, msg.str());
  }
  const NormalizedMarginals norm =
      normalized_marginals(sigma0, sigma_t, schedules.n_T0(), schedules.phi_0T());
  BoundaryValues out = closed_form_boundary(norm, schedules.n_T0(), sigma0, branch);

  const Matrix alt_pi =
      alternate_boundary_pi(sigma0, sigma_t, schedules.phi_T0(), schedules.m_TT(), branch);
  if (out.q0) {
    const Matrix alt_q = checked_inverse(alt_pi, "alternate Q(0)");
    out.alternate_discrepancy = (alt_q - *out.q0).norm() / std::max(out.q0->norm(), 1e-300);
  } else {
    const double scale = std::max(out.pi0.norm(), spd_inverse(sigma0, "Sigma0").norm());
    out.alternate_discrepancy = (alt_pi - out.pi0).norm() / scale;
  }
  return out;
}

IterationResult boundary_via_iteration(const Matrix& sigma0, const Matrix& sigma_t,
                                       const Matrix& phi_T0, const Matrix& m_TT,
                                       const Matrix& init_p0, int max_iter, double tol) {
  require_spd(sigma0, "Sigma0");
  require_spd(sigma_t, "SigmaT");
  const Matrix sigma0_inv = spd_inverse(sigma0, "Sigma0");
  const Matrix sigma_t_inv = spd_inverse(sigma_t, "SigmaT");
  const Matrix phi_inv = checked_inverse(phi_T0, "Phi(T,0)");

  IterationResult out;
  out.p0 = symmetrize(init_p0);
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    try {
      const Matrix p_t = symmetrize(phi_T0 * out.p0 * phi_T0.transpose() + m_TT);
      const Matrix q_t =
          checked_inverse(symmetrize(sigma_t_inv - checked_inverse(p_t, "P(T)")), "Q(T)");
      out.q0 = symmetrize(phi_inv * (q_t + m_TT) * phi_inv.transpose());
      const Matrix next = symmetrize(
          checked_inverse(symmetrize(sigma0_inv - checked_inverse(out.q0, "Q(0)")), "P(0)"));
      out.last_change = (next - out.p0).norm();
      out.p0 = next;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numerical_failure) throw;
      out.status = IterationStatus::breakdown;
      out.breakdown_iteration = it;
      out.breakdown_reason = e.what();
      return out;
    }
    if (out.last_change < tol * std::max(1.0, out.p0.norm())) {
      out.status = IterationStatus::converged;
      return out;
    }
  }
  out.status = IterationStatus::max_iterations;
  return out;
}

Schedule integrate_pi(const LtvSystem& sys, const TimeGrid& grid, const Matrix& pi0) {
  require_matching_horizon(sys, grid);
  if (pi0.rows() != sys.state_dim() || relative_asymmetry(pi0) > 1e-10) {
    throw Error(ErrorKind::invalid_argument, "integrate_pi: Pi(0) must be symmetric n x n");
  }
  auto rhs = [&sys](double t, const Matrix& pi) -> Matrix {
    const Matrix a = sys.a(t);
    const Matrix b = sys.b(t);
    const Matrix pb = pi * b;
    return -a.transpose() * pi - pi * a + pb * pb.transpose();
  };
  const double h = grid.dt();
  Schedule out;
  out.reserve(grid.size());
  out.push_back(symmetrize(pi0));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    const Matrix& current = out.back();
    Matrix next = symmetrize(rk4_step(rhs, grid.nodes[k], current, h));
    const double jump = (next - current).norm();
    if (!next.allFinite() || next.norm() > kEscapeNorm ||
        !(jump <= std::max(1.0, current.norm()))) {
      std::ostringstream msg;
      msg << "Riccati solution escapes after t = " << grid.nodes[k];
      throw FiniteEscape(k, grid.nodes[k], msg.str());
    }
    out.push_back(std::move(next));
  }
  return out;
}

Schedule integrate_lyapunov(const LtvSystem& sys, const TimeGrid& grid, const Matrix& x0,
                            LyapunovSign sign) {
  require_matching_horizon(sys, grid);
  if (x0.rows() != sys.state_dim() || relative_asymmetry(x0) > 1e-10) {
    throw Error(ErrorKind::invalid_argument, "integrate_lyapunov: X(0) must be symmetric n x n");
  }
  const double s = sign == LyapunovSign::plus ? 1.0 : -1.0;
  auto rhs = [&sys, s](double t, const Matrix& x) -> Matrix {
    const Matrix a = sys.a(t);
    const Matrix b = sys.b(t);
    return a * x + x * a.transpose() + s * (b * b.transpose());
  };
  const double h = grid.dt();
  Schedule out;
  out.reserve(grid.size());
  out.push_back(symmetrize(x0));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    out.push_back(symmetrize(rk4_step(rhs, grid.nodes[k], out.back(), h)));
  }
  return out;
}

Schedule compute_sigma_schedule(const LtvSystem& sys, const TimeGrid& grid,
                                const Matrix& sigma0, const Schedule& pi_sched) {
  require_matching_horizon(sys, grid);
  require_spd(sigma0, "Sigma0");
  if (pi_sched.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "compute_sigma_schedule: Pi schedule does not match grid");
  }
  const NodeInterpolant pi_at(grid, pi_sched);
  auto rhs = [&sys, &pi_at](double t, const Matrix& sigma) -> Matrix {
    const Matrix b = sys.b(t);
    const Matrix closed = sys.a(t) - b * (b.transpose() * pi_at(t));
    return closed * sigma + sigma * closed.transpose() + b * b.transpose();
  };
  const double h = grid.dt();
  Schedule out;
  out.reserve(grid.size());
  out.push_back(symmetrize(sigma0));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    Matrix next = symmetrize(rk4_step(rhs, grid.nodes[k], out.back(), h));
    Eigen::LLT<Matrix> llt(next);
    if (!next.allFinite() || llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "state covariance lost positive definiteness at t = " << grid.nodes[k + 1];
      throw Error(ErrorKind::numerical_failure, msg.str());
    }
    out.push_back(std::move(next));
  }
  return out;
}

Schedule gain_schedule(const LtvSystem& sys, const TimeGrid& grid, const Schedule& pi_sched) {
  require_matching_horizon(sys, grid);
  if (pi_sched.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "gain_schedule: Pi schedule does not match grid");
  }
  Schedule out;
  out.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.push_back(sys.b(grid.nodes[k]).transpose() * pi_sched[k]);
  }
  return out;
}

std::vector<SingularCrossing> detect_branch_singularity(const TimeGrid& grid,
                                                        const Schedule& sched,
                                                        std::string_view which) {
  if (sched.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "detect_branch_singularity: schedule does not match grid");
  }
  std::vector<SingularCrossing> out;
  if (sched.empty()) return out;
  Vector prev = symmetric_eigenvalues(sched.front());
  for (std::size_t k = 0; k + 1 < sched.size(); ++k) {
    const Vector next = symmetric_eigenvalues(sched[k + 1]);
    for (Eigen::Index i = 0; i < prev.size(); ++i) {
      const bool was_negative = prev[i] < 0.0;
      const bool is_negative = next[i] < 0.0;
      if (was_negative == is_negative) continue;
      const double frac = prev[i] / (prev[i] - next[i]);
      SingularCrossing c;
      c.time = grid.nodes[k] + frac * (grid.nodes[k + 1] - grid.nodes[k]);
      c.which = std::string(which);
      c.eigenvalue = prev[i];
      c.node = k;
      out.push_back(std::move(c));
    }
    prev = next;
  }
  return out;
}

namespace {

// ||Sigma^{-1} - P^{-1} - Pi|| with Pi = Q^{-1}.
double boundary_residual(const Matrix& sigma, const Matrix& p, const Matrix& pi) {
  return (spd_inverse(sigma, "Sigma") - checked_inverse(p, "P") - pi).norm();
}

void finish_minus_branch(const LtvSystem& sys, const Matrix& sigma0, const Matrix& sigma_t,
                         BridgeSolution& out) {
  out.sigma_sched = compute_sigma_schedule(sys, out.grid, sigma0, out.pi_sched);
  out.gain_sched = gain_schedule(sys, out.grid, out.pi_sched);
  out.residual_0 = boundary_residual(sigma0, out.p_sched.front(), out.pi_sched.front());
  out.residual_T = boundary_residual(sigma_t, out.p_sched.back(), out.pi_sched.back());
}

}  // namespace

BridgeSolution solve_bridge(const LtvSystem& sys, const SystemSchedules& schedules,
                            const Matrix& sigma0, const Matrix& sigma_t, Branch branch) {
  require_matching_horizon(sys, schedules.grid);
  if (sigma0.rows() != sys.state_dim() || sigma_t.rows() != sys.state_dim()) {
    throw Error(ErrorKind::invalid_argument, "marginal covariances must be n x n");
  }
  BridgeSolution out;
  out.branch = branch;
  out.grid = schedules.grid;
  out.boundary = closed_form_boundary(schedules, sigma0, sigma_t, branch);

  out.p_sched = integrate_lyapunov(sys, out.grid, out.boundary.p0, LyapunovSign::plus);
  if (out.boundary.q0) {
    out.q_sched = integrate_lyapunov(sys, out.grid, *out.boundary.q0, LyapunovSign::minus);
  }

  if (branch == Branch::minus) {
    out.pi_sched = integrate_pi(sys, out.grid, out.boundary.pi0);
    finish_minus_branch(sys, sigma0, sigma_t, out);
  } else {
    try {
      out.pi_sched = integrate_pi(sys, out.grid, out.boundary.pi0);
    } catch (const FiniteEscape& e) {
      out.escape_node = e.last_valid_node();
    }
    out.residual_0 = boundary_residual(sigma0, out.p_sched.front(), out.boundary.pi0);
    try {
      const Matrix pi_t = checked_inverse(out.q_sched.back(), "Q(T)");
      out.residual_T = boundary_residual(sigma_t, out.p_sched.back(), pi_t);
    } catch (const Error&) {
      out.residual_T = std::numeric_limits<double>::quiet_NaN();
    }
  }

  if (out.has_q()) {
    auto q_cross = detect_branch_singularity(out.grid, out.q_sched, "Q");
    out.singular_times.insert(out.singular_times.end(), q_cross.begin(), q_cross.end());
  }
  auto p_cross = detect_branch_singularity(out.grid, out.p_sched, "P");
  out.singular_times.insert(out.singular_times.end(), p_cross.begin(), p_cross.end());
  return out;
}

BridgeSolution with_scaled_gain(const LtvSystem& sys, const BridgeSolution& solution,
                                const Matrix& sigma0, double factor) {
  if (solution.pi_sched.size() != solution.grid.size()) {
    throw Error(ErrorKind::invalid_argument, "with_scaled_gain: solution has no Pi schedule");
  }
  BridgeSolution out = solution;
  for (auto& pi : out.pi_sched) pi *= factor;
  out.sigma_sched = compute_sigma_schedule(sys, out.grid, sigma0, out.pi_sched);
  out.gain_sched = gain_schedule(sys, out.grid, out.pi_sched);
  out.residual_0 = boundary_residual(sigma0, out.p_sched.front(), out.pi_sched.front());
  out.residual_T = std::numeric_limits<double>::quiet_NaN();
  return out;
}

BridgeReport verify_bridge(const BridgeSolution& solution, const Matrix& sigma0,
                           const Matrix& sigma_t, double tol) {
  BridgeReport report;
  report.tol = tol;
  report.singular_times = solution.singular_times;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.residual_0 = report.residual_T = report.terminal_error = nan;
  report.max_asymmetry = report.min_sigma_eig = nan;

  const bool complete = solution.pi_sched.size() == solution.grid.size() &&
                        solution.p_sched.size() == solution.grid.size() &&
                        solution.sigma_sched.size() == solution.grid.size();
  if (!complete) {
    report.passed = false;
    return report;
  }
  report.residual_0 =
      boundary_residual(sigma0, solution.p_sched.front(), solution.pi_sched.front());
  report.residual_T = boundary_residual(sigma_t, solution.p_sched.back(), solution.pi_sched.back());
  report.terminal_error = (solution.sigma_sched.back() - sigma_t).norm();
  report.max_asymmetry = 0.0;
  report.min_sigma_eig = std::numeric_limits<double>::infinity();
  for (const auto& s : solution.sigma_sched) {
    report.max_asymmetry = std::max(report.max_asymmetry, (s - s.transpose()).norm());
    report.min_sigma_eig = std::min(report.min_sigma_eig, lambda_min(s));
  }
  report.passed = solution.branch == Branch::minus && solution.singular_times.empty() &&
                  report.residual_0 <= tol && report.residual_T <= tol &&
                  report.terminal_error <= tol && report.max_asymmetry <= tol &&
                  report.min_sigma_eig > 0.0;
  return report;
}

double schedule_energy(const TimeGrid& grid, const Schedule& gain_sched,
                       const Schedule& sigma_sched) {
  if (gain_sched.size() != grid.size() || sigma_sched.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "schedule_energy: schedules do not match grid");
  }
  double total = 0.0;
  double prev = (gain_sched[0] * sigma_sched[0] * gain_sched[0].transpose()).trace();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = (gain_sched[k] * sigma_sched[k] * gain_sched[k].transpose()).trace();
    total += 0.5 * (prev + cur) * (grid.nodes[k] - grid.nodes[k - 1]);
    prev = cur;
  }
  return total;
}

}  // namespace covbridge
