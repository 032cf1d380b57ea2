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
#include "covbridge/entropy_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "covbridge/errors.hpp"
#include "covbridge/ode.hpp"

namespace covbridge {

double gaussian_kl(const Matrix& sigma, const Matrix& s) {
  if (sigma.rows() != s.rows()) {
    throw Error(ErrorKind::invalid_argument, "gaussian_kl: dimension mismatch");
  }
  require_spd(sigma, "gaussian_kl: sigma");
  require_spd(s, "gaussian_kl: s");
  const Eigen::LLT<Matrix> llt(symmetrize(s));
  const double trace_term = llt.solve(symmetrize(sigma)).trace();
  const double n = static_cast<double>(sigma.rows());
  return 0.5 * (logdet_spd(s) - logdet_spd(sigma) + trace_term - n);
}

JointCovariance prior_joint(const Matrix& sigma0, const Matrix& phi_T0, const Matrix& m_TT) {
  require_spd(sigma0, "Sigma0");
  const auto n = sigma0.rows();
  if (phi_T0.rows() != n || phi_T0.cols() != n || m_TT.rows() != n || m_TT.cols() != n) {
    throw Error(ErrorKind::invalid_argument, "prior_joint: dimension mismatch");
  }
  JointCovariance out;
  out.value.resize(2 * n, 2 * n);
  out.value.topLeftCorner(n, n) = sigma0;
  out.value.topRightCorner(n, n) = sigma0 * phi_T0.transpose();
  out.value.bottomLeftCorner(n, n) = phi_T0 * sigma0;
  out.value.bottomRightCorner(n, n) = symmetrize(phi_T0 * sigma0 * phi_T0.transpose() + m_TT);
  out.value = symmetrize(out.value);
  const double scale = std::max(1.0, out.value.norm());
  if (lambda_min(out.value) < -1e-10 * scale) {
    throw Error(ErrorKind::invalid_argument, "prior_joint: joint covariance is not PSD");
  }
  return out;
}

JointCovariance coupling_joint(const Matrix& sigma0, const Matrix& sigma_t, const Matrix& y) {
  const auto n = sigma0.rows();
  JointCovariance out;
  out.value.resize(2 * n, 2 * n);
  out.value.topLeftCorner(n, n) = sigma0;
  out.value.topRightCorner(n, n) = y.transpose();
  out.value.bottomLeftCorner(n, n) = y;
  out.value.bottomRightCorner(n, n) = sigma_t;
  return out;
}

ClosedLoopTransition closed_loop_transition(const LtvSystem& sys, const TimeGrid& grid,
                                            const Schedule& pi_sched) {
  require_matching_horizon(sys, grid);
  if (pi_sched.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "closed_loop_transition: Pi schedule does not match grid");
  }
  const NodeInterpolant pi_at(grid, pi_sched);
  auto rhs = [&sys, &pi_at](double t, const Matrix& phi) -> Matrix {
    const Matrix b = sys.b(t);
    return (sys.a(t) - b * (b.transpose() * pi_at(t))) * phi;
  };
  const int n = sys.state_dim();
  const Matrix eye = Matrix::Identity(n, n);
  ClosedLoopTransition out;
  out.phi.reserve(grid.size());
  out.phi.push_back(eye);
  for (std::size_t k = 0; k < grid.steps; ++k) {
    out.phi.push_back(rk4_step(rhs, grid.nodes[k], out.phi.back(), grid.dt()));
  }
  out.phi_inv.reserve(grid.size());
  for (const auto& phi : out.phi) {
    out.phi_inv.push_back(checked_inverse(phi, "closed-loop transition"));
  }
  return out;
}

FocResult foc_residual(const Matrix& y, const Matrix& sigma0, const Matrix& sigma_t,
                       const Matrix& phi_T0, const Matrix& m_TT) {
  require_spd(sigma0, "Sigma0");
  require_spd(sigma_t, "SigmaT");
  const Matrix sigma0_inv = spd_inverse(sigma0, "Sigma0");
  const Matrix schur = symmetrize(sigma_t - y * sigma0_inv * y.transpose());
  Eigen::LLT<Matrix> llt(schur);
  if (llt.info() != Eigen::Success || lambda_min(schur) <= 0.0) {
    std::ostringstream msg;
    msg << "coupling is infeasible: lambda_min(SigmaT - Y Sigma0^{-1} Y') = " << lambda_min(schur);
    throw Error(ErrorKind::infeasible_coupling, msg.str());
  }
  const Matrix m_inv = spd_inverse(m_TT, "M(T,0)");
  const Matrix drift_term = phi_T0.transpose() * m_inv;
  const Matrix schur_inv = llt.solve(Matrix::Identity(schur.rows(), schur.cols()));
  FocResult out;
  out.residual = (sigma0_inv * y.transpose() * schur_inv - drift_term).norm();
  out.objective = logdet_spd(schur) + 2.0 * (drift_term * y).trace();
  return out;
}

double foc_inverse_form_residual(const Matrix& phi_q_T0, const Matrix& sigma0,
                                 const Matrix& sigma_t, const Matrix& phi_T0,
                                 const Matrix& m_TT) {
  const Matrix phi_q_0T = checked_inverse(phi_q_T0, "PhiQ(T,0)");
  const Matrix phi_0T = checked_inverse(phi_T0, "Phi(T,0)");
  const Matrix s_t = phi_T0 * sigma0 * phi_T0.transpose() + m_TT;
  const Matrix lhs = sigma_t * phi_q_0T.transpose() - phi_q_T0 * sigma0;
  const Matrix rhs = s_t * phi_0T.transpose() - phi_T0 * sigma0;
  return (lhs - rhs).norm();
}

ReciprocalReport reciprocal_identity_residuals(const LtvSystem& sys,
                                               const SystemSchedules& schedules,
                                               const BridgeSolution& solution,
                                               const Matrix& sigma0) {
  const TimeGrid& grid = solution.grid;
  require_matching_horizon(sys, grid);
  if (solution.branch != Branch::minus || solution.pi_sched.size() != grid.size() ||
      solution.sigma_sched.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "reciprocal identities need a minus-branch solution");
  }
  if (schedules.phi.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "reciprocal identities: schedules do not match grid");
  }
  const ClosedLoopTransition closed = closed_loop_transition(sys, grid, solution.pi_sched);
  const NodeInterpolant pi_at(grid, solution.pi_sched);
  const int n = sys.state_dim();
  const double h = grid.dt();

  // R1 for the prior drift, R2 for the closed-loop drift; both vanish at T.
  auto r1_rhs = [&sys](double t, const Matrix& r) -> Matrix {
    const Matrix a = sys.a(t);
    const Matrix b = sys.b(t);
    return a * r + r * a.transpose() - b * b.transpose();
  };
  auto r2_rhs = [&sys, &pi_at](double t, const Matrix& r) -> Matrix {
    const Matrix b = sys.b(t);
    const Matrix closed_a = sys.a(t) - b * (b.transpose() * pi_at(t));
    return closed_a * r + r * closed_a.transpose() - b * b.transpose();
  };
  Schedule r1(grid.size());
  Schedule r2(grid.size());
  r1[grid.steps] = Matrix::Zero(n, n);
  r2[grid.steps] = Matrix::Zero(n, n);
  for (std::size_t k = grid.steps; k > 0; --k) {
    r1[k - 1] = symmetrize(rk4_step(r1_rhs, grid.nodes[k], r1[k], -h));
    r2[k - 1] = symmetrize(rk4_step(r2_rhs, grid.nodes[k], r2[k], -h));
  }

  ReciprocalReport out;
  out.f3_evaluated = solution.has_q();
  const Matrix& phi_T0 = schedules.phi_T0();
  const Matrix& phi_q_T0 = closed.phi.back();
  const std::size_t last = grid.steps > kEndpointExclusion ? grid.steps - kEndpointExclusion : 0;
  for (std::size_t k = 0; k < last; ++k) {
    const Matrix& phi = schedules.phi[k];
    const Matrix& phi_inv = schedules.phi_inv[k];
    const Matrix& phi_q_inv = closed.phi_inv[k];
    const Matrix s_t = phi * sigma0 * phi.transpose() + schedules.m_gram[k];

    const Matrix f1 = solution.sigma_sched[k] * phi_q_inv.transpose() - closed.phi[k] * sigma0;
    const Matrix f2 = s_t * phi_inv.transpose() - phi * sigma0;
    const double f12 = (f1 - f2).norm();
    double f23 = 0.0;
    if (out.f3_evaluated) {
      const Matrix f3 = solution.q_sched[k] * (phi_q_inv.transpose() - phi_inv.transpose());
      f23 = (f2 - f3).norm();
    }
    out.f12 = std::max(out.f12, f12);
    out.f23 = std::max(out.f23, f23);
    out.f_residual = std::max(out.f_residual, f12 + f23);

    const Matrix& pi = solution.pi_sched[k];
    out.drift_residual = std::max(out.drift_residual, (r1[k] + r1[k] * pi * r2[k] - r2[k]).norm());
    const Matrix phi_Tt = phi_T0 * phi_inv;
    const Matrix phi_q_Tt = phi_q_T0 * phi_q_inv;
    out.offset_residual = std::max(out.offset_residual, (phi_Tt * r1[k] - phi_q_Tt * r2[k]).norm());

    try {
      const Matrix b = sys.b(grid.nodes[k]);
      const Matrix bb = b * b.transpose();
      const Matrix r1_inv = checked_inverse(r1[k], "R1");
      const Matrix r2_inv = checked_inverse(r2[k], "R2");
      const Matrix lhs = bb * r1_inv;
      const double drift_lit = (lhs - bb * pi - bb * r2_inv).norm() / std::max(lhs.norm(), 1e-300);
      const Matrix phi_tT = phi * schedules.phi_0T();
      const Matrix phi_q_tT = closed.phi[k] * closed.phi_inv.back();
      const Matrix off = r1_inv * phi_tT;
      const double offset_lit = (off - r2_inv * phi_q_tT).norm() / std::max(off.norm(), 1e-300);
      out.drift_residual_literal = std::max(out.drift_residual_literal, drift_lit);
      out.offset_residual_literal = std::max(out.offset_residual_literal, offset_lit);
    } catch (const Error&) {
      out.drift_residual_literal = std::numeric_limits<double>::infinity();
      out.offset_residual_literal = std::numeric_limits<double>::infinity();
    }
    ++out.nodes_checked;
  }
  return out;
}

OptimalityReport joint_optimality_check(const Matrix& y_star, const Matrix& sigma0,
                                        const Matrix& sigma_t, const Matrix& phi_T0,
                                        const Matrix& m_TT, int trials, std::uint64_t seed,
                                        double epsilon) {
  constexpr double kFeasibilityMargin = 1e-6;
  constexpr double kSlack = 1e-10;
  const JointCovariance prior = prior_joint(sigma0, phi_T0, m_TT);
  const Matrix sigma0_inv = spd_inverse(sigma0, "Sigma0");
  auto feasible = [&](const Matrix& y) {
    return lambda_min(symmetrize(sigma_t - y * sigma0_inv * y.transpose())) >= kFeasibilityMargin;
  };
  auto joint_kl = [&](const Matrix& y) {
    return gaussian_kl(symmetrize(coupling_joint(sigma0, sigma_t, y).value), prior.value);
  };

  OptimalityReport out;
  out.kl_optimal = joint_kl(y_star);
  out.min_gap = std::numeric_limits<double>::infinity();
  out.trials = trials;

  const auto n = sigma0.rows();
  const double scale = std::sqrt(lambda_max(sigma0) * lambda_max(sigma_t));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> log_eps(-4.0, -1.0);
  for (int trial = 0; trial < trials; ++trial) {
    Matrix delta(n, n);
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = normal(rng);
    delta /= delta.norm();
    double eps = epsilon >= 0.0 ? epsilon : scale * std::pow(10.0, log_eps(rng));
    Matrix y = y_star + eps * delta;
    int halvings = 0;
    while (!feasible(y) && halvings < 60) {
      eps *= 0.5;
      y = y_star + eps * delta;
      ++halvings;
    }
    if (!feasible(y)) continue;
    ++out.accepted;
    out.min_gap = std::min(out.min_gap, joint_kl(y) - out.kl_optimal);
  }
  out.passed = out.accepted > 0 && out.min_gap >= -kSlack;
  return out;
}

}  // namespace covbridge
