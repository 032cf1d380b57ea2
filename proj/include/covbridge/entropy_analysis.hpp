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
#ifndef COVBRIDGE_ENTROPY_ANALYSIS_HPP
#define COVBRIDGE_ENTROPY_ANALYSIS_HPP

#include <cstdint>

#include "covbridge/bridge_solver.hpp"
#include "covbridge/linalg.hpp"
#include "covbridge/system_model.hpp"

namespace covbridge {

/// Relative entropy D(N(0, sigma) || N(0, s)) in nats:
///   1/2 log det s - 1/2 log det sigma + 1/2 tr(s^{-1} sigma) - n/2.
double gaussian_kl(const Matrix& sigma, const Matrix& s);

/// Covariance of (x(0), x(T)) as a 2n x 2n block matrix [[Sa, Y'], [Y, Sb]].
struct JointCovariance {
  Matrix value;

  Eigen::Index dim() const { return value.rows() / 2; }
  Matrix initial() const { return value.topLeftCorner(dim(), dim()); }
  Matrix terminal() const { return value.bottomRightCorner(dim(), dim()); }
  Matrix cross() const { return value.bottomLeftCorner(dim(), dim()); }
};

/// Joint of the uncontrolled process started from N(0, Sigma0):
/// [[Sigma0, Sigma0 Phi'], [Phi Sigma0, Phi Sigma0 Phi' + M]].
JointCovariance prior_joint(const Matrix& sigma0, const Matrix& phi_T0, const Matrix& m_TT);

/// [[Sigma0, Y'], [Y, SigmaT]].
JointCovariance coupling_joint(const Matrix& sigma0, const Matrix& sigma_t, const Matrix& y);

/// Transition matrix of the closed-loop drift A - BB'Pi on the grid.
struct ClosedLoopTransition {
  Schedule phi;
  Schedule phi_inv;
};

ClosedLoopTransition closed_loop_transition(const LtvSystem& sys, const TimeGrid& grid,
                                            const Schedule& pi_sched);

struct FocResult {
  /// || Sigma0^{-1} Y' (SigmaT - Y Sigma0^{-1} Y')^{-1} - Phi' M^{-1} ||_F
  double residual = 0.0;
  /// f(Y) = log det(SigmaT - Y Sigma0^{-1} Y') + 2 tr(Phi' M^{-1} Y)
  double objective = 0.0;
};

/// Stationarity of the joint-entropy objective in the cross covariance Y.
/// Throws infeasible_coupling unless the Schur complement is SPD.
FocResult foc_residual(const Matrix& y, const Matrix& sigma0, const Matrix& sigma_t,
                       const Matrix& phi_T0, const Matrix& m_TT);

/// The same condition after inverting both sides:
/// || SigmaT PhiQ(0,T)' - PhiQ(T,0) Sigma0 - (S_T Phi(0,T)' - Phi(T,0) Sigma0) ||_F
double foc_inverse_form_residual(const Matrix& phi_q_T0, const Matrix& sigma0,
                                 const Matrix& sigma_t, const Matrix& phi_T0,
                                 const Matrix& m_TT);

struct ReciprocalReport {
  /// max_t ||F1 - F2||_F + ||F2 - F3||_F (second term only when Q is finite).
  double f_residual = 0.0;
  double f12 = 0.0;
  double f23 = 0.0;
  bool f3_evaluated = false;
  /// max_t || R1 + R1 Pi R2 - R2 ||_F: drift identity with denominators cleared.
  double drift_residual = 0.0;
  /// max_t || Phi(T,t) R1 - PhiQ(T,t) R2 ||_F: offset identity likewise.
  double offset_residual = 0.0;
  /// Literal forms, relative to ||B B' R1^{-1}||_F and ||R1^{-1} Phi(t,T)||_F.
  /// Informational; they lose precision as R -> 0 near T.
  double drift_residual_literal = 0.0;
  double offset_residual_literal = 0.0;
  std::size_t nodes_checked = 0;
};

/// Node nearest T that the reciprocal residuals still include: within two
/// steps of T the pinning matrices vanish.
inline constexpr std::size_t kEndpointExclusion = 2;

/// Checks that the bridge shares pinned processes with the prior, and the
/// F1 = F2 = F3 identities, on interior nodes.
ReciprocalReport reciprocal_identity_residuals(const LtvSystem& sys,
                                               const SystemSchedules& schedules,
                                               const BridgeSolution& solution,
                                               const Matrix& sigma0);

struct OptimalityReport {
  double kl_optimal = 0.0;
  /// min over trials of KL(perturbed) - KL(optimal).
  double min_gap = 0.0;
  int trials = 0;
  int accepted = 0;
  bool passed = false;
};

/// Perturbs Y* = PhiQ(T,0) Sigma0 along random directions, keeping
/// lambda_min(SigmaT - Y Sigma0^{-1} Y') >= 1e-6, and checks the joint KL to
/// the prior never drops more than 1e-10 below the value at Y*.
/// `epsilon` fixes the step size; a negative value draws it per trial.
OptimalityReport joint_optimality_check(const Matrix& y_star, const Matrix& sigma0,
                                        const Matrix& sigma_t, const Matrix& phi_T0,
                                        const Matrix& m_TT, int trials, std::uint64_t seed,
                                        double epsilon = -1.0);

}  // namespace covbridge

#endif  // COVBRIDGE_ENTROPY_ANALYSIS_HPP
