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
#ifndef COVBRIDGE_BRIDGE_SOLVER_HPP
#define COVBRIDGE_BRIDGE_SOLVER_HPP

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covbridge/linalg.hpp"
#include "covbridge/system_model.hpp"

namespace covbridge {

/// The two solutions of the coupled boundary problem. Only `minus` stays
/// nonsingular on [0, T] and yields the optimal steering.
enum class Branch { minus, plus };

const char* to_string(Branch branch) noexcept;

/// Marginals in coordinates where the drift vanishes and N(T, 0) = I.
struct NormalizedMarginals {
  Matrix s0;
  Matrix s_t;
};

/// S0 = N^{-1/2} Sigma0 N^{-1/2},  ST = N^{-1/2} Phi(0,T) SigmaT Phi(0,T)' N^{-1/2}.
/// Throws not_controllable if N(T, 0) is not SPD.
NormalizedMarginals normalized_marginals(const Matrix& sigma0, const Matrix& sigma_t,
                                         const Matrix& n_T0, const Matrix& phi_0T);

/// Boundary values Q(0), P(0) of the coupled Lyapunov pair.
///
/// `pi0` = Q(0)^{-1} is always finite. When the inner matrix of the closed
/// form is singular, Q(0) is infinite along its kernel; `q0` is then empty and
/// only `pi0` is meaningful.
struct BoundaryValues {
  Branch branch = Branch::minus;
  Matrix pi0;
  std::optional<Matrix> q0;
  Matrix p0;
  double inner_min_abs_eig = 0.0;
  /// Relative gap to the alternate closed form in M(T,0), Phi(T,0); NaN if
  /// not evaluated.
  double alternate_discrepancy = std::numeric_limits<double>::quiet_NaN();

  bool q_infinite() const { return !q0.has_value(); }
};

/// Inner matrices below this fraction of lambda_max(S0 + I/2) are singular.
inline constexpr double kInfiniteQThreshold = 1e-10;

BoundaryValues closed_form_boundary(const NormalizedMarginals& norm, const Matrix& n_T0,
                                    const Matrix& sigma0, Branch branch);

/// Q(0)^{-1} for the given branch from the closed form expressed through
/// the reachability gramian M(T,0) and Phi(T,0) rather than N(T,0).
Matrix alternate_boundary_pi(const Matrix& sigma0, const Matrix& sigma_t, const Matrix& phi_T0,
                             const Matrix& m_TT, Branch branch);

/// Closed form plus the alternate-formula cross-check, from system schedules.
BoundaryValues closed_form_boundary(const SystemSchedules& schedules, const Matrix& sigma0,
                                    const Matrix& sigma_t, Branch branch);

enum class IterationStatus { converged, max_iterations, breakdown };

const char* to_string(IterationStatus status) noexcept;

struct IterationResult {
  Matrix q0;
  Matrix p0;
  int iterations = 0;
  IterationStatus status = IterationStatus::max_iterations;
  double last_change = 0.0;
  /// Iterate index at which an intermediate inverse became singular.
  std::optional<int> breakdown_iteration;
  std::string breakdown_reason;

  bool converged() const { return status == IterationStatus::converged; }
};

/// Fixed-point map P(0) -> P(T) -> Q(T) -> Q(0) -> P(0). Stops when the
/// Frobenius change in P(0) drops below tol * max(1, ||P(0)||_F).
IterationResult boundary_via_iteration(const Matrix& sigma0, const Matrix& sigma_t,
                                       const Matrix& phi_T0, const Matrix& m_TT,
                                       const Matrix& init_p0, int max_iter = 500,
                                       double tol = 1e-12);

/// Escape threshold on ||Pi||_F.
inline constexpr double kEscapeNorm = 1e12;

/// RK4 schedule of Pi' = -A'Pi - Pi A + Pi B B' Pi.
///
/// Throws FiniteEscape when ||Pi||_F exceeds 1e12, a stage turns non-finite,
/// or one step more than doubles max(1, ||Pi||_F) (a pole inside the step).
Schedule integrate_pi(const LtvSystem& sys, const TimeGrid& grid, const Matrix& pi0);

enum class LyapunovSign { plus, minus };

/// RK4 schedule of X' = AX + XA' +/- BB'. `minus` propagates Q, `plus` P.
Schedule integrate_lyapunov(const LtvSystem& sys, const TimeGrid& grid, const Matrix& x0,
                            LyapunovSign sign);

/// RK4 schedule of Sigma' = A_Pi Sigma + Sigma A_Pi' + BB' with
/// A_Pi = A - B B' Pi. Throws numerical_failure if Sigma loses definiteness.
Schedule compute_sigma_schedule(const LtvSystem& sys, const TimeGrid& grid,
                                const Matrix& sigma0, const Schedule& pi_sched);

/// K(t_k) = B(t_k)' Pi(t_k); the control is u = -K x.
Schedule gain_schedule(const LtvSystem& sys, const TimeGrid& grid, const Schedule& pi_sched);

struct SingularCrossing {
  double time = 0.0;
  std::string which;
  double eigenvalue = 0.0;
  std::size_t node = 0;
};

/// Grid-bracketed zero crossings of eigenvalues of a symmetric schedule.
/// Each bracket [t_k, t_k+1] where the inertia changes yields one entry with
/// a linearly interpolated time and the eigenvalue at t_k.
std::vector<SingularCrossing> detect_branch_singularity(const TimeGrid& grid,
                                                        const Schedule& sched,
                                                        std::string_view which);

struct BridgeSolution {
  Branch branch = Branch::minus;
  TimeGrid grid;
  BoundaryValues boundary;
  Schedule pi_sched;
  Schedule q_sched;  // empty when Q(0) is infinite
  Schedule p_sched;
  Schedule sigma_sched;
  Schedule gain_sched;
  double residual_0 = 0.0;
  double residual_T = 0.0;
  std::vector<SingularCrossing> singular_times;
  /// Plus branch only: last node before the Riccati schedule escaped.
  std::optional<std::size_t> escape_node;

  bool has_q() const { return !q_sched.empty(); }
  bool admissible() const {
    return branch == Branch::minus && singular_times.empty() && !sigma_sched.empty();
  }
};

/// Full solve for one branch. The minus branch propagates Pi from the closed
/// form, then P (and Q when finite) as cross-checks, Sigma and the gain. The
/// plus branch propagates Q and P and reports where they turn singular.
BridgeSolution solve_bridge(const LtvSystem& sys, const SystemSchedules& schedules,
                            const Matrix& sigma0, const Matrix& sigma_t,
                            Branch branch = Branch::minus);

/// Rebuilds Sigma and the gain after scaling Pi by `factor`. Test hook for
/// checking that verification notices a wrong gain.
BridgeSolution with_scaled_gain(const LtvSystem& sys, const BridgeSolution& solution,
                                const Matrix& sigma0, double factor);

struct BridgeReport {
  double residual_0 = 0.0;
  double residual_T = 0.0;
  double terminal_error = 0.0;
  double max_asymmetry = 0.0;
  double min_sigma_eig = 0.0;
  double tol = 0.0;
  std::vector<SingularCrossing> singular_times;
  bool passed = false;
};

/// Boundary identities Sigma^{-1} = P^{-1} + Q^{-1} at both ends, Sigma(T)
/// against the target, symmetry and positivity of Sigma on the grid.
BridgeReport verify_bridge(const BridgeSolution& solution, const Matrix& sigma0,
                           const Matrix& sigma_t, double tol);

/// Trapezoid of trace(K Sigma K') over the grid: the expected control energy.
double schedule_energy(const TimeGrid& grid, const Schedule& gain_sched,
                       const Schedule& sigma_sched);

}  // namespace covbridge

#endif  // COVBRIDGE_BRIDGE_SOLVER_HPP
