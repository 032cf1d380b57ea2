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
#ifndef COVBRIDGE_SYSTEM_MODEL_HPP
#define COVBRIDGE_SYSTEM_MODEL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "covbridge/linalg.hpp"

namespace covbridge {

/// Uniform discretization of [0, T]; nodes[k] = k T / steps.
struct TimeGrid {
  double horizon = 0.0;
  std::size_t steps = 0;
  std::vector<double> nodes;

  double dt() const { return horizon / static_cast<double>(steps); }
  std::size_t size() const { return nodes.size(); }
  double front() const { return nodes.front(); }
  double back() const { return nodes.back(); }
};

/// Throws invalid_argument unless horizon > 0 and steps >= 2.
TimeGrid build_time_grid(double horizon, std::int64_t steps);

enum class SystemKind { constant, scenario, table };

const char* to_string(SystemKind kind) noexcept;

/// Row of a piecewise-constant system table; active on [t, next t).
struct TableEntry {
  double t = 0.0;
  Matrix a;
  Matrix b;
};

/// Linear time-varying system dx = A(t) x dt + B(t) (u dt + dw) on [0, T].
class LtvSystem {
 public:
  using Provider = std::function<Matrix(double)>;

  LtvSystem(int n, int m, double horizon, Provider a, Provider b, SystemKind kind,
            std::string name);

  static LtvSystem constant(const Matrix& a, const Matrix& b, double horizon);

  /// Double integrator driven by white acceleration: x' = v, v' = u + w.
  static LtvSystem inertial(double horizon);

  /// Series RLC circuit with a Nyquist-Johnson noise source, state (i_L, v_C).
  static LtvSystem rlc(double horizon, double resistance = 1.0, double inductance = 1.0,
                       double capacitance = 1.0);

  /// Scalar Brownian motion, A = 0 and B = 1.
  static LtvSystem brownian_scalar(double horizon);

  /// Left-closed interval lookup into a table sorted by time; the first row
  /// must start at t = 0.
  static LtvSystem piecewise_constant(std::vector<TableEntry> table, double horizon);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  double horizon() const { return horizon_; }
  SystemKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  // Unchecked evaluation for integrators; t must lie in [0, T].
  Matrix a(double t) const { return a_(t); }
  Matrix b(double t) const { return b_(t); }

 private:
  int n_;
  int m_;
  double horizon_;
  Provider a_;
  Provider b_;
  SystemKind kind_;
  std::string name_;
};

struct SystemMatrices {
  Matrix a;
  Matrix b;
};

/// Checked evaluation: out_of_range outside [0, T], numerical_failure on a
/// provider returning the wrong shape.
SystemMatrices eval_system(const LtvSystem& sys, double t);

/// Phi(t_k, 0) and Phi(0, t_k) on every node.
struct TransitionSchedule {
  Schedule phi;
  Schedule phi_inv;
};

/// RK4 integration of dPhi/dt = A Phi; inverses by LU solves against Phi.
TransitionSchedule compute_transition(const LtvSystem& sys, const TimeGrid& grid);

/// Reachability gramian M(t_k, 0) and controllability gramian N(T, t_k).
struct Gramians {
  Schedule m_gram;
  Schedule n_gram;
};

/// M(t_k, 0) from the Lyapunov ODE P' = AP + PA' + BB', P(0) = 0.
/// N(T, t_k) = Phi(t_k, 0) [N(T, 0) - N(t_k, 0)] Phi(t_k, 0)' with
/// N(t, 0) = Phi(0, t) M(t, 0) Phi(0, t)'.
Gramians compute_gramians(const LtvSystem& sys, const TimeGrid& grid,
                          const TransitionSchedule& transition);

struct ControllabilityReport {
  bool controllable = false;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double rel_tol = 0.0;
};

/// controllable iff lambda_min(M) > rel_tol * max(1, lambda_max(M)).
ControllabilityReport check_controllability(const Matrix& m_tt, double rel_tol = 1e-10);

/// Everything the boundary solve needs from the open-loop system.
struct SystemSchedules {
  TimeGrid grid;
  Schedule phi;
  Schedule phi_inv;
  Schedule m_gram;
  Schedule n_gram;
  ControllabilityReport controllability;

  const Matrix& phi_T0() const { return phi.back(); }
  const Matrix& phi_0T() const { return phi_inv.back(); }
  const Matrix& m_TT() const { return m_gram.back(); }
  const Matrix& n_T0() const { return n_gram.front(); }
};

SystemSchedules compute_schedules(const LtvSystem& sys, const TimeGrid& grid,
                                  double rel_tol = 1e-10);

/// Throws invalid_argument when the grid does not cover the system horizon.
void require_matching_horizon(const LtvSystem& sys, const TimeGrid& grid);

}  // namespace covbridge

#endif  // COVBRIDGE_SYSTEM_MODEL_HPP
