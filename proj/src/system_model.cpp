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
#include "covbridge/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <memory>
#include <utility>

#include "covbridge/errors.hpp"
#include "covbridge/ode.hpp"

namespace covbridge {

TimeGrid build_time_grid(double horizon, std::int64_t steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorKind::invalid_argument, "time grid: horizon must be positive and finite");
  }
  if (steps < 2) {
    throw Error(ErrorKind::invalid_argument, "time grid: steps must be at least 2");
  }
  TimeGrid grid;
  grid.horizon = horizon;
  grid.steps = static_cast<std::size_t>(steps);
  grid.nodes.resize(grid.steps + 1);
  for (std::size_t k = 0; k <= grid.steps; ++k) {
    grid.nodes[k] = horizon * static_cast<double>(k) / static_cast<double>(grid.steps);
  }
  grid.nodes.back() = horizon;
  return grid;
}

const char* to_string(SystemKind kind) noexcept {
  switch (kind) {
    case SystemKind::constant: return "constant";
    case SystemKind::scenario: return "scenario";
    case SystemKind::table: return "table";
  }
  return "unknown";
}

LtvSystem::LtvSystem(int n, int m, double horizon, Provider a, Provider b, SystemKind kind,
                     std::string name)
    : n_(n), m_(m), horizon_(horizon), a_(std::move(a)), b_(std::move(b)), kind_(kind),
      name_(std::move(name)) {
  if (n <= 0 || m <= 0) {
    throw Error(ErrorKind::invalid_argument, "system: dimensions must be positive");
  }
  if (!(horizon > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "system: horizon must be positive");
  }
  if (!a_ || !b_) {
    throw Error(ErrorKind::invalid_argument, "system: providers must be set");
  }
}

LtvSystem LtvSystem::constant(const Matrix& a, const Matrix& b, double horizon) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw Error(ErrorKind::invalid_argument, "system: A must be square and non-empty");
  }
  if (b.rows() != a.rows() || b.cols() == 0) {
    throw Error(ErrorKind::invalid_argument, "system: B must have as many rows as A");
  }
  return LtvSystem(static_cast<int>(a.rows()), static_cast<int>(b.cols()), horizon,
                   [a](double) { return a; }, [b](double) { return b; },
                   SystemKind::constant, "constant");
}

LtvSystem LtvSystem::inertial(double horizon) {
  Matrix a(2, 2);
  a << 0.0, 1.0, 0.0, 0.0;
  Matrix b(2, 1);
  b << 0.0, 1.0;
  return LtvSystem(2, 1, horizon, [a](double) { return a; }, [b](double) { return b; },
                   SystemKind::scenario, "inertial");
}

LtvSystem LtvSystem::rlc(double horizon, double resistance, double inductance,
                         double capacitance) {
  if (!(resistance > 0.0) || !(inductance > 0.0) || !(capacitance > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "rlc: R, L and C must be positive");
  }
  // L di = v dt,  RC dv = (-v - R i + u) dt + dw
  const double rc = resistance * capacitance;
  Matrix a(2, 2);
  a << 0.0, 1.0 / inductance, -resistance / rc, -1.0 / rc;
  Matrix b(2, 1);
  b << 0.0, 1.0 / rc;
  return LtvSystem(2, 1, horizon, [a](double) { return a; }, [b](double) { return b; },
                   SystemKind::scenario, "rlc");
}

LtvSystem LtvSystem::brownian_scalar(double horizon) {
  const Matrix a = Matrix::Zero(1, 1);
  const Matrix b = Matrix::Ones(1, 1);
  return LtvSystem(1, 1, horizon, [a](double) { return a; }, [b](double) { return b; },
                   SystemKind::scenario, "brownian-scalar");
}

LtvSystem LtvSystem::piecewise_constant(std::vector<TableEntry> table, double horizon) {
  if (table.empty()) {
    throw Error(ErrorKind::invalid_argument, "table system: table is empty");
  }
  if (table.front().t != 0.0) {
    throw Error(ErrorKind::invalid_argument, "table system: first row must start at t = 0");
  }
  const auto n = table.front().a.rows();
  const auto m = table.front().b.cols();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    if (row.a.rows() != n || row.a.cols() != n || row.b.rows() != n || row.b.cols() != m ||
        n == 0 || m == 0) {
      throw Error(ErrorKind::invalid_argument, "table system: inconsistent matrix shapes");
    }
    if (i > 0 && !(row.t > table[i - 1].t)) {
      throw Error(ErrorKind::invalid_argument, "table system: times must be strictly increasing");
    }
    if (row.t > horizon) {
      throw Error(ErrorKind::invalid_argument, "table system: row time beyond horizon");
    }
  }
  auto shared = std::make_shared<const std::vector<TableEntry>>(std::move(table));
  auto lookup = [shared](double t) -> const TableEntry& {
    auto it = std::upper_bound(shared->begin(), shared->end(), t,
                               [](double value, const TableEntry& e) { return value < e.t; });
    return *std::prev(it == shared->begin() ? std::next(it) : it);
  };
  return LtvSystem(static_cast<int>(n), static_cast<int>(m), horizon,
                   [lookup](double t) { return lookup(t).a; },
                   [lookup](double t) { return lookup(t).b; }, SystemKind::table, "table");
}

SystemMatrices eval_system(const LtvSystem& sys, double t) {
  const double slack = 1e-12 * std::max(1.0, sys.horizon());
  if (!(t >= -slack && t <= sys.horizon() + slack)) {
    std::ostringstream msg;
    msg << "eval_system: t = " << t << " outside [0, " << sys.horizon() << "]";
    throw Error(ErrorKind::out_of_range, msg.str());
  }
  const double tc = std::clamp(t, 0.0, sys.horizon());
  SystemMatrices out{sys.a(tc), sys.b(tc)};
  if (out.a.rows() != sys.state_dim() || out.a.cols() != sys.state_dim() ||
      out.b.rows() != sys.state_dim() || out.b.cols() != sys.input_dim()) {
    throw Error(ErrorKind::numerical_failure, "eval_system: provider returned wrong shape");
  }
  return out;
}

void require_matching_horizon(const LtvSystem& sys, const TimeGrid& grid) {
  if (grid.steps < 2 || grid.nodes.size() != grid.steps + 1) {
    throw Error(ErrorKind::invalid_argument, "time grid is malformed");
  }
  if (std::abs(grid.horizon - sys.horizon()) > 1e-12 * std::max(1.0, sys.horizon())) {
    throw Error(ErrorKind::invalid_argument, "time grid horizon does not match the system horizon");
  }
}

TransitionSchedule compute_transition(const LtvSystem& sys, const TimeGrid& grid) {
  require_matching_horizon(sys, grid);
  const int n = sys.state_dim();
  const double h = grid.dt();
  auto rhs = [&sys](double t, const Matrix& phi) -> Matrix { return sys.a(t) * phi; };

  TransitionSchedule out;
  out.phi.reserve(grid.size());
  out.phi_inv.reserve(grid.size());
  out.phi.push_back(Matrix::Identity(n, n));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    out.phi.push_back(rk4_step(rhs, grid.nodes[k], out.phi.back(), h));
  }
  const Matrix eye = Matrix::Identity(n, n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Eigen::PartialPivLU<Matrix> lu(out.phi[k]);
    if (!out.phi[k].allFinite() || !(lu.rcond() >= kMinReciprocalCondition)) {
      std::ostringstream msg;
      msg << "transition matrix is numerically singular at t = " << grid.nodes[k];
      throw Error(ErrorKind::numerical_failure, msg.str());
    }
    out.phi_inv.push_back(lu.solve(eye));
  }
  return out;
}

Gramians compute_gramians(const LtvSystem& sys, const TimeGrid& grid,
                          const TransitionSchedule& transition) {
  require_matching_horizon(sys, grid);
  if (transition.phi.size() != grid.size() || transition.phi_inv.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "gramians: transition data does not match grid");
  }
  const int n = sys.state_dim();
  const double h = grid.dt();
  auto rhs = [&sys](double t, const Matrix& p) -> Matrix {
    const Matrix a = sys.a(t);
    const Matrix b = sys.b(t);
    return a * p + p * a.transpose() + b * b.transpose();
  };

  Gramians out;
  out.m_gram.reserve(grid.size());
  out.m_gram.push_back(Matrix::Zero(n, n));
  for (std::size_t k = 0; k < grid.steps; ++k) {
    out.m_gram.push_back(symmetrize(rk4_step(rhs, grid.nodes[k], out.m_gram.back(), h)));
  }

  // N(t, 0) = Phi(0, t) M(t, 0) Phi(0, t)'
  Schedule n_from_zero(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix& inv = transition.phi_inv[k];
    n_from_zero[k] = symmetrize(inv * out.m_gram[k] * inv.transpose());
  }
  const Matrix& n_total = n_from_zero.back();
  out.n_gram.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix& phi = transition.phi[k];
    out.n_gram.push_back(symmetrize(phi * (n_total - n_from_zero[k]) * phi.transpose()));
  }
  return out;
}

ControllabilityReport check_controllability(const Matrix& m_tt, double rel_tol) {
  if (m_tt.rows() == 0 || m_tt.rows() != m_tt.cols()) {
    throw Error(ErrorKind::invalid_argument, "controllability: gramian must be square");
  }
  if (relative_asymmetry(m_tt) > 1e-10) {
    throw Error(ErrorKind::invalid_argument, "controllability: gramian is not symmetric");
  }
  const Vector values = symmetric_eigenvalues(m_tt);
  ControllabilityReport report;
  report.lambda_min = values.minCoeff();
  report.lambda_max = values.maxCoeff();
  report.rel_tol = rel_tol;
  report.controllable = report.lambda_min > rel_tol * std::max(1.0, report.lambda_max);
  return report;
}

SystemSchedules compute_schedules(const LtvSystem& sys, const TimeGrid& grid, double rel_tol) {
  TransitionSchedule transition = compute_transition(sys, grid);
  Gramians gramians = compute_gramians(sys, grid, transition);
  SystemSchedules out;
  out.grid = grid;
  out.phi = std::move(transition.phi);
  out.phi_inv = std::move(transition.phi_inv);
  out.m_gram = std::move(gramians.m_gram);
  out.n_gram = std::move(gramians.n_gram);
  out.controllability = check_controllability(out.m_gram.back(), rel_tol);
  return out;
}

}  // namespace covbridge
