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
#include "covbridge/sde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "covbridge/errors.hpp"
#include "covbridge/ode.hpp"

namespace covbridge {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-Euler-step coefficients shared by every path:
//   x <- x + drift_h * x + offset_h + noise * xi,  xi ~ N(0, I_m)
struct StepTable {
  double horizon = 0.0;
  std::size_t steps = 0;
  std::vector<Matrix> drift_h;
  std::vector<Vector> offset_h;  // empty when there is no affine term
  std::vector<Matrix> noise;
  std::vector<Matrix> gain;      // per node, steps + 1 entries; empty without control
};

struct InitialState {
  bool random = true;
  Matrix chol;  // lower factor of Sigma0 when random
  Vector fixed;
};

struct PathSpec {
  const StepTable* table = nullptr;
  InitialState init;
  std::size_t stride = 1;
  bool pin_last = false;
  Vector pin_target;
};

void run_path(const PathSpec& spec, std::uint64_t stream_seed, Matrix& states, Matrix* controls) {
  const StepTable& tab = *spec.table;
  const auto n = tab.drift_h.empty() ? spec.init.fixed.size() : tab.drift_h.front().rows();
  const auto m = tab.noise.front().cols();
  std::mt19937_64 rng(stream_seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector x(n);
  if (spec.init.random) {
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    x.noalias() = spec.init.chol * z;
  } else {
    x = spec.init.fixed;
  }

  Vector dx(n);
  Vector xi(m);
  Eigen::Index col = 0;
  auto record = [&](std::size_t node) {
    states.col(col) = x;
    if (controls != nullptr) controls->col(col).noalias() = -(tab.gain[node] * x);
    ++col;
  };
  record(0);
  for (std::size_t j = 0; j < tab.steps; ++j) {
    if (spec.pin_last && j + 1 == tab.steps) {
      x = spec.pin_target;
    } else {
      for (Eigen::Index i = 0; i < m; ++i) xi[i] = normal(rng);
      dx.noalias() = tab.drift_h[j] * x;
      if (!tab.offset_h.empty()) dx += tab.offset_h[j];
      dx.noalias() += tab.noise[j] * xi;
      x += dx;
    }
    if ((j + 1) % spec.stride == 0) record(j + 1);
  }
}

PathEnsemble run_ensemble(const PathSpec& spec, const SimConfig& cfg, const std::string& scheme,
                          bool with_controls) {
  const StepTable& tab = *spec.table;
  PathEnsemble ens;
  ens.seed = cfg.seed;
  ens.paths = cfg.paths;
  ens.sim_steps = cfg.sim_steps;
  ens.scheme = scheme;
  ens.controlled = with_controls;
  const std::size_t recorded = cfg.sim_steps / cfg.record_stride + 1;
  ens.times.resize(recorded);
  for (std::size_t r = 0; r < recorded; ++r) {
    const std::size_t node = r * cfg.record_stride;
    ens.times[r] = tab.horizon * static_cast<double>(node) / static_cast<double>(cfg.sim_steps);
  }
  ens.times.back() = tab.horizon;

  const auto n = tab.drift_h.front().rows();
  const auto m = tab.noise.front().cols();
  ens.states.assign(cfg.paths, Matrix(n, static_cast<Eigen::Index>(recorded)));
  if (with_controls) ens.controls.assign(cfg.paths, Matrix(m, static_cast<Eigen::Index>(recorded)));

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      run_path(spec, path_stream_seed(cfg.seed, p), ens.states[p],
               with_controls ? &ens.controls[p] : nullptr);
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(cfg.workers, 1, std::max<std::size_t>(1, cfg.paths));
  if (workers == 1) {
    work(0, cfg.paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (cfg.paths + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(cfg.paths, w * chunk);
      const std::size_t end = std::min(cfg.paths, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return ens;
}

StepTable feedback_table(const LtvSystem& sys, const SimConfig& cfg, const TimeGrid* gain_grid,
                         const Schedule* gain_sched) {
  StepTable tab;
  tab.horizon = sys.horizon();
  tab.steps = cfg.sim_steps;
  const double h = tab.horizon / static_cast<double>(cfg.sim_steps);
  const double sqrt_h = std::sqrt(h);
  const int n = sys.state_dim();
  const int m = sys.input_dim();

  auto gain_at = [&](double t) -> Matrix {
    if (gain_sched == nullptr) return Matrix::Zero(m, n);
    const double s = std::clamp(t / gain_grid->dt(), 0.0, static_cast<double>(gain_grid->steps));
    const auto k = std::min(static_cast<std::size_t>(s), gain_grid->steps - 1);
    const double w = s - static_cast<double>(k);
    return (1.0 - w) * (*gain_sched)[k] + w * (*gain_sched)[k + 1];
  };

  tab.drift_h.reserve(tab.steps);
  tab.noise.reserve(tab.steps);
  tab.gain.reserve(tab.steps + 1);
  for (std::size_t j = 0; j <= tab.steps; ++j) {
    const double t = j == tab.steps
                         ? tab.horizon
                         : tab.horizon * static_cast<double>(j) / static_cast<double>(tab.steps);
    const Matrix k = gain_at(t);
    tab.gain.push_back(k);
    if (j == tab.steps) break;
    const Matrix a = sys.a(t);
    const Matrix b = sys.b(t);
    tab.drift_h.push_back(h * (a - b * k));
    tab.noise.push_back(sqrt_h * b);
  }
  return tab;
}

InitialState gaussian_initial(const Matrix& sigma0) {
  require_spd(sigma0, "Sigma0");
  Eigen::LLT<Matrix> llt(symmetrize(sigma0));
  InitialState init;
  init.random = true;
  init.chol = llt.matrixL();
  return init;
}

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.sim_steps == 0 || cfg.record_stride == 0) {
    throw Error(ErrorKind::invalid_argument, "simulation: sim_steps and record_stride must be positive");
  }
  if (cfg.sim_steps % cfg.record_stride != 0) {
    throw Error(ErrorKind::invalid_argument, "simulation: sim_steps must be a multiple of record_stride");
  }
}

std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t path_index) {
  return splitmix64(seed ^ splitmix64(path_index + 0x632be59bd9b4e019ULL));
}

PathEnsemble simulate_prior(const LtvSystem& sys, const TimeGrid& grid, const Matrix& sigma0,
                            const SimConfig& cfg) {
  require_matching_horizon(sys, grid);
  validate(cfg);
  const StepTable tab = feedback_table(sys, cfg, nullptr, nullptr);
  PathSpec spec;
  spec.table = &tab;
  spec.init = gaussian_initial(sigma0);
  spec.stride = cfg.record_stride;
  return run_ensemble(spec, cfg, "prior", false);
}

PathEnsemble simulate_bridge(const LtvSystem& sys, const TimeGrid& grid,
                             const Schedule& gain_sched, const Matrix& sigma0,
                             const SimConfig& cfg) {
  require_matching_horizon(sys, grid);
  validate(cfg);
  if (gain_sched.size() != grid.size()) {
    throw Error(ErrorKind::invalid_argument, "simulate_bridge: gain schedule does not match grid");
  }
  const StepTable tab = feedback_table(sys, cfg, &grid, &gain_sched);
  PathSpec spec;
  spec.table = &tab;
  spec.init = gaussian_initial(sigma0);
  spec.stride = cfg.record_stride;
  return run_ensemble(spec, cfg, "bridge", true);
}

PathEnsemble simulate_bridge(const LtvSystem& sys, const BridgeSolution& solution,
                             const Matrix& sigma0, const SimConfig& cfg) {
  if (solution.branch != Branch::minus || solution.gain_sched.empty()) {
    throw Error(ErrorKind::invalid_argument, "simulate_bridge: needs a minus-branch solution");
  }
  return simulate_bridge(sys, solution.grid, solution.gain_sched, sigma0, cfg);
}

PathEnsemble simulate_pinned(const LtvSystem& sys, const TimeGrid& grid, const Vector& x0,
                             const Vector& x_t, const SimConfig& cfg) {
  require_matching_horizon(sys, grid);
  validate(cfg);
  const int n = sys.state_dim();
  if (x0.size() != n || x_t.size() != n) {
    throw Error(ErrorKind::invalid_argument, "simulate_pinned: endpoints must be n-vectors");
  }
  const TimeGrid fine = build_time_grid(grid.horizon, static_cast<std::int64_t>(cfg.sim_steps));
  const double h = fine.dt();
  const double sqrt_h = std::sqrt(h);

  // R' = AR + RA' - BB' backward from R(T) = 0.
  auto rhs = [&sys](double t, const Matrix& r) -> Matrix {
    const Matrix a = sys.a(t);
    const Matrix b = sys.b(t);
    return a * r + r * a.transpose() - b * b.transpose();
  };
  Schedule r(fine.size());
  r[fine.steps] = Matrix::Zero(n, n);
  for (std::size_t k = fine.steps; k > 0; --k) {
    r[k - 1] = symmetrize(rk4_step(rhs, fine.nodes[k], r[k], -h));
  }
  const TransitionSchedule transition = compute_transition(sys, fine);
  const Matrix& phi_0T = transition.phi_inv.back();

  StepTable tab;
  tab.horizon = fine.horizon;
  tab.steps = fine.steps;
  for (std::size_t j = 0; j < fine.steps; ++j) {
    const double t = fine.nodes[j];
    const Matrix a = sys.a(t);
    const Matrix b = sys.b(t);
    if (j + 1 == fine.steps) {
      // Unused: the final interval is replaced by the exact transition.
      tab.drift_h.push_back(Matrix::Zero(n, n));
      tab.offset_h.push_back(Vector::Zero(n));
    } else {
      std::ostringstream what;
      what << "pinning matrix R(t) at t = " << t;
      const Matrix bbr = b * b.transpose() * checked_inverse(r[j], what.str());
      tab.drift_h.push_back(h * (a - bbr));
      tab.offset_h.push_back(h * (bbr * (transition.phi[j] * phi_0T * x_t)));
    }
    tab.noise.push_back(sqrt_h * b);
  }

  PathSpec spec;
  spec.table = &tab;
  spec.init.random = false;
  spec.init.fixed = x0;
  spec.stride = cfg.record_stride;
  spec.pin_last = true;
  spec.pin_target = x_t;
  return run_ensemble(spec, cfg, "pinned", false);
}

std::size_t recorded_index(const PathEnsemble& ens, double t) {
  const double slack = 1e-9 * std::max(1.0, ens.times.empty() ? 1.0 : ens.times.back());
  for (std::size_t i = 0; i < ens.times.size(); ++i) {
    if (std::abs(ens.times[i] - t) <= slack) return i;
  }
  std::ostringstream msg;
  msg << "time " << t << " is not a recorded node";
  throw Error(ErrorKind::invalid_argument, msg.str());
}

Matrix empirical_covariance(const PathEnsemble& ens, double t) {
  const std::size_t idx = recorded_index(ens, t);
  if (ens.paths < 2) {
    throw Error(ErrorKind::invalid_argument, "empirical_covariance: need at least two paths");
  }
  const auto n = ens.states.front().rows();
  Matrix acc = Matrix::Zero(n, n);
  for (const auto& path : ens.states) {
    const auto x = path.col(static_cast<Eigen::Index>(idx));
    acc.noalias() += x * x.transpose();
  }
  return symmetrize(acc / static_cast<double>(ens.paths));
}

Vector empirical_mean(const PathEnsemble& ens, double t) {
  const std::size_t idx = recorded_index(ens, t);
  if (ens.paths == 0) {
    throw Error(ErrorKind::invalid_argument, "empirical_mean: ensemble is empty");
  }
  Vector acc = Vector::Zero(ens.states.front().rows());
  for (const auto& path : ens.states) acc += path.col(static_cast<Eigen::Index>(idx));
  return acc / static_cast<double>(ens.paths);
}

double empirical_energy(const PathEnsemble& ens) {
  if (!ens.has_controls()) {
    throw Error(ErrorKind::invalid_argument, "empirical_energy: ensemble has no controls");
  }
  if (ens.paths == 0) return 0.0;
  double total = 0.0;
  for (const auto& u : ens.controls) {
    const Eigen::RowVectorXd sq = u.colwise().squaredNorm();
    for (Eigen::Index r = 1; r < sq.size(); ++r) {
      const auto i = static_cast<std::size_t>(r);
      total += 0.5 * (sq[r - 1] + sq[r]) * (ens.times[i] - ens.times[i - 1]);
    }
  }
  return total / static_cast<double>(ens.paths);
}

}  // namespace covbridge
