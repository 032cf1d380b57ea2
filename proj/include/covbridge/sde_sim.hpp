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
#ifndef COVBRIDGE_SDE_SIM_HPP
#define COVBRIDGE_SDE_SIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "covbridge/bridge_solver.hpp"
#include "covbridge/linalg.hpp"
#include "covbridge/system_model.hpp"

namespace covbridge {

struct SimConfig {
  std::size_t paths = 10000;
  std::uint64_t seed = 42;
  std::size_t sim_steps = 4000;
  /// Record every `record_stride`-th Euler node; must divide sim_steps.
  std::size_t record_stride = 20;
  /// Worker threads; results do not depend on this value.
  unsigned workers = 1;
};

void validate(const SimConfig& cfg);

/// Monte Carlo sample paths recorded on a thinned time grid.
struct PathEnsemble {
  std::vector<double> times;
  /// Per path: n x recorded-nodes.
  std::vector<Matrix> states;
  /// Per path: m x recorded-nodes; empty for the prior and pinned processes.
  std::vector<Matrix> controls;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  std::size_t sim_steps = 0;
  std::string scheme;
  bool controlled = false;

  bool has_controls() const { return controlled; }
};

/// Seed of the per-path random stream; a pure function of (seed, path).
std::uint64_t path_stream_seed(std::uint64_t seed, std::uint64_t path_index);

/// Euler-Maruyama paths of dx = A x dt + B dw with x(0) ~ N(0, Sigma0).
PathEnsemble simulate_prior(const LtvSystem& sys, const TimeGrid& grid, const Matrix& sigma0,
                            const SimConfig& cfg);

/// Closed-loop paths dx = (A - B K) x dt + B dw, u = -K x, with K linearly
/// interpolated from the solver grid. Uses the same noise stream as
/// simulate_prior for equal seeds.
PathEnsemble simulate_bridge(const LtvSystem& sys, const TimeGrid& grid,
                             const Schedule& gain_sched, const Matrix& sigma0,
                             const SimConfig& cfg);

PathEnsemble simulate_bridge(const LtvSystem& sys, const BridgeSolution& solution,
                             const Matrix& sigma0, const SimConfig& cfg);

/// The prior conditioned on x(0) = x0 and x(T) = xT:
///   dx = (A - BB'R^{-1}) x dt + BB'R^{-1} Phi(t,T) xT dt + B dw,
/// with R' = AR + RA' - BB', R(T) = 0 integrated backward on the Euler grid.
/// The last interval uses the exact conditional transition, which lands on xT.
PathEnsemble simulate_pinned(const LtvSystem& sys, const TimeGrid& grid, const Vector& x0,
                             const Vector& x_t, const SimConfig& cfg);

/// Index of a recorded time; invalid_argument when `t` was not recorded.
std::size_t recorded_index(const PathEnsemble& ens, double t);

/// (1/paths) sum_i x_i x_i' at a recorded time. Means are zero by
/// construction, so no centring and no Bessel correction.
Matrix empirical_covariance(const PathEnsemble& ens, double t);

/// Sample mean of the state at a recorded time.
Vector empirical_mean(const PathEnsemble& ens, double t);

/// Path average of the trapezoid integral of |u|^2 over the recorded nodes.
double empirical_energy(const PathEnsemble& ens);

}  // namespace covbridge

#endif  // COVBRIDGE_SDE_SIM_HPP
