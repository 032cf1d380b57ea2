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
#include <catch_amalgamated.hpp>

#include <cmath>

#include "covbridge/bridge_solver.hpp"
#include "covbridge/errors.hpp"
#include "covbridge/sde_sim.hpp"
#include "oracles.hpp"

using namespace covbridge;
using Catch::Matchers::WithinAbs;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

SimConfig sim(std::size_t paths, std::size_t steps = 4000, std::size_t stride = 20,
              std::uint64_t seed = 42, unsigned workers = 1) {
  SimConfig c;
  c.paths = paths;
  c.sim_steps = steps;
  c.record_stride = stride;
  c.seed = seed;
  c.workers = workers;
  return c;
}

BridgeSolution solve(const LtvSystem& sys, const Matrix& s0, const Matrix& st) {
  const auto sched = compute_schedules(sys, build_time_grid(sys.horizon(), 2000));
  return solve_bridge(sys, sched, s0, st);
}

bool identical(const PathEnsemble& a, const PathEnsemble& b) {
  if (a.times != b.times || a.states.size() != b.states.size()) return false;
  for (std::size_t p = 0; p < a.states.size(); ++p) {
    if (a.states[p] != b.states[p]) return false;
  }
  if (a.controls.size() != b.controls.size()) return false;
  for (std::size_t p = 0; p < a.controls.size(); ++p) {
    if (a.controls[p] != b.controls[p]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("prior simulation statistics", "[prior]") {
  const auto bs = LtvSystem::brownian_scalar(1.0);
  const TimeGrid g = build_time_grid(1.0, 100);
  const auto ens = simulate_prior(bs, g, scalar(1.0), sim(10000, 1000, 50));
  CHECK(ens.paths == 10000);
  CHECK_FALSE(ens.has_controls());
  CHECK_THAT(empirical_covariance(ens, 1.0)(0, 0), WithinAbs(2.0, 0.1));

  const auto in = LtvSystem::inertial(1.0);
  const auto iens = simulate_prior(in, g, Matrix::Identity(2, 2), sim(10000));
  const Matrix expected = (Matrix(2, 2) << 7.0 / 3.0, 1.5, 1.5, 2.0).finished();
  CHECK((empirical_covariance(iens, 1.0) - expected).norm() <=
        4.0 * std::sqrt(2.0 / 10000.0) * expected.norm());
  // Independent N(0, I) initial draws.
  CHECK((empirical_covariance(iens, 0.0) - Matrix::Identity(2, 2)).norm() <= 0.05);

  const auto empty = simulate_prior(bs, g, scalar(1.0), sim(0, 100, 10));
  CHECK(empty.paths == 0);
  CHECK(empty.states.empty());
}

TEST_CASE("controlled bridge reaches the target covariance", "[bridge]") {
  SECTION("inertial") {
    const auto sys = LtvSystem::inertial(1.0);
    const auto sol = solve(sys, Matrix::Identity(2, 2), 0.25 * Matrix::Identity(2, 2));
    const auto ens = simulate_bridge(sys, sol, Matrix::Identity(2, 2), sim(10000));
    CHECK(ens.has_controls());
    CHECK((empirical_covariance(ens, 1.0) - 0.25 * Matrix::Identity(2, 2)).norm() <= 0.05);
  }
  SECTION("rlc") {
    const auto sys = LtvSystem::rlc(1.0);
    const Matrix s0 = 0.5 * Matrix::Identity(2, 2);
    const auto sol = solve(sys, s0, Matrix::Identity(2, 2) / 16.0);
    const auto ens = simulate_bridge(sys, sol, s0, sim(10000));
    CHECK((empirical_covariance(ens, 1.0) - Matrix::Identity(2, 2) / 16.0).norm() <= 0.02);
  }
}

TEST_CASE("zero gain reproduces the prior bit for bit", "[bridge][determinism]") {
  const auto sys = LtvSystem::inertial(1.0);
  const TimeGrid g = build_time_grid(1.0, 200);
  const Matrix s0 = Matrix::Identity(2, 2);
  const auto prior = simulate_prior(sys, g, s0, sim(300, 400, 20, 9));
  const auto bridge = simulate_bridge(sys, g, Schedule(g.size(), Matrix::Zero(1, 2)), s0,
                                      sim(300, 400, 20, 9));
  REQUIRE(prior.states.size() == bridge.states.size());
  for (std::size_t p = 0; p < prior.states.size(); ++p) CHECK(prior.states[p] == bridge.states[p]);
  CHECK(empirical_energy(bridge) == 0.0);
}

TEST_CASE("ensembles do not depend on the worker count", "[determinism]") {
  const auto sys = LtvSystem::rlc(1.0);
  const Matrix s0 = 0.5 * Matrix::Identity(2, 2);
  const auto sol = solve(sys, s0, Matrix::Identity(2, 2) / 16.0);
  const auto one = simulate_bridge(sys, sol, s0, sim(777, 400, 20, 5, 1));
  const auto three = simulate_bridge(sys, sol, s0, sim(777, 400, 20, 5, 3));
  const auto again = simulate_bridge(sys, sol, s0, sim(777, 400, 20, 5, 8));
  CHECK(identical(one, three));
  CHECK(identical(one, again));
  const auto other_seed = simulate_bridge(sys, sol, s0, sim(777, 400, 20, 6, 1));
  CHECK_FALSE(identical(one, other_seed));
  CHECK(path_stream_seed(42, 0) != path_stream_seed(42, 1));
  CHECK(path_stream_seed(42, 3) == path_stream_seed(42, 3));
}

TEST_CASE("pinned process", "[pinned]") {
  SECTION("scalar Brownian bridge") {
    const auto bs = LtvSystem::brownian_scalar(1.0);
    const TimeGrid g = build_time_grid(1.0, 100);
    const auto ens = simulate_pinned(bs, g, Vector::Zero(1), Vector::Zero(1), sim(10000, 4000, 20));
    CHECK_FALSE(ens.has_controls());
    CHECK_THAT(empirical_covariance(ens, 0.5)(0, 0), WithinAbs(0.25, 0.02));
    CHECK_THAT(empirical_covariance(ens, 0.25)(0, 0), WithinAbs(0.1875, 0.02));
    CHECK(empirical_covariance(ens, 1.0)(0, 0) == 0.0);

    Vector x0(1), xt(1);
    x0 << -1.0;
    xt << 2.0;
    const auto shifted = simulate_pinned(bs, g, x0, xt, sim(4000, 1000, 50));
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      // Mean path is the straight line from x0 to xT; sd of the mean <= 0.5/sqrt(4000).
      CHECK_THAT(empirical_mean(shifted, t)(0), WithinAbs(-1.0 + 3.0 * t, 0.04));
    }
  }
  SECTION("inertial endpoints and conditional mean") {
    const auto sys = LtvSystem::inertial(1.0);
    const TimeGrid g = build_time_grid(1.0, 100);
    Vector x0(2), xt(2);
    x0 << 0.0, 0.0;
    xt << 1.0, 0.0;
    const auto ens = simulate_pinned(sys, g, x0, xt, sim(10000, 4000, 20));
    for (const auto& path : ens.states) CHECK(path.col(0) == x0);
    CHECK((empirical_mean(ens, 1.0) - xt).norm() <= 0.05);
    // E[x(t) | x(0), x(T)] = Phi(t,0)x0 + M(t,0)Phi(T,t)' M(T,0)^{-1}(xT - Phi(T,0)x0).
    for (double t : {0.3, 0.6, 0.9}) {
      const Vector expected = oracle::inertial_phi(t) * x0 +
                              oracle::inertial_reach(t) * oracle::inertial_phi(1.0 - t).transpose() *
                                  oracle::inertial_reach(1.0).inverse() *
                                  (xt - oracle::inertial_phi(1.0) * x0);
      CHECK((empirical_mean(ens, t) - expected).norm() <= 0.03);
    }
    // Spread collapses towards the pinned endpoint.
    CHECK(empirical_covariance(ens, 0.9).norm() < empirical_covariance(ens, 0.5).norm());
  }
}

TEST_CASE("empirical covariance estimator", "[estimators]") {
  PathEnsemble zeros;
  zeros.times = {0.0, 0.5};
  zeros.paths = 3;
  zeros.states.assign(3, Matrix::Zero(2, 2));
  CHECK(empirical_covariance(zeros, 0.5) == Matrix::Zero(2, 2));
  CHECK_THROWS_AS(empirical_covariance(zeros, 0.25), Error);

  // Divides by the path count, not paths - 1.
  PathEnsemble two;
  two.times = {0.0};
  two.paths = 2;
  two.states = {Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, -3.0)};
  CHECK(empirical_covariance(two, 0.0)(0, 0) == 5.0);

  try {
    empirical_energy(two);
    FAIL("expected invalid_argument");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
  }
}

TEST_CASE("empirical control energy", "[energy]") {
  SECTION("golden scalar case within three standard errors") {
    const auto bs = LtvSystem::brownian_scalar(1.0);
    const auto sol = solve(bs, scalar(1.0), scalar(1.0));
    const auto ens = simulate_bridge(bs, sol, scalar(1.0), sim(10000));
    const double expected = schedule_energy(sol.grid, sol.gain_sched, sol.sigma_sched);
    // Per-path trapezoid energies give the standard error.
    std::vector<double> per_path;
    for (const auto& u : ens.controls) {
      double e = 0.0;
      for (Eigen::Index k = 0; k + 1 < u.cols(); ++k) {
        const double dt = ens.times[k + 1] - ens.times[k];
        e += 0.5 * dt * (u.col(k).squaredNorm() + u.col(k + 1).squaredNorm());
      }
      per_path.push_back(e);
    }
    double mean = 0.0;
    for (double e : per_path) mean += e;
    mean /= per_path.size();
    double var = 0.0;
    for (double e : per_path) var += (e - mean) * (e - mean);
    var /= (per_path.size() - 1);
    const double se = std::sqrt(var / per_path.size());
    CHECK_THAT(empirical_energy(ens), WithinAbs(mean, 1e-12));
    CHECK(std::abs(mean - expected) <= 3.0 * se);
  }
  SECTION("inertial within five percent") {
    const auto sys = LtvSystem::inertial(1.0);
    const auto sol = solve(sys, Matrix::Identity(2, 2), 0.25 * Matrix::Identity(2, 2));
    const auto ens = simulate_bridge(sys, sol, Matrix::Identity(2, 2), sim(10000));
    const double expected = schedule_energy(sol.grid, sol.gain_sched, sol.sigma_sched);
    CHECK(std::abs(empirical_energy(ens) - expected) <= 0.05 * expected);
  }
}

TEST_CASE("Euler bias on the scalar bridge shrinks as the step halves", "[convergence]") {
  const auto bs = LtvSystem::brownian_scalar(1.0);
  const auto sol = solve(bs, scalar(1.0), scalar(1.0));
  // Second moment of the Euler chain: v <- (1 - h K)^2 v + h, K at the left node.
  auto euler_variance = [&](std::size_t steps) {
    REQUIRE(sol.grid.steps % steps == 0);
    const std::size_t ratio = sol.grid.steps / steps;
    const double h = 1.0 / static_cast<double>(steps);
    double v = 1.0;
    for (std::size_t j = 0; j < steps; ++j) {
      const double k = sol.gain_sched[j * ratio](0, 0);
      v = (1.0 - h * k) * (1.0 - h * k) * v + h;
    }
    return v;
  };
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t steps : {25, 50, 100, 200, 400}) {
    const double bias = std::abs(euler_variance(steps) - 1.0);
    CHECK(bias < previous);
    previous = bias;
  }
  // The simulator implements exactly that chain.
  const auto ens = simulate_bridge(bs, sol, scalar(1.0), sim(40000, 10, 1, 3));
  CHECK_THAT(empirical_covariance(ens, 1.0)(0, 0),
             WithinAbs(euler_variance(10), 4.0 * std::sqrt(2.0 / 40000.0) * euler_variance(10)));
}

TEST_CASE("simulation config validation", "[config]") {
  CHECK_THROWS_AS(validate(sim(10, 100, 30)), Error);
  CHECK_THROWS_AS(validate(sim(10, 0, 1)), Error);
  CHECK_NOTHROW(validate(sim(10, 100, 25)));
}
