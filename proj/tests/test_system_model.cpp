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

#include "covbridge/errors.hpp"
#include "covbridge/system_model.hpp"
#include "oracles.hpp"

using namespace covbridge;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected covbridge::Error");
  return ErrorKind::invalid_argument;
}

const Matrix kRlcA = (Matrix(2, 2) << 0.0, 1.0, -1.0, -1.0).finished();
const Matrix kRlcB = (Matrix(2, 1) << 0.0, 1.0).finished();

}  // namespace

TEST_CASE("build_time_grid produces uniform nodes", "[grid]") {
  const TimeGrid g = build_time_grid(1.0, 4);
  REQUIRE(g.size() == 5);
  const std::vector<double> expected{0.0, 0.25, 0.5, 0.75, 1.0};
  for (std::size_t k = 0; k < 5; ++k) CHECK(g.nodes[k] == expected[k]);

  const TimeGrid fine = build_time_grid(1.0, 1000);
  CHECK(fine.size() == 1001);
  CHECK_THAT(fine.dt(), WithinAbs(0.001, 1e-18));
  CHECK(fine.nodes.back() == 1.0);
  for (std::size_t k = 1; k < fine.size(); ++k) CHECK(fine.nodes[k] > fine.nodes[k - 1]);

  CHECK(kind_of([] { build_time_grid(0.0, 10); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { build_time_grid(1.0, 1); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { build_time_grid(-2.0, 10); }) == ErrorKind::invalid_argument);
}

TEST_CASE("eval_system returns scenario matrices", "[system]") {
  const auto inertial = eval_system(LtvSystem::inertial(1.0), 0.37);
  CHECK(inertial.a == (Matrix(2, 2) << 0, 1, 0, 0).finished());
  CHECK(inertial.b == (Matrix(2, 1) << 0, 1).finished());

  const auto rlc = eval_system(LtvSystem::rlc(1.0), 0.5);
  CHECK(rlc.a == kRlcA);
  CHECK(rlc.b == kRlcB);

  const auto sys = LtvSystem::constant(Matrix::Zero(3, 3), Matrix::Identity(3, 3), 1.0);
  const auto c = eval_system(sys, 0.3);
  CHECK(c.a == Matrix::Zero(3, 3));
  CHECK(c.b == Matrix::Identity(3, 3));

  CHECK(kind_of([&] { eval_system(sys, 1.5); }) == ErrorKind::out_of_range);
  CHECK(kind_of([&] { eval_system(sys, -0.1); }) == ErrorKind::out_of_range);
}

TEST_CASE("rlc scenario follows the circuit equations", "[system]") {
  // L i' = v and RC v' = -v - R i + u + noise, with state (i_L, v_C).
  const auto m = eval_system(LtvSystem::rlc(1.0, 2.0, 0.5, 4.0), 0.0);
  const Matrix a = (Matrix(2, 2) << 0.0, 2.0, -0.25, -0.125).finished();
  CHECK((m.a - a).norm() < 1e-15);
  CHECK_THAT(m.b(1, 0), WithinAbs(0.125, 1e-15));
}

TEST_CASE("piecewise-constant table uses left-closed lookup", "[system]") {
  std::vector<TableEntry> table{
      {0.0, Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0)},
      {0.5, Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 3.0)},
  };
  const auto sys = LtvSystem::piecewise_constant(table, 1.0);
  CHECK(eval_system(sys, 0.0).a(0, 0) == 1.0);
  CHECK(eval_system(sys, 0.4999).a(0, 0) == 1.0);
  CHECK(eval_system(sys, 0.5).a(0, 0) == 2.0);
  CHECK(eval_system(sys, 0.5).b(0, 0) == 3.0);
  CHECK(eval_system(sys, 1.0).a(0, 0) == 2.0);
  table[0].t = 0.1;
  CHECK(kind_of([&] { LtvSystem::piecewise_constant(table, 1.0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("transition matrices", "[transition]") {
  SECTION("zero drift gives identity") {
    const auto sys = LtvSystem::constant(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 1.0);
    const auto tr = compute_transition(sys, build_time_grid(1.0, 10));
    for (const auto& p : tr.phi) CHECK(p == Matrix::Identity(2, 2));
  }
  SECTION("inertial closed form") {
    const TimeGrid g = build_time_grid(1.0, 100);
    const auto tr = compute_transition(LtvSystem::inertial(1.0), g);
    for (std::size_t k = 0; k < g.size(); k += 7) {
      CHECK((tr.phi[k] - oracle::inertial_phi(g.nodes[k])).norm() <= 1e-14);
      CHECK((tr.phi_inv[k] - oracle::inertial_phi(-g.nodes[k])).norm() <= 1e-14);
    }
  }
  SECTION("rlc matches the matrix exponential") {
    const TimeGrid g = build_time_grid(1.0, 2000);
    const auto tr = compute_transition(LtvSystem::rlc(1.0), g);
    CHECK((tr.phi.back() - oracle::expm(kRlcA)).norm() <= 1e-12);
    for (std::size_t k = 0; k < g.size(); k += 250) {
      CHECK((tr.phi[k] * tr.phi_inv[k] - Matrix::Identity(2, 2)).norm() <= 1e-13);
    }
  }
  SECTION("halving the step shrinks the error about 16x") {
    const auto sys = LtvSystem::rlc(1.0);
    const Matrix exact = oracle::expm(kRlcA);
    const double coarse = (compute_transition(sys, build_time_grid(1.0, 20)).phi.back() - exact).norm();
    const double fine = (compute_transition(sys, build_time_grid(1.0, 40)).phi.back() - exact).norm();
    CHECK(coarse / fine > 12.0);
    CHECK(coarse / fine < 20.0);
  }
}

TEST_CASE("gramians", "[gramian]") {
  SECTION("zero drift with identity input") {
    const auto sys = LtvSystem::constant(Matrix::Zero(2, 2), Matrix::Identity(2, 2), 1.0);
    const auto s = compute_schedules(sys, build_time_grid(1.0, 50));
    CHECK((s.m_TT() - Matrix::Identity(2, 2)).norm() <= 1e-14);
    CHECK((s.n_T0() - Matrix::Identity(2, 2)).norm() <= 1e-14);
  }
  SECTION("inertial closed forms") {
    const TimeGrid g = build_time_grid(1.0, 200);
    const auto s = compute_schedules(LtvSystem::inertial(1.0), g);
    for (std::size_t k = 0; k < g.size(); k += 13) {
      CHECK((s.m_gram[k] - oracle::inertial_reach(g.nodes[k])).norm() <= 1e-13);
    }
    const Matrix n10 = (Matrix(2, 2) << 1.0 / 3.0, -0.5, -0.5, 1.0).finished();
    CHECK((s.n_T0() - n10).norm() <= 1e-13);
    CHECK((s.n_T0() - oracle::inertial_ctrl(1.0)).norm() <= 1e-13);
  }
  SECTION("N(T, t_k) reduction agrees with direct quadrature") {
    const TimeGrid g = build_time_grid(1.0, 2000);
    const auto s = compute_schedules(LtvSystem::rlc(1.0), g);
    for (std::size_t k : {std::size_t{0}, std::size_t{500}, std::size_t{1300}, std::size_t{1900}}) {
      // N(T, t) = int_0^{T-t} e^{-As} B B' e^{-As}' ds.
      const Matrix direct = oracle::reachability_gramian(-kRlcA, kRlcB, 1.0 - g.nodes[k]);
      CHECK((s.n_gram[k] - direct).norm() <= 1e-10);
    }
    CHECK((s.m_TT() - oracle::reachability_gramian(kRlcA, kRlcB, 1.0)).norm() <= 1e-10);
  }
  SECTION("trapezoid quadrature converges to the Lyapunov gramian at second order") {
    const auto s = compute_schedules(LtvSystem::rlc(1.0), build_time_grid(1.0, 2000));
    const double e1 = (oracle::reachability_gramian_trapezoid(kRlcA, kRlcB, 1.0, 50) - s.m_TT()).norm();
    const double e2 = (oracle::reachability_gramian_trapezoid(kRlcA, kRlcB, 1.0, 100) - s.m_TT()).norm();
    CHECK(e1 / e2 > 3.5);
    CHECK(e1 / e2 < 4.5);
    CHECK(e2 <= 1e-3);
  }
}

TEST_CASE("schedule invariants on built-in scenarios", "[gramian][property]") {
  const TimeGrid g = build_time_grid(1.0, 2000);
  for (const auto& sys : {LtvSystem::inertial(1.0), LtvSystem::rlc(1.0)}) {
    const auto s = compute_schedules(sys, g);
    CHECK(s.phi.front() == Matrix::Identity(2, 2));
    const Matrix recon = s.phi_0T() * s.m_TT() * s.phi_0T().transpose();
    CHECK((s.n_T0() - recon).norm() / recon.norm() <= 1e-8);
    for (std::size_t k = 0; k + 100 < g.size(); k += 100) {
      const std::size_t j = k + 100;
      CHECK(lambda_min(s.m_gram[j] - s.m_gram[k]) >= -1e-10);
      CHECK(lambda_min(s.n_gram[k] - s.n_gram[j]) >= -1e-10);
      CHECK(relative_asymmetry(s.m_gram[k]) <= 1e-14);
      CHECK(lambda_min(s.m_gram[k]) >= -1e-12);
    }
  }
}

TEST_CASE("check_controllability", "[controllability]") {
  CHECK(check_controllability(Matrix::Identity(2, 2), 1e-10).controllable);
  const Matrix rank_def = Vector{{1.0, 0.0}}.asDiagonal();
  CHECK_FALSE(check_controllability(rank_def, 1e-10).controllable);
  const Matrix inertial = (Matrix(2, 2) << 1.0 / 3.0, 0.5, 0.5, 1.0).finished();
  const auto rep = check_controllability(inertial, 1e-10);
  CHECK(rep.controllable);
  CHECK_THAT(rep.lambda_min * rep.lambda_max, WithinRel(1.0 / 12.0, 1e-12));
  const Matrix asym = (Matrix(2, 2) << 1.0, 0.3, 0.0, 1.0).finished();
  CHECK(kind_of([&] { check_controllability(asym, 1e-10); }) == ErrorKind::invalid_argument);

  const auto sys = LtvSystem::constant(Matrix::Zero(2, 2), (Matrix(2, 1) << 1.0, 0.0).finished(), 1.0);
  CHECK_FALSE(compute_schedules(sys, build_time_grid(1.0, 100)).controllability.controllable);
}
