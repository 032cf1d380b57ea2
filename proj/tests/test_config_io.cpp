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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "covbridge/commands.hpp"
#include "covbridge/config.hpp"
#include "covbridge/errors.hpp"
#include "covbridge/io.hpp"
#include "json.hpp"

using namespace covbridge;
namespace fs = std::filesystem;

namespace {

const char* kInertial = R"({
  "system": {"kind": "scenario", "scenario": "inertial"},
  "horizon": {"T": 1.0},
  "marginals": {"sigma0": [[1, 0], [0, 1]], "sigmaT": [[0.25, 0], [0, 0.25]]}
})";

std::string config_error_message(const std::string& text) {
  try {
    load_config_text(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config_error);
    return e.what();
  }
  FAIL("expected config_error");
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("covbridge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("load_config applies defaults", "[config]") {
  const auto cfg = load_config_text(kInertial);
  CHECK(cfg.steps == 2000);
  CHECK(cfg.output.tube_level == 3.0);
  CHECK_FALSE(cfg.simulate.has_value());
  CHECK(cfg.sigma_t == 0.25 * Matrix::Identity(2, 2));
  CHECK(build_system(cfg).name() == "inertial");

  auto doc = nlohmann::json::parse(kInertial);
  doc["simulate"] = nlohmann::json::object();
  const auto with_sim = load_config_text(doc.dump());
  REQUIRE(with_sim.simulate);
  CHECK(with_sim.simulate->paths == 10000);
  CHECK(with_sim.simulate->seed == 42);
  CHECK(with_sim.simulate->sim_steps == 4000);
  CHECK(with_sim.simulate->record_stride == 20);
  CHECK(with_sim.simulate->sim_steps / with_sim.simulate->record_stride + 1 <= 201);
}

TEST_CASE("default record stride keeps at most 201 nodes", "[config]") {
  CHECK(default_record_stride(4000) == 20);
  CHECK(default_record_stride(200) == 1);
  CHECK(default_record_stride(2000) == 10);
  CHECK(default_record_stride(201) == 3);  // 201 = 3 * 67 -> 68 nodes
  CHECK(default_record_stride(401) == 401);  // prime
}

TEST_CASE("config errors", "[config]") {
  const std::string bad_json = "{\n  \"system\": {\"kind\": \"scenario\",\n  oops\n}";
  const auto parse_msg = config_error_message(bad_json);
  CHECK(parse_msg.find(":3:") != std::string::npos);

  auto doc = nlohmann::json::parse(kInertial);
  doc["marginals"]["sigma0"] = {{1, 2}, {2, 1}};
  const auto spd_msg = config_error_message(doc.dump());
  CHECK(spd_msg.find("sigma0") != std::string::npos);
  CHECK(spd_msg.find("-1") != std::string::npos);

  doc = nlohmann::json::parse(kInertial);
  doc["marginals"]["sigmaT"] = {{1}};
  CHECK(config_error_message(doc.dump()).find("sigmaT") != std::string::npos);

  doc = nlohmann::json::parse(kInertial);
  doc["system"] = {{"kind", "constant"}, {"A", {{0, 1}, {0, 0}}}, {"B", {{0, 1}}}};
  CHECK(config_error_message(doc.dump()).find("system.B") != std::string::npos);

  doc = nlohmann::json::parse(kInertial);
  doc["horizon"]["T"] = 0;
  config_error_message(doc.dump());

  doc = nlohmann::json::parse(kInertial);
  doc["system"]["scenario"] = "pendulum";
  config_error_message(doc.dump());

  doc = nlohmann::json::parse(kInertial);
  doc["simulate"] = {{"sim_steps", 100}, {"record_stride", 7}};
  config_error_message(doc.dump());
}

TEST_CASE("constant and table systems from config", "[config]") {
  auto doc = nlohmann::json::parse(kInertial);
  doc["system"] = {{"kind", "table"},
                   {"table",
                    {{{"t", 0.0}, {"A", {{0, 1}, {0, 0}}}, {"B", {{0}, {1}}}},
                     {{"t", 0.5}, {"A", {{0, 1}, {-1, 0}}}, {"B", {{0}, {1}}}}}}};
  const auto cfg = load_config_text(doc.dump());
  const auto sys = build_system(cfg);
  CHECK(sys.kind() == SystemKind::table);
  CHECK(eval_system(sys, 0.75).a(1, 0) == -1.0);
  const auto again = load_config_text(config_to_json_text(cfg));
  CHECK(again.system.table.size() == 2);

  doc["system"] = {{"kind", "constant"}, {"A", 0}, {"B", 1}};
  doc["marginals"] = {{"sigma0", 1}, {"sigmaT", 2}};
  const auto scalar = load_config_text(doc.dump());
  CHECK(build_system(scalar).state_dim() == 1);
}

TEST_CASE("scenario templates round-trip and solve", "[config][scenario]") {
  CHECK(scenario_catalog().size() == 5);
  for (const auto& info : scenario_catalog()) {
    const auto cfg = scenario_config(info.name);
    const auto loaded = load_config_text(config_to_json_text(cfg));
    CHECK(loaded.sigma0 == cfg.sigma0);
    CHECK(loaded.sigma_t == cfg.sigma_t);
    CHECK(loaded.steps == cfg.steps);
    REQUIRE(loaded.simulate);
    CHECK(loaded.simulate->display_paths == 10);
    const SolveOutcome res = solve_problem(loaded, RunOptions{});
    CHECK(verify_bridge(res.minus, loaded.sigma0, loaded.sigma_t, 1e-6).passed);
  }
  const auto pos = scenario_config("inertial-pos-squeeze");
  CHECK(pos.sigma_t == Vector{{0.05, 1.0}}.asDiagonal().toDenseMatrix());
  const auto vel = scenario_config("inertial-vel-squeeze");
  CHECK(vel.sigma_t == Vector{{1.0, 0.05}}.asDiagonal().toDenseMatrix());
  const auto rlc = scenario_config("rlc");
  CHECK(rlc.sigma0 == 0.5 * Matrix::Identity(2, 2));
  CHECK(rlc.sigma_t == Matrix::Identity(2, 2) / 16.0);
  CHECK_THROWS_AS(scenario_config("nope"), Error);
}

TEST_CASE("CSV numbers round-trip exactly", "[io]") {
  for (double v : {0.1, 1.0 / 3.0, -2.718281828459045, 1e-300, 6.02214076e23, 0.0}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  const std::vector<double> t{0.0, 0.5};
  const Schedule k{(Matrix(1, 2) << 1.0 / 3.0, -0.1).finished(),
                   (Matrix(1, 2) << 2.0, 1e-17).finished()};
  const std::string csv = schedule_csv(t, k, "K");
  CHECK(csv.rfind("t,K11,K12\n", 0) == 0);
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  std::istringstream cells(row);
  std::string cell;
  std::vector<double> values;
  while (std::getline(cells, cell, ',')) values.push_back(std::strtod(cell.c_str(), nullptr));
  REQUIRE(values.size() == 3);
  CHECK(values[1] == 1.0 / 3.0);
  CHECK(values[2] == -0.1);
  CHECK(matrix_headers("S", 10, 1).back() == "S10_1");
}

TEST_CASE("solve command writes gain, covariance and report", "[commands]") {
  const auto dir = scratch("solve");
  RunOptions opts;
  opts.out = (dir / "out").string();
  std::ostringstream out, err;
  const auto cfg_path = write_config(dir, kInertial);
  REQUIRE(run_command("solve", cfg_path.string(), opts, out, err) == 0);
  const std::string gain = slurp(dir / "out" / "gain.csv");
  CHECK(gain.rfind("t,K11,K12\n", 0) == 0);
  CHECK(slurp(dir / "out" / "covariance.csv").rfind("t,S11,S12,S21,S22\n", 0) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report["residuals"]["passed"].get<bool>());
  CHECK(report["controllability"]["controllable"].get<bool>());
  CHECK(report["controllability"]["margin"].get<double>() > 0.0);
  CHECK_FALSE(report["plus_branch"]["singular_times"].empty());
  CHECK(report["iteration"]["q0_gap"].get<double>() <= 1e-8);
  CHECK(nlohmann::json::parse(slurp(dir / "out" / "schedules.json"))["t"].size() == 2001);
}

TEST_CASE("degenerate target is flagged and emits zero gains", "[commands]") {
  const auto dir = scratch("degenerate");
  auto doc = nlohmann::json::parse(kInertial);
  doc["marginals"]["sigmaT"] = {{7.0 / 3.0, 1.5}, {1.5, 2.0}};
  RunOptions opts;
  opts.out = (dir / "out").string();
  std::ostringstream out, err;
  REQUIRE(run_command("solve", write_config(dir, doc.dump()).string(), opts, out, err) == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  const auto& flags = report["flags"];
  CHECK(std::find(flags.begin(), flags.end(), "degenerate-zero-gain") != flags.end());
  CHECK(report["max_gain_norm"].get<double>() <= 1e-7);
  std::ostringstream vout;
  CHECK(run_command("verify", write_config(dir, doc.dump()).string(), opts, vout, err) == 0);
}

TEST_CASE("exit codes", "[commands]") {
  const auto dir = scratch("exit");
  RunOptions opts;
  opts.out = (dir / "out").string();
  std::ostringstream out, err;

  auto doc = nlohmann::json::parse(kInertial);
  doc["system"] = {{"kind", "constant"}, {"A", {{0, 0}, {0, 0}}}, {"B", {{1}, {0}}}};
  CHECK(run_command("solve", write_config(dir, doc.dump()).string(), opts, out, err) == 2);
  CHECK(err.str().find("not-controllable") != std::string::npos);

  CHECK(run_command("scenario", "no-such-thing", opts, out, err) == 2);
  CHECK(run_command("solve", (dir / "missing.json").string(), opts, out, err) == 2);

  RunOptions corrupt = opts;
  corrupt.gain_scale = 1.1;
  std::ostringstream vout;
  const auto path = write_config(dir, kInertial);
  CHECK(run_command("verify", path.string(), corrupt, vout, err) == 1);
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  CHECK_FALSE(report["checks"][0]["passed"].get<bool>());
  CHECK(report["checks"][0]["name"] == "boundary_residuals");
  CHECK(run_command("verify", path.string(), opts, vout, err) == 0);

  CHECK(exit_code_for(Error(ErrorKind::numerical_failure, "x")) == 3);
  CHECK(exit_code_for(Error(ErrorKind::escape_detected, "x")) == 3);
  CHECK(exit_code_for(Error(ErrorKind::config_error, "x")) == 2);
}

TEST_CASE("simulate command is deterministic across worker counts", "[commands]") {
  const auto dir = scratch("simulate");
  auto doc = nlohmann::json::parse(kInertial);
  doc["simulate"] = {{"paths", 500}, {"seed", 42}, {"sim_steps", 400}};
  const auto path = write_config(dir, doc.dump());
  std::ostringstream out, err;
  RunOptions a;
  a.out = (dir / "a").string();
  a.workers = 1;
  RunOptions b;
  b.out = (dir / "b").string();
  b.workers = 4;
  REQUIRE(run_command("simulate", path.string(), a, out, err) == 0);
  REQUIRE(run_command("simulate", path.string(), b, out, err) == 0);
  const std::string pa = slurp(dir / "a" / "paths.csv");
  CHECK(pa == slurp(dir / "b" / "paths.csv"));
  CHECK(pa.rfind("path_id,t,x1,x2,u1\n", 0) == 0);
  CHECK(slurp(dir / "a" / "tube.csv").rfind("t,level,S11,S12,S21,S22\n", 0) == 0);
  const auto emp = nlohmann::json::parse(slurp(dir / "a" / "empirical.json"));
  CHECK(emp["paths"] == 500);
  CHECK(emp.contains("terminal_covariance"));

  // Without a simulate block the command refuses.
  CHECK(run_command("simulate", write_config(dir, kInertial).string(), a, out, err) == 2);
}

TEST_CASE("overrides and output directory resolution", "[commands]") {
  auto cfg = load_config_text(kInertial);
  RunOptions opts;
  opts.steps = 500;
  opts.paths = 123;
  opts.seed = 7;
  apply_overrides(cfg, opts);
  CHECK(cfg.steps == 500);
  REQUIRE(cfg.simulate);
  CHECK(cfg.simulate->paths == 123);
  CHECK(cfg.simulate->seed == 7);

  ProblemConfig plain = load_config_text(kInertial);
  ::setenv("COVBRIDGE_OUT", "/tmp/from_env", 1);
  CHECK(resolve_output_dir(plain, RunOptions{}) == fs::path("/tmp/from_env"));
  plain.output.dir = "from_config";
  CHECK(resolve_output_dir(plain, RunOptions{}) == fs::path("from_config"));
  RunOptions flag;
  flag.out = "from_flag";
  CHECK(resolve_output_dir(plain, flag) == fs::path("from_flag"));
  ::unsetenv("COVBRIDGE_OUT");
}
