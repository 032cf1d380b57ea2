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
#ifndef COVBRIDGE_COMMANDS_HPP
#define COVBRIDGE_COMMANDS_HPP

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"

#include "covbridge/bridge_solver.hpp"
#include "covbridge/config.hpp"
#include "covbridge/system_model.hpp"

namespace covbridge {

/// Process exit codes; a stable contract for scripts.
enum class ExitCode : int {
  ok = 0,
  verify_failed = 1,
  input_error = 2,
  numerical_failure = 3,
};

int exit_code_for(const std::exception& e) noexcept;

/// Command-line overrides applied on top of a loaded config.
struct RunOptions {
  std::optional<std::int64_t> steps;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned workers = 1;
  /// Multiplies Pi (and so the gain) after solving. Test hook only.
  double gain_scale = 1.0;
};

void apply_overrides(ProblemConfig& cfg, const RunOptions& opts);

/// --out, then output.dir, then $COVBRIDGE_OUT, then "covbridge_out".
std::filesystem::path resolve_output_dir(const ProblemConfig& cfg, const RunOptions& opts);

/// Everything computed by a solve, kept for simulate and verify.
struct SolveOutcome {
  explicit SolveOutcome(LtvSystem system) : sys(std::move(system)) {}

  LtvSystem sys;
  SystemSchedules schedules;
  BridgeSolution minus;
  std::optional<BridgeSolution> plus;
  std::string plus_error;
  IterationResult iteration;
  /// Relative gaps between the closed form and the fixed-point iteration.
  double iteration_q_gap = 0.0;
  double iteration_p_gap = 0.0;
  double max_gain_norm = 0.0;
  bool degenerate_zero_gain = false;
};

/// Builds the system and solves both branches. Throws not_controllable when
/// M(T,0) fails the controllability test.
SolveOutcome solve_problem(const ProblemConfig& cfg, const RunOptions& opts);

nlohmann::json solve_report(const ProblemConfig& cfg, const SolveOutcome& outcome);

/// Runs every check; `passed` is the conjunction.
nlohmann::json verify_report(const ProblemConfig& cfg, const SolveOutcome& outcome, bool& passed);

int cmd_solve(const ProblemConfig& cfg, const RunOptions& opts, std::ostream& out);
int cmd_simulate(const ProblemConfig& cfg, const RunOptions& opts, std::ostream& out);
int cmd_verify(const ProblemConfig& cfg, const RunOptions& opts, std::ostream& out);
int cmd_scenario(const std::string& name, const RunOptions& opts, std::ostream& out);

/// Loads `config_path` (or takes a scenario name for "scenario"), dispatches,
/// and turns exceptions into diagnostics on `err` plus an exit code.
int run_command(const std::string& command, const std::string& argument, const RunOptions& opts,
                std::ostream& out, std::ostream& err);

}  // namespace covbridge

#endif  // COVBRIDGE_COMMANDS_HPP
