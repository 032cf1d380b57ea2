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
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "covbridge/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Minimum-energy covariance steering for linear time-varying stochastic systems"};
  app.require_subcommand(1);

  covbridge::RunOptions opts;
  std::int64_t steps = 0;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string argument;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--steps", steps, "solver grid intervals")->check(CLI::PositiveNumber);
    sub->add_option("--paths", paths, "Monte Carlo paths");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out, "output directory (default: config, then $COVBRIDGE_OUT)");
    sub->add_option("--workers", opts.workers, "simulation threads")->check(CLI::PositiveNumber);
    sub->add_option("--gain-scale", opts.gain_scale)->group("");  // test hook
  };

  auto* solve = app.add_subcommand("solve", "solve for the optimal gain schedule");
  auto* simulate = app.add_subcommand("simulate", "solve, then simulate the controlled process");
  auto* verify = app.add_subcommand("verify", "solve and run every optimality check");
  for (auto* sub : {solve, simulate, verify}) {
    sub->add_option("config", argument, "problem config (JSON)")->required();
    add_common(sub);
  }
  auto* scenario = app.add_subcommand("scenario", "list scenarios or print a template config");
  scenario->add_option("name", argument, "scenario name or \"list\"")->required();
  add_common(scenario);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(covbridge::ExitCode::input_error);
  }

  auto* chosen = app.get_subcommands().front();
  if (chosen->count("--steps") > 0) opts.steps = steps;
  if (chosen->count("--paths") > 0) opts.paths = paths;
  if (chosen->count("--seed") > 0) opts.seed = seed;
  if (chosen->count("--out") > 0) opts.out = out;
  return covbridge::run_command(chosen->get_name(), argument, opts, std::cout, std::cerr);
}
