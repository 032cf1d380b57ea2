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
#ifndef COVBRIDGE_CONFIG_HPP
#define COVBRIDGE_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covbridge/linalg.hpp"
#include "covbridge/system_model.hpp"

namespace covbridge {

struct SystemSpec {
  SystemKind kind = SystemKind::scenario;
  /// Constant kind.
  Matrix a;
  Matrix b;
  /// Scenario kind: "inertial", "rlc" or "brownian-scalar".
  std::string scenario;
  double resistance = 1.0;
  double inductance = 1.0;
  double capacitance = 1.0;
  /// Table kind.
  std::vector<TableEntry> table;
};

struct SimulateSpec {
  std::size_t paths = 10000;
  std::uint64_t seed = 42;
  std::size_t sim_steps = 4000;
  std::size_t record_stride = 0;  // 0 until resolved
  /// Paths written to paths.csv; statistics always use all of them.
  std::size_t display_paths = 10;
};

struct OutputSpec {
  std::string dir;
  bool csv = true;
  bool json = true;
  double tube_level = 3.0;
};

struct ProblemConfig {
  std::string name;
  SystemSpec system;
  double horizon = 1.0;
  std::int64_t steps = 2000;
  Matrix sigma0;
  Matrix sigma_t;
  std::optional<SimulateSpec> simulate;
  OutputSpec output;
  double verify_tol = 1e-6;
};

inline constexpr std::int64_t kDefaultSteps = 2000;
inline constexpr std::size_t kMaxRecordedNodes = 201;

/// Smallest divisor s of `steps` with steps / s + 1 <= max_nodes.
std::size_t default_record_stride(std::size_t steps, std::size_t max_nodes = kMaxRecordedNodes);

/// Parses and validates a JSON problem description. Every failure is a
/// config_error; parse errors carry the line and column.
ProblemConfig load_config_text(std::string_view text, std::string_view origin = "<text>");
ProblemConfig load_config_file(const std::string& path);

/// Inverse of load_config_text for the fields a template needs.
std::string config_to_json_text(const ProblemConfig& cfg);

LtvSystem build_system(const ProblemConfig& cfg);

/// Re-checks a config after programmatic edits (dimensions, SPD marginals,
/// simulation block).
void validate_config(ProblemConfig& cfg);

struct ScenarioInfo {
  std::string name;
  std::string description;
};

const std::vector<ScenarioInfo>& scenario_catalog();

/// Ready-to-run template; invalid_argument for an unknown name.
ProblemConfig scenario_config(std::string_view name);

}  // namespace covbridge

#endif  // COVBRIDGE_CONFIG_HPP
