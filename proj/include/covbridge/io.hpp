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
#ifndef COVBRIDGE_IO_HPP
#define COVBRIDGE_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "covbridge/linalg.hpp"
#include "covbridge/sde_sim.hpp"

namespace covbridge {

/// Shortest-safe decimal form: 17 significant digits, round-trips exactly.
std::string format_double(double value);

/// Column names for a flattened matrix, row-major: K11, K12, ... (with an
/// underscore separator once an index reaches 10).
std::vector<std::string> matrix_headers(const std::string& prefix, Eigen::Index rows,
                                        Eigen::Index cols);

/// Rows "t, X11, X12, ..." for a schedule on the given times.
std::string schedule_csv(const std::vector<double>& times, const Schedule& sched,
                         const std::string& prefix);

/// Rows "path_id, t, x1..xn, u1..um" for the first `max_paths` paths.
std::string paths_csv(const PathEnsemble& ens, std::size_t max_paths);

/// Rows "t, level, S11, ..." on every `stride`-th node.
std::string tube_csv(const std::vector<double>& times, const Schedule& sigma, double level,
                     std::size_t stride);

nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json schedule_to_json(const Schedule& sched);

/// Writes `content` to dir/name, creating dir. Returns the full path.
std::filesystem::path write_output(const std::filesystem::path& dir, const std::string& name,
                                   const std::string& content);

}  // namespace covbridge

#endif  // COVBRIDGE_IO_HPP
