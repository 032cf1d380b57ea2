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
#include "covbridge/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "covbridge/errors.hpp"

namespace covbridge {

std::string format_double(double value) {
  if (value == 0.0) return std::signbit(value) ? "-0" : "0";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::vector<std::string> matrix_headers(const std::string& prefix, Eigen::Index rows,
                                        Eigen::Index cols) {
  const bool wide = rows >= 10 || cols >= 10;
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(rows * cols));
  for (Eigen::Index r = 1; r <= rows; ++r) {
    for (Eigen::Index c = 1; c <= cols; ++c) {
      out.push_back(prefix + std::to_string(r) + (wide ? "_" : "") + std::to_string(c));
    }
  }
  return out;
}

namespace {

void append_row_major(std::string& line, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      line += ',';
      line += format_double(m(r, c));
    }
  }
}

std::string join_header(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) out += ',';
    out += cols[i];
  }
  return out + '\n';
}

}  // namespace

std::string schedule_csv(const std::vector<double>& times, const Schedule& sched,
                         const std::string& prefix) {
  if (times.size() != sched.size() || sched.empty()) {
    throw Error(ErrorKind::invalid_argument, "schedule_csv: times and schedule differ in length");
  }
  std::vector<std::string> cols{"t"};
  const auto h = matrix_headers(prefix, sched.front().rows(), sched.front().cols());
  cols.insert(cols.end(), h.begin(), h.end());
  std::string out = join_header(cols);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::string line = format_double(times[k]);
    append_row_major(line, sched[k]);
    out += line;
    out += '\n';
  }
  return out;
}

std::string paths_csv(const PathEnsemble& ens, std::size_t max_paths) {
  std::vector<std::string> cols{"path_id", "t"};
  const Eigen::Index n = ens.states.empty() ? 0 : ens.states.front().rows();
  const Eigen::Index m = ens.has_controls() && !ens.controls.empty() ? ens.controls.front().rows() : 0;
  for (Eigen::Index i = 1; i <= n; ++i) cols.push_back("x" + std::to_string(i));
  for (Eigen::Index i = 1; i <= m; ++i) cols.push_back("u" + std::to_string(i));
  std::string out = join_header(cols);
  const std::size_t count = std::min(max_paths, ens.states.size());
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t k = 0; k < ens.times.size(); ++k) {
      std::string line = std::to_string(p) + ',' + format_double(ens.times[k]);
      const auto col = static_cast<Eigen::Index>(k);
      for (Eigen::Index i = 0; i < n; ++i) {
        line += ',';
        line += format_double(ens.states[p](i, col));
      }
      for (Eigen::Index i = 0; i < m; ++i) {
        line += ',';
        line += format_double(ens.controls[p](i, col));
      }
      out += line;
      out += '\n';
    }
  }
  return out;
}

std::string tube_csv(const std::vector<double>& times, const Schedule& sigma, double level,
                     std::size_t stride) {
  if (times.size() != sigma.size() || sigma.empty() || stride == 0) {
    throw Error(ErrorKind::invalid_argument, "tube_csv: bad schedule or stride");
  }
  std::vector<std::string> cols{"t", "level"};
  const auto h = matrix_headers("S", sigma.front().rows(), sigma.front().cols());
  cols.insert(cols.end(), h.begin(), h.end());
  std::string out = join_header(cols);
  const std::string lvl = format_double(level);
  for (std::size_t k = 0; k < times.size(); k += stride) {
    std::string line = format_double(times[k]) + ',' + lvl;
    append_row_major(line, sigma[k]);
    out += line;
    out += '\n';
  }
  return out;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json schedule_to_json(const Schedule& sched) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : sched) out.push_back(matrix_to_json(m));
  return out;
}

std::filesystem::path write_output(const std::filesystem::path& dir, const std::string& name,
                                   const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::invalid_argument,
                "cannot create output directory " + dir.string() + ": " + ec.message());
  }
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::invalid_argument, "write failed for " + path.string());
  return path;
}

}  // namespace covbridge
