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
#include "covbridge/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "covbridge/errors.hpp"

namespace covbridge {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::config_error, msg); }

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where + ": value is not finite");
  return v;
}

std::uint64_t unsigned_at(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + ": expected an integer");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = j.get<std::int64_t>();
  if (v < 0) fail(where + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

/// A number is accepted as a 1x1 matrix.
Matrix matrix_at(const json& j, const std::string& where) {
  if (j.is_number()) return Matrix::Constant(1, 1, number_at(j, where));
  if (!j.is_array() || j.empty()) fail(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) fail(where + ": rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(where + ": row " + std::to_string(r) + " has the wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = number_at(row[static_cast<std::size_t>(c)],
                            where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return out;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

const json& required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where + ": missing field \"" + key + "\"");
  return *it;
}

void check_spd_marginal(const Matrix& s, const std::string& what, Eigen::Index n) {
  if (s.rows() != n || s.cols() != n) {
    fail(what + ": expected " + std::to_string(n) + "x" + std::to_string(n) + ", got " +
         std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  }
  if (relative_asymmetry(s) > 1e-12) fail(what + " is not symmetric");
  const double lmin = lambda_min(s);
  if (!(lmin > 0.0)) {
    std::ostringstream msg;
    msg << what << " is not positive definite: eigenvalue " << lmin << " <= 0";
    fail(msg.str());
  }
}

SystemSpec parse_system(const json& j) {
  if (!j.is_object()) fail("system: expected an object");
  SystemSpec spec;
  const json& kind = required(j, "kind", "system");
  if (!kind.is_string()) fail("system.kind: expected a string");
  const std::string k = kind.get<std::string>();
  if (k == "constant") {
    spec.kind = SystemKind::constant;
    spec.a = matrix_at(required(j, "A", "system"), "system.A");
    spec.b = matrix_at(required(j, "B", "system"), "system.B");
  } else if (k == "scenario") {
    spec.kind = SystemKind::scenario;
    const json& name = required(j, "scenario", "system");
    if (!name.is_string()) fail("system.scenario: expected a string");
    spec.scenario = name.get<std::string>();
    if (spec.scenario != "inertial" && spec.scenario != "rlc" &&
        spec.scenario != "brownian-scalar") {
      fail("system.scenario: unknown scenario \"" + spec.scenario + "\"");
    }
    if (auto it = j.find("params"); it != j.end()) {
      if (!it->is_object()) fail("system.params: expected an object");
      if (it->contains("R")) spec.resistance = number_at((*it)["R"], "system.params.R");
      if (it->contains("L")) spec.inductance = number_at((*it)["L"], "system.params.L");
      if (it->contains("C")) spec.capacitance = number_at((*it)["C"], "system.params.C");
      if (spec.resistance <= 0.0 || spec.inductance <= 0.0 || spec.capacitance <= 0.0) {
        fail("system.params: R, L and C must be positive");
      }
    }
  } else if (k == "table") {
    spec.kind = SystemKind::table;
    const json& rows = required(j, "table", "system");
    if (!rows.is_array() || rows.empty()) fail("system.table: expected a non-empty array");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string where = "system.table[" + std::to_string(i) + "]";
      if (!rows[i].is_object()) fail(where + ": expected an object");
      TableEntry e;
      e.t = number_at(required(rows[i], "t", where), where + ".t");
      e.a = matrix_at(required(rows[i], "A", where), where + ".A");
      e.b = matrix_at(required(rows[i], "B", where), where + ".B");
      spec.table.push_back(std::move(e));
    }
  } else {
    fail("system.kind: expected \"constant\", \"scenario\" or \"table\", got \"" + k + "\"");
  }
  return spec;
}

std::pair<Eigen::Index, Eigen::Index> system_dims(const SystemSpec& spec) {
  switch (spec.kind) {
    case SystemKind::constant:
      return {spec.a.rows(), spec.b.cols()};
    case SystemKind::table:
      return {spec.table.front().a.rows(), spec.table.front().b.cols()};
    case SystemKind::scenario:
      if (spec.scenario == "brownian-scalar") return {1, 1};
      return {2, 1};
  }
  return {0, 0};
}

void check_system_shapes(const SystemSpec& spec) {
  auto check = [](const Matrix& a, const Matrix& b, const std::string& where,
                  Eigen::Index n, Eigen::Index m) {
    if (a.rows() != a.cols()) fail(where + ".A must be square");
    if (a.rows() != n) fail(where + ".A has " + std::to_string(a.rows()) + " rows, expected " +
                            std::to_string(n));
    if (b.rows() != n) fail(where + ".B has " + std::to_string(b.rows()) + " rows, expected " +
                            std::to_string(n));
    if (b.cols() != m) fail(where + ".B has " + std::to_string(b.cols()) + " columns, expected " +
                            std::to_string(m));
  };
  const auto [n, m] = system_dims(spec);
  if (spec.kind == SystemKind::constant) check(spec.a, spec.b, "system", n, m);
  if (spec.kind == SystemKind::table) {
    for (std::size_t i = 0; i < spec.table.size(); ++i) {
      check(spec.table[i].a, spec.table[i].b, "system.table[" + std::to_string(i) + "]", n, m);
    }
  }
}

const char* kind_name(SystemKind kind) {
  switch (kind) {
    case SystemKind::constant: return "constant";
    case SystemKind::scenario: return "scenario";
    case SystemKind::table: return "table";
  }
  return "?";
}

}  // namespace

std::size_t default_record_stride(std::size_t steps, std::size_t max_nodes) {
  if (steps == 0 || max_nodes < 2) {
    throw Error(ErrorKind::invalid_argument, "default_record_stride: bad arguments");
  }
  for (std::size_t s = 1; s <= steps; ++s) {
    if (steps % s == 0 && steps / s + 1 <= max_nodes) return s;
  }
  return steps;
}

void validate_config(ProblemConfig& cfg) {
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) fail("horizon.T must be positive");
  if (cfg.steps < 2) fail("horizon.steps must be at least 2");
  check_system_shapes(cfg.system);
  if (cfg.system.kind == SystemKind::table && cfg.system.table.back().t > cfg.horizon) {
    fail("system.table: row time beyond the horizon");
  }
  const auto n = system_dims(cfg.system).first;
  check_spd_marginal(cfg.sigma0, "marginals.sigma0", n);
  check_spd_marginal(cfg.sigma_t, "marginals.sigmaT", n);
  if (cfg.simulate) {
    auto& sim = *cfg.simulate;
    if (sim.sim_steps == 0) fail("simulate.sim_steps must be positive");
    if (sim.record_stride == 0) sim.record_stride = default_record_stride(sim.sim_steps);
    if (sim.sim_steps % sim.record_stride != 0) {
      fail("simulate.record_stride must divide simulate.sim_steps");
    }
  }
  if (!(cfg.output.tube_level > 0.0)) fail("output.tube_level must be positive");
  if (!(cfg.verify_tol > 0.0)) fail("verify.tol must be positive");
}

ProblemConfig load_config_text(std::string_view text, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << col << ": parse error: " << e.what();
    fail(msg.str());
  }
  if (!doc.is_object()) fail(std::string(origin) + ": top level must be an object");

  ProblemConfig cfg;
  try {
    if (auto it = doc.find("name"); it != doc.end() && it->is_string()) {
      cfg.name = it->get<std::string>();
    }
    cfg.system = parse_system(required(doc, "system", "config"));

    const json& horizon = required(doc, "horizon", "config");
    if (!horizon.is_object()) fail("horizon: expected an object");
    cfg.horizon = number_at(required(horizon, "T", "horizon"), "horizon.T");
    if (auto it = horizon.find("steps"); it != horizon.end()) {
      if (!it->is_number_integer()) fail("horizon.steps: expected an integer");
      cfg.steps = it->get<std::int64_t>();
    }

    const json& marg = required(doc, "marginals", "config");
    if (!marg.is_object()) fail("marginals: expected an object");
    cfg.sigma0 = matrix_at(required(marg, "sigma0", "marginals"), "marginals.sigma0");
    cfg.sigma_t = matrix_at(required(marg, "sigmaT", "marginals"), "marginals.sigmaT");

    if (auto it = doc.find("simulate"); it != doc.end() && !it->is_null()) {
      if (!it->is_object()) fail("simulate: expected an object");
      SimulateSpec sim;
      if (it->contains("paths")) sim.paths = unsigned_at((*it)["paths"], "simulate.paths");
      if (it->contains("seed")) sim.seed = unsigned_at((*it)["seed"], "simulate.seed");
      if (it->contains("sim_steps")) {
        sim.sim_steps = unsigned_at((*it)["sim_steps"], "simulate.sim_steps");
      }
      if (it->contains("record_stride")) {
        sim.record_stride = unsigned_at((*it)["record_stride"], "simulate.record_stride");
        if (sim.record_stride == 0) fail("simulate.record_stride must be positive");
      }
      if (it->contains("display_paths")) {
        sim.display_paths = unsigned_at((*it)["display_paths"], "simulate.display_paths");
      }
      cfg.simulate = sim;
    }

    if (auto it = doc.find("output"); it != doc.end()) {
      if (!it->is_object()) fail("output: expected an object");
      if (auto d = it->find("dir"); d != it->end()) {
        if (!d->is_string()) fail("output.dir: expected a string");
        cfg.output.dir = d->get<std::string>();
      }
      if (auto f = it->find("formats"); f != it->end()) {
        if (!f->is_array()) fail("output.formats: expected an array");
        cfg.output.csv = false;
        cfg.output.json = false;
        for (const auto& item : *f) {
          const std::string v = item.is_string() ? item.get<std::string>() : "";
          if (v == "csv") {
            cfg.output.csv = true;
          } else if (v == "json") {
            cfg.output.json = true;
          } else {
            fail("output.formats: entries must be \"csv\" or \"json\"");
          }
        }
      }
      if (it->contains("tube_level")) {
        cfg.output.tube_level = number_at((*it)["tube_level"], "output.tube_level");
      }
    }

    if (auto it = doc.find("verify"); it != doc.end()) {
      if (!it->is_object()) fail("verify: expected an object");
      if (it->contains("tol")) cfg.verify_tol = number_at((*it)["tol"], "verify.tol");
    }
  } catch (const json::exception& e) {
    fail(std::string(origin) + ": " + e.what());
  }

  try {
    validate_config(cfg);
  } catch (const Error& e) {
    fail(std::string(origin) + ": " + e.what());
  }
  return cfg;
}

ProblemConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str(), path);
}

std::string config_to_json_text(const ProblemConfig& cfg) {
  json doc;
  if (!cfg.name.empty()) doc["name"] = cfg.name;
  json sys;
  sys["kind"] = kind_name(cfg.system.kind);
  switch (cfg.system.kind) {
    case SystemKind::constant:
      sys["A"] = matrix_json(cfg.system.a);
      sys["B"] = matrix_json(cfg.system.b);
      break;
    case SystemKind::scenario:
      sys["scenario"] = cfg.system.scenario;
      if (cfg.system.scenario == "rlc") {
        sys["params"] = {{"R", cfg.system.resistance},
                         {"L", cfg.system.inductance},
                         {"C", cfg.system.capacitance}};
      }
      break;
    case SystemKind::table: {
      json rows = json::array();
      for (const auto& e : cfg.system.table) {
        rows.push_back({{"t", e.t}, {"A", matrix_json(e.a)}, {"B", matrix_json(e.b)}});
      }
      sys["table"] = std::move(rows);
      break;
    }
  }
  doc["system"] = std::move(sys);
  doc["horizon"] = {{"T", cfg.horizon}, {"steps", cfg.steps}};
  doc["marginals"] = {{"sigma0", matrix_json(cfg.sigma0)}, {"sigmaT", matrix_json(cfg.sigma_t)}};
  if (cfg.simulate) {
    const auto& s = *cfg.simulate;
    doc["simulate"] = {{"paths", s.paths},
                       {"seed", s.seed},
                       {"sim_steps", s.sim_steps},
                       {"record_stride", s.record_stride},
                       {"display_paths", s.display_paths}};
  }
  json out;
  if (!cfg.output.dir.empty()) out["dir"] = cfg.output.dir;
  json formats = json::array();
  if (cfg.output.csv) formats.push_back("csv");
  if (cfg.output.json) formats.push_back("json");
  out["formats"] = std::move(formats);
  out["tube_level"] = cfg.output.tube_level;
  doc["output"] = std::move(out);
  doc["verify"] = {{"tol", cfg.verify_tol}};
  return doc.dump(2) + "\n";
}

LtvSystem build_system(const ProblemConfig& cfg) {
  const SystemSpec& s = cfg.system;
  switch (s.kind) {
    case SystemKind::constant:
      return LtvSystem::constant(s.a, s.b, cfg.horizon);
    case SystemKind::table:
      return LtvSystem::piecewise_constant(s.table, cfg.horizon);
    case SystemKind::scenario:
      if (s.scenario == "inertial") return LtvSystem::inertial(cfg.horizon);
      if (s.scenario == "rlc") {
        return LtvSystem::rlc(cfg.horizon, s.resistance, s.inductance, s.capacitance);
      }
      if (s.scenario == "brownian-scalar") return LtvSystem::brownian_scalar(cfg.horizon);
      break;
  }
  fail("unknown system \"" + s.scenario + "\"");
}

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> catalog = {
      {"inertial", "double integrator, Sigma0 = I to SigmaT = I/4 over T = 1"},
      {"inertial-pos-squeeze", "double integrator, Sigma0 = I to SigmaT = diag(0.05, 1)"},
      {"inertial-vel-squeeze", "double integrator, Sigma0 = I to SigmaT = diag(1, 0.05)"},
      {"rlc", "RLC circuit (R = L = C = 1), Sigma0 = I/2 to SigmaT = I/16"},
      {"brownian-scalar", "scalar Brownian motion, Sigma0 = SigmaT = 1"},
  };
  return catalog;
}

ProblemConfig scenario_config(std::string_view name) {
  ProblemConfig cfg;
  cfg.name = std::string(name);
  cfg.horizon = 1.0;
  cfg.steps = kDefaultSteps;
  cfg.simulate = SimulateSpec{};
  const Matrix eye2 = Matrix::Identity(2, 2);
  if (name == "inertial" || name == "inertial-pos-squeeze" || name == "inertial-vel-squeeze") {
    cfg.system.scenario = "inertial";
    cfg.sigma0 = eye2;
    if (name == "inertial") {
      cfg.sigma_t = 0.25 * eye2;
    } else if (name == "inertial-pos-squeeze") {
      cfg.sigma_t = Vector{{0.05, 1.0}}.asDiagonal();
    } else {
      cfg.sigma_t = Vector{{1.0, 0.05}}.asDiagonal();
    }
  } else if (name == "rlc") {
    cfg.system.scenario = "rlc";
    cfg.sigma0 = 0.5 * eye2;
    cfg.sigma_t = eye2 / 16.0;
  } else if (name == "brownian-scalar") {
    cfg.system.scenario = "brownian-scalar";
    cfg.sigma0 = Matrix::Ones(1, 1);
    cfg.sigma_t = Matrix::Ones(1, 1);
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown scenario \"" + std::string(name) + "\"");
  }
  validate_config(cfg);
  return cfg;
}

}  // namespace covbridge
