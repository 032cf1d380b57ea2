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
#ifndef COVBRIDGE_ERRORS_HPP
#define COVBRIDGE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covbridge {

enum class ErrorKind {
  invalid_argument,
  out_of_range,
  numerical_failure,
  not_controllable,
  escape_detected,
  infeasible_coupling,
  config_error,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown when a Riccati schedule leaves every bounded set inside the horizon.
class FiniteEscape : public Error {
 public:
  FiniteEscape(std::size_t last_valid_node, double last_valid_time,
               const std::string& message)
      : Error(ErrorKind::escape_detected, message),
        last_valid_node_(last_valid_node),
        last_valid_time_(last_valid_time) {}

  std::size_t last_valid_node() const noexcept { return last_valid_node_; }
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  std::size_t last_valid_node_;
  double last_valid_time_;
};

}  // namespace covbridge

#endif  // COVBRIDGE_ERRORS_HPP
