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
#ifndef COVBRIDGE_ODE_HPP
#define COVBRIDGE_ODE_HPP

#include <algorithm>
#include <cstddef>

#include "covbridge/linalg.hpp"
#include "covbridge/system_model.hpp"

namespace covbridge {

/// One classical fourth-order Runge-Kutta step of X' = f(t, X). A negative
/// `h` integrates backward in time.
template <class Rhs>
Matrix rk4_step(const Rhs& f, double t, const Matrix& x, double h) {
  const Matrix k1 = f(t, x);
  const Matrix k2 = f(t + 0.5 * h, x + (0.5 * h) * k1);
  const Matrix k3 = f(t + 0.5 * h, x + (0.5 * h) * k2);
  const Matrix k4 = f(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Piecewise-cubic Lagrange interpolation of a node schedule.
///
/// RK4 evaluates coefficients at half steps; a cubic through four
/// neighbouring nodes keeps the interpolation error at O(dt^4) so the
/// integrators built on top stay fourth order.
class NodeInterpolant {
 public:
  NodeInterpolant(const TimeGrid& grid, const Schedule& values)
      : grid_(grid), values_(values) {}

  Matrix operator()(double t) const {
    const std::size_t last = grid_.steps;
    const double h = grid_.dt();
    const double s = std::clamp(t / h, 0.0, static_cast<double>(last));
    const auto k = std::min(static_cast<std::size_t>(s), last);
    if (s == static_cast<double>(k)) return values_[k];

    const std::size_t order = std::min<std::size_t>(4, last + 1);
    std::size_t base = k > 0 ? k - 1 : 0;
    base = std::min(base, last + 1 - order);

    Matrix out = Matrix::Zero(values_[k].rows(), values_[k].cols());
    for (std::size_t i = 0; i < order; ++i) {
      double w = 1.0;
      const double xi = static_cast<double>(base + i);
      for (std::size_t j = 0; j < order; ++j) {
        if (j == i) continue;
        const double xj = static_cast<double>(base + j);
        w *= (s - xj) / (xi - xj);
      }
      out += w * values_[base + i];
    }
    return out;
  }

 private:
  const TimeGrid& grid_;
  const Schedule& values_;
};

}  // namespace covbridge

#endif  // COVBRIDGE_ODE_HPP
