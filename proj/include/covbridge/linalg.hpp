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
#ifndef COVBRIDGE_LINALG_HPP
#define COVBRIDGE_LINALG_HPP

#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace covbridge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One matrix per time-grid node.
using Schedule = std::vector<Matrix>;

/// Largest reciprocal condition number treated as singular by checked_inverse.
inline constexpr double kMinReciprocalCondition = 1e-14;

Matrix symmetrize(const Matrix& x);

/// ||X - X'||_F / max(1, ||X||_F).
double relative_asymmetry(const Matrix& x);

/// Eigenvalues of the symmetric part of `x`, ascending.
Vector symmetric_eigenvalues(const Matrix& x);

double lambda_min(const Matrix& x);
double lambda_max(const Matrix& x);

/// Smallest |eigenvalue| of the symmetric part of `x`.
double min_abs_eigenvalue(const Matrix& x);

/// True when `x` is square, symmetric to `rel_tol` and Cholesky-factorizable.
bool is_spd(const Matrix& x, double rel_tol = 1e-12);

/// Principal square root of a symmetric positive semidefinite matrix.
///
/// Uses a symmetric eigendecomposition; eigenvalues are clamped at zero so
/// round-off negatives do not produce NaNs. Throws invalid_argument when the
/// input is not symmetric (relative tolerance 1e-10) or has an eigenvalue
/// clearly below zero.
Matrix sqrtm_spd(const Matrix& x);

/// Inverse of the principal square root of an SPD matrix.
Matrix inv_sqrtm_spd(const Matrix& x);

/// LU inverse guarded by a reciprocal-condition estimate.
///
/// Throws numerical_failure (naming `what`) if rcond < 1e-14 or the result
/// has non-finite entries.
Matrix checked_inverse(const Matrix& x, std::string_view what);

/// Inverse of an SPD matrix through its Cholesky factor; same guard as
/// checked_inverse.
Matrix spd_inverse(const Matrix& x, std::string_view what);

/// log det of an SPD matrix as twice the sum of log diag(L) of its Cholesky
/// factor. Throws invalid_argument if `x` is not SPD.
double logdet_spd(const Matrix& x);

bool all_finite(const Matrix& x);

/// Validates that `x` is a square symmetric positive-definite matrix and
/// throws invalid_argument naming `what` otherwise.
void require_spd(const Matrix& x, std::string_view what);

}  // namespace covbridge

#endif  // COVBRIDGE_LINALG_HPP
