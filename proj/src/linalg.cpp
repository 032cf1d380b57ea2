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
#include "covbridge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "covbridge/errors.hpp"

namespace covbridge {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::not_controllable: return "not-controllable";
    case ErrorKind::escape_detected: return "escape-detected";
    case ErrorKind::infeasible_coupling: return "infeasible-coupling";
    case ErrorKind::config_error: return "config-error";
  }
  return "unknown";
}

Matrix symmetrize(const Matrix& x) { return 0.5 * (x + x.transpose()); }

double relative_asymmetry(const Matrix& x) {
  if (x.rows() != x.cols()) return std::numeric_limits<double>::infinity();
  return (x - x.transpose()).norm() / std::max(1.0, x.norm());
}

Vector symmetric_eigenvalues(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(x), Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

double lambda_min(const Matrix& x) { return symmetric_eigenvalues(x).minCoeff(); }

double lambda_max(const Matrix& x) { return symmetric_eigenvalues(x).maxCoeff(); }

double min_abs_eigenvalue(const Matrix& x) {
  return symmetric_eigenvalues(x).cwiseAbs().minCoeff();
}

bool is_spd(const Matrix& x, double rel_tol) {
  if (x.rows() == 0 || x.rows() != x.cols() || !all_finite(x)) return false;
  if (relative_asymmetry(x) > rel_tol) return false;
  Eigen::LLT<Matrix> llt(symmetrize(x));
  return llt.info() == Eigen::Success && lambda_min(x) > 0.0;
}

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> psd_eigen(const Matrix& x, const char* op) {
  if (x.rows() != x.cols()) {
    throw Error(ErrorKind::invalid_argument, std::string(op) + ": matrix is not square");
  }
  if (relative_asymmetry(x) > 1e-10) {
    throw Error(ErrorKind::invalid_argument, std::string(op) + ": matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(x));
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical_failure, std::string(op) + ": eigendecomposition failed");
  }
  const Vector& values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -1e-10 * scale) {
    std::ostringstream msg;
    msg << op << ": matrix has negative eigenvalue " << values.minCoeff();
    throw Error(ErrorKind::invalid_argument, msg.str());
  }
  return eig;
}

}  // namespace

Matrix sqrtm_spd(const Matrix& x) {
  const auto eig = psd_eigen(x, "sqrtm_spd");
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& v = eig.eigenvectors();
  return symmetrize(v * roots.asDiagonal() * v.transpose());
}

Matrix inv_sqrtm_spd(const Matrix& x) {
  const auto eig = psd_eigen(x, "inv_sqrtm_spd");
  const Vector& values = eig.eigenvalues();
  if (values.minCoeff() <= 0.0) {
    throw Error(ErrorKind::numerical_failure, "inv_sqrtm_spd: matrix is singular");
  }
  const Vector inv_roots = values.cwiseSqrt().cwiseInverse();
  const Matrix& v = eig.eigenvectors();
  return symmetrize(v * inv_roots.asDiagonal() * v.transpose());
}

Matrix checked_inverse(const Matrix& x, std::string_view what) {
  if (x.rows() != x.cols() || x.rows() == 0) {
    throw Error(ErrorKind::invalid_argument, std::string(what) + ": cannot invert non-square matrix");
  }
  if (!all_finite(x)) {
    throw Error(ErrorKind::numerical_failure, std::string(what) + ": non-finite entries");
  }
  Eigen::PartialPivLU<Matrix> lu(x);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinReciprocalCondition)) {
    std::ostringstream msg;
    msg << what << ": matrix is numerically singular (rcond " << rcond << ")";
    throw Error(ErrorKind::numerical_failure, msg.str());
  }
  Matrix inv = lu.inverse();
  if (!all_finite(inv)) {
    throw Error(ErrorKind::numerical_failure, std::string(what) + ": inverse is not finite");
  }
  return inv;
}

Matrix spd_inverse(const Matrix& x, std::string_view what) {
  Eigen::LLT<Matrix> llt(symmetrize(x));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical_failure, std::string(what) + ": matrix is not positive definite");
  }
  if (!(llt.rcond() >= kMinReciprocalCondition)) {
    throw Error(ErrorKind::numerical_failure, std::string(what) + ": matrix is numerically singular");
  }
  return symmetrize(llt.solve(Matrix::Identity(x.rows(), x.cols())));
}

double logdet_spd(const Matrix& x) {
  if (x.rows() != x.cols() || relative_asymmetry(x) > 1e-10) {
    throw Error(ErrorKind::invalid_argument, "logdet_spd: matrix is not symmetric");
  }
  Eigen::LLT<Matrix> llt(symmetrize(x));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::invalid_argument, "logdet_spd: matrix is not positive definite");
  }
  const Matrix l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

bool all_finite(const Matrix& x) { return x.allFinite(); }

void require_spd(const Matrix& x, std::string_view what) {
  if (x.rows() == 0 || x.rows() != x.cols()) {
    throw Error(ErrorKind::invalid_argument, std::string(what) + " must be a non-empty square matrix");
  }
  if (!is_spd(x)) {
    std::ostringstream msg;
    msg << what << " must be symmetric positive definite";
    if (x.allFinite()) msg << " (lambda_min = " << lambda_min(x) << ")";
    throw Error(ErrorKind::invalid_argument, msg.str());
  }
}

}  // namespace covbridge
