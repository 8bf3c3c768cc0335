// Copyright 2026 The cwbc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Task-space linear algebra: minimal-norm (optionally damped)
// pseudoinverses, null-space projectors, and task-space inertias.

#ifndef CWBC_TASKS_HPP_
#define CWBC_TASKS_HPP_

#include <functional>
#include <string>

#include "cwbc/types.hpp"

namespace cwbc {

/// Smallest singular value below which an undamped pseudoinverse is refused.
inline constexpr double kSingularTolerance = 1e-10;

/// Minimal-norm right pseudoinverse J# = J^T (J J^T)^-1 of a wide task
/// Jacobian, Tikhonov-regularized to J^T (J J^T + damping^2 I)^-1 when
/// damping > 0. With zero damping the task must have full row rank.
inline MatX pinv_min_norm(const MatX& jac, double damping = 0.0) {
  const Eigen::Index m = jac.rows();
  MatX gram = jac * jac.transpose();
  if (damping > 0.0) {
    gram.diagonal().array() += damping * damping;
    return jac.transpose() * gram.ldlt().solve(MatX::Identity(m, m));
  }
  // Undamped path: refuse rank-deficient tasks instead of amplifying noise.
  const Eigen::JacobiSVD<MatX> svd(jac);
  const double sigma_min = svd.singularValues().size() > 0
                               ? svd.singularValues().minCoeff()
                               : 0.0;
  if (jac.rows() > jac.cols() || sigma_min < kSingularTolerance) {
    throw SingularTask("pseudoinverse of rank-deficient task (sigma_min = " +
                       std::to_string(sigma_min) + ")");
  }
  return jac.transpose() * gram.ldlt().solve(MatX::Identity(m, m));
}

/// Null-space projector N = I - J# J. Idempotent and annihilating
/// (J N = 0) when J# is the undamped pseudoinverse.
inline MatX null_projector(const MatX& jac, const MatX& jac_pinv) {
  if (jac_pinv.rows() != jac.cols() || jac_pinv.cols() != jac.rows()) {
    throw std::invalid_argument("null_projector: inconsistent shapes");
  }
  const Eigen::Index n = jac.cols();
  return MatX::Identity(n, n) - jac_pinv * jac;
}

/// Convenience overload building the pseudoinverse internally.
inline MatX null_projector(const MatX& jac, double damping = 0.0) {
  return null_projector(jac, pinv_min_norm(jac, damping));
}

/// Task-space inertia Lambda = J#^T M J#. Positive definite for full-rank
/// plain tasks, positive semidefinite for null-space-restricted tasks.
inline MatX task_inertia(const MatX& mass, const MatX& jac_pinv) {
  if (mass.rows() != mass.cols() || mass.rows() != jac_pinv.rows()) {
    throw std::invalid_argument("task_inertia: inconsistent shapes");
  }
  return jac_pinv.transpose() * mass * jac_pinv;
}

/// A generalized prioritized task: configuration-dependent Jacobian plus an
/// impedance toward a fixed target. Used by the passivity analysis.
struct TaskSpec {
  std::string name;
  std::function<MatX(const VecX& q)> jacobian;
  MatX k_P;     // symmetric positive definite stiffness
  MatX k_D;     // symmetric positive definite damping
  VecX target;  // desired task position

  Eigen::Index dim() const { return target.size(); }

  /// Impedance force k_P (target - x) - k_D xdot.
  VecX force(const VecX& x, const VecX& xdot) const {
    return k_P * (target - x) - k_D * xdot;
  }
};

}  // namespace cwbc

#endif  // CWBC_TASKS_HPP_
