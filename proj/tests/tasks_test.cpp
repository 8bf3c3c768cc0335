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

#include "cwbc/tasks.hpp"

#include <random>

#include <gtest/gtest.h>

namespace cwbc {
namespace {

MatX RandomMatrix(int rows, int cols, std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  MatX m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

// SVD-based Moore-Penrose pseudoinverse, the reference implementation.
MatX SvdPinvOracle(const MatX& jac) {
  Eigen::JacobiSVD<MatX> svd(jac,
                             Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  VecX inv_sv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    inv_sv[i] = sv[i] > 1e-12 ? 1.0 / sv[i] : 0.0;
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

TEST(PinvMinNorm, RowVector) {
  MatX jac(1, 2);
  jac << 1, 0;
  const MatX pinv = pinv_min_norm(jac);
  EXPECT_NEAR(pinv(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(pinv(1, 0), 0.0, 1e-15);
}

TEST(PinvMinNorm, RightInverseAndSvdOracle) {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const MatX jac = RandomMatrix(2, 5, rng);
    const MatX pinv = pinv_min_norm(jac);
    EXPECT_LT((jac * pinv - MatX::Identity(2, 2)).cwiseAbs().maxCoeff(),
              1e-10);
    EXPECT_LT((pinv - SvdPinvOracle(jac)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PinvMinNorm, RankDeficientThrows) {
  MatX jac(1, 2);
  jac << 0, 0;
  EXPECT_THROW(pinv_min_norm(jac, 0.0), SingularTask);
  // Damping makes it well defined again.
  EXPECT_NO_THROW(pinv_min_norm(jac, 1e-3));
}

TEST(PinvMinNorm, MinimalNormSolution) {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const MatX jac = RandomMatrix(2, 5, rng);
    const MatX pinv = pinv_min_norm(jac);
    const MatX nul = null_projector(jac, pinv);
    const VecX xdot = RandomMatrix(2, 1, rng);
    const VecX qd = pinv * xdot;
    for (int k = 0; k < 10; ++k) {
      const VecX alt = qd + nul * VecX(RandomMatrix(5, 1, rng));
      EXPECT_LT((jac * alt - xdot).norm(), 1e-10);  // still consistent
      EXPECT_LE(qd.norm(), alt.norm() + 1e-12);
    }
  }
}

TEST(PinvMinNorm, DampedConvergesQuadratically) {
  std::mt19937 rng(44);
  const MatX jac = RandomMatrix(2, 5, rng);
  const MatX exact = pinv_min_norm(jac, 0.0);
  const double err_coarse =
      (pinv_min_norm(jac, 1e-3) - exact).cwiseAbs().maxCoeff();
  const double err_fine =
      (pinv_min_norm(jac, 1e-6) - exact).cwiseAbs().maxCoeff();
  EXPECT_LT(err_fine, 1e-9);
  EXPECT_GT(err_coarse / err_fine, 1e4);  // error scales about with damping^2
}

TEST(NullProjector, RowVectorCase) {
  MatX jac(1, 2);
  jac << 1, 0;
  const MatX nul = null_projector(jac, pinv_min_norm(jac));
  MatX expected(2, 2);
  expected << 0, 0, 0, 1;
  EXPECT_LT((nul - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NullProjector, IdempotentAndAnnihilating) {
  std::mt19937 rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    const MatX jac = RandomMatrix(2, 5, rng);
    const MatX nul = null_projector(jac, pinv_min_norm(jac));
    EXPECT_LT((nul * nul - nul).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((jac * nul).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(NullProjector, SquareInvertibleHasNoNullSpace) {
  std::mt19937 rng(46);
  const MatX jac = RandomMatrix(3, 3, rng);
  const MatX nul = null_projector(jac, pinv_min_norm(jac));
  EXPECT_LT(nul.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TaskInertia, SquareIdentityTaskRecoversMass) {
  std::mt19937 rng(47);
  const MatX a = RandomMatrix(4, 4, rng);
  const MatX mass = a * a.transpose() + 4.0 * MatX::Identity(4, 4);
  const MatX jac = MatX::Identity(4, 4);
  const MatX lambda = task_inertia(mass, pinv_min_norm(jac));
  EXPECT_LT((lambda - mass).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TaskInertia, PointMassOperator) {
  const double m_o = 10.0;
  const MatX lambda =
      task_inertia(m_o * MatX::Identity(2, 2), pinv_min_norm(MatX::Identity(2, 2)));
  EXPECT_LT((lambda - m_o * MatX::Identity(2, 2)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(TaskInertia, NullSpaceRestrictedIsPositiveSemidefinite) {
  std::mt19937 rng(48);
  for (int trial = 0; trial < 50; ++trial) {
    const MatX a = RandomMatrix(5, 5, rng);
    const MatX mass = a * a.transpose() + 5.0 * MatX::Identity(5, 5);
    const MatX j1 = RandomMatrix(1, 5, rng);
    const MatX j2 = RandomMatrix(2, 5, rng);
    const MatX n1 = null_projector(j1, pinv_min_norm(j1));
    const MatX j21 = j2 * n1;  // restricted task Jacobian
    Eigen::JacobiSVD<MatX> svd(j21);
    if (svd.singularValues().minCoeff() < 1e-6) continue;  // unlucky draw
    const MatX lambda = task_inertia(mass, pinv_min_norm(j21));
    const MatX sym = 0.5 * (lambda + lambda.transpose());
    Eigen::SelfAdjointEigenSolver<MatX> eig(sym);
    EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(TaskSpec, ImpedanceForce) {
  TaskSpec task;
  task.name = "ee";
  task.k_P = 100.0 * MatX::Identity(2, 2);
  task.k_D = 10.0 * MatX::Identity(2, 2);
  task.target = Vec2(1.0, 0.0);
  const VecX f = task.force(Vec2(0.9, 0.0), Vec2(0.0, 0.2));
  EXPECT_NEAR(f[0], 10.0, 1e-12);
  EXPECT_NEAR(f[1], -2.0, 1e-12);
}

}  // namespace
}  // namespace cwbc
