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

#include "cwbc/coupling.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace cwbc {
namespace {

CoupledSystem TestSystem(double m_o = 10.0) {
  return CoupledSystem::with_point_mass(
      PlanarChain::uniform(5, 0.3, 2.0, 0.15, -1.0), m_o);
}

VecX RandomConfig(int n, std::mt19937& rng, double range = 3.0) {
  std::uniform_real_distribution<double> dist(-range, range);
  VecX q(n);
  for (int i = 0; i < n; ++i) q[i] = dist(rng);
  return q;
}

TEST(CoupledMass, ReducesToChainMassWithoutOperator) {
  const auto sys = TestSystem(0.0);
  std::mt19937 rng(1);
  const VecX q = RandomConfig(5, rng);
  EXPECT_TRUE(coupled_mass_matrix(sys, q) == mass_matrix(sys.chain, q));
}

TEST(CoupledMass, PointMassClosedForm) {
  const auto sys = TestSystem(10.0);
  std::mt19937 rng(2);
  const VecX q = RandomConfig(5, rng);
  const MatX jx = ee_jacobian(sys.chain, q);
  const MatX expected =
      mass_matrix(sys.chain, q) + 10.0 * jx.transpose() * jx;
  EXPECT_LT((coupled_mass_matrix(sys, q) - expected).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(CoupledMass, KineticEnergyOracle) {
  const auto sys = TestSystem(10.0);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const VecX q = RandomConfig(5, rng);
    const VecX qd = RandomConfig(5, rng);
    const double lhs = 0.5 * qd.dot(coupled_mass_matrix(sys, q) * qd);
    const double rhs =
        kinetic_energy(sys.chain, q, qd) +
        0.5 * 10.0 * (ee_jacobian(sys.chain, q) * qd).squaredNorm();
    EXPECT_LT(std::abs(lhs - rhs) / rhs, 1e-10);
  }
}

TEST(CoupledMass, SymmetricPositiveDefinite) {
  const auto sys = TestSystem(10.0);
  std::mt19937 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const MatX m = coupled_mass_matrix(sys, RandomConfig(5, rng));
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-11);
    Eigen::SelfAdjointEigenSolver<MatX> eig(m);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(CoupledGravity, ReducesToChainGravityWithoutOperator) {
  const auto sys = TestSystem(0.0);
  std::mt19937 rng(5);
  const VecX q = RandomConfig(5, rng);
  EXPECT_TRUE(coupled_gravity(sys, q) == gravity_vector(sys.chain, q));
}

TEST(CoupledGravity, PointMassClosedForm) {
  const auto sys = TestSystem(10.0);
  std::mt19937 rng(6);
  const VecX q = RandomConfig(5, rng);
  const MatX jx = ee_jacobian(sys.chain, q);
  const VecX expected = gravity_vector(sys.chain, q) +
                        10.0 * sys.chain.gravity * jx.row(1).transpose();
  EXPECT_LT((coupled_gravity(sys, q) - expected).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(CoupledGravity, MatchesCombinedPotentialGradient) {
  const auto sys = TestSystem(10.0);
  std::mt19937 rng(7);
  const double step = 1e-7;
  for (int trial = 0; trial < 30; ++trial) {
    const VecX q = RandomConfig(5, rng);
    const VecX h = coupled_gravity(sys, q);
    for (int j = 0; j < 5; ++j) {
      VecX qp = q, qm = q;
      qp[j] += step;
      qm[j] -= step;
      const double fd = (coupled_potential_energy(sys, qp) -
                         coupled_potential_energy(sys, qm)) /
                        (2 * step);
      EXPECT_LT(std::abs(h[j] - fd), 1e-6);
    }
  }
}

TEST(CoupledCom, HeavyOperatorPullsComToEndEffector) {
  const auto sys = TestSystem(1e9 * 10.0);  // 1e9 x chain mass
  std::mt19937 rng(8);
  const VecX q = RandomConfig(5, rng);
  const Vec2 ee = forward_kinematics(sys.chain, q).end_effector();
  EXPECT_LT((coupled_com(sys, q) - ee).norm(), 1e-6);
}

TEST(CoupledCom, ReducesToChainComWithoutOperator) {
  const auto sys = TestSystem(0.0);
  std::mt19937 rng(9);
  const VecX q = RandomConfig(5, rng);
  EXPECT_LT((coupled_com(sys, q) - chain_com(sys.chain, q).position).norm(),
            1e-15);
}

TEST(CoupledCom, JacobianMatchesFiniteDifferences) {
  const auto sys = TestSystem(10.0);
  std::mt19937 rng(10);
  const double step = 1e-7;
  for (int trial = 0; trial < 30; ++trial) {
    const VecX q = RandomConfig(5, rng);
    const MatX jac = coupled_com_jacobian(sys, q);
    for (int j = 0; j < 5; ++j) {
      VecX qp = q, qm = q;
      qp[j] += step;
      qm[j] -= step;
      const Vec2 fd = (coupled_com(sys, qp) - coupled_com(sys, qm)) / (2 * step);
      EXPECT_LT((jac.col(j) - fd).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(CoupleVelocities, ZeroAtRest) {
  const auto sys = TestSystem();
  std::mt19937 rng(11);
  const VecX q = RandomConfig(5, rng);
  EXPECT_LT(couple_velocities(sys, q, VecX::Zero(5)).norm(), 1e-15);
}

TEST(CoupleVelocities, PointMassEqualsEeVelocity) {
  const auto sys = TestSystem();
  std::mt19937 rng(12);
  const VecX q = RandomConfig(5, rng);
  const VecX qd = RandomConfig(5, rng);
  const VecX qd_o = couple_velocities(sys, q, qd);
  EXPECT_LT((qd_o - ee_jacobian(sys.chain, q) * qd).norm(), 1e-12);
}

// Hand-rolled closed-loop trajectory used by the dynamic identity checks
// below: coupled plant under gravity compensation plus a spring at the
// operator side.
struct Trajectory {
  std::vector<VecX> q, qd, qdd, tau_o;
};

Trajectory SimulateCoupled(const CoupledSystem& sys, const VecX& q0,
                           double dt, int steps,
                           double stiffness = 300.0, double damping = 30.0,
                           double qd0 = 0.0) {
  Trajectory traj;
  const Vec2 target =
      forward_kinematics(sys.chain, q0).end_effector() + Vec2(0.08, 0.05);
  VecX q = q0, qd = VecX::Constant(q0.size(), qd0);
  for (int i = 0; i < steps; ++i) {
    const MatX jx = ee_jacobian(sys.chain, q);
    const MatX jo_pinv = operator_pinv(sys, q);
    const Vec2 x = forward_kinematics(sys.chain, q).end_effector();
    const Vec2 xdot = jx * qd;
    const VecX tau_o =
        sys.op.coupling_jacobian(q).transpose() *
        (stiffness * (target - x) - damping * xdot);
    const VecX tau_x = coupled_gravity(sys, q);
    const VecX rhs = tau_x + jx.transpose() * (jo_pinv.transpose() * tau_o) -
                     coupled_gravity(sys, q);
    const VecX qdd = coupled_mass_matrix(sys, q).ldlt().solve(rhs);
    traj.q.push_back(q);
    traj.qd.push_back(qd);
    traj.qdd.push_back(qdd);
    traj.tau_o.push_back(tau_o);
    qd += dt * qdd;
    q += dt * qd;
  }
  return traj;
}

VecX ArcPose() {
  VecX q(5);
  q << 1.2, -0.25, -0.25, -0.25, -0.25;
  return q;
}

TEST(CoupleVelocities, MatchesFkFiniteDifferencesAlongTrajectory) {
  const auto sys = TestSystem();
  const double dt = 1e-5;
  const auto traj = SimulateCoupled(sys, ArcPose(), dt, 4000,
                                    /*stiffness=*/100.0, /*damping=*/10.0,
                                    /*qd0=*/0.3);
  for (size_t i = 1; i + 1 < traj.q.size(); i += 50) {
    const Vec2 fd =
        (forward_kinematics(sys.chain, traj.q[i + 1]).end_effector() -
         forward_kinematics(sys.chain, traj.q[i - 1]).end_effector()) /
        (2 * dt);
    const VecX qd_o = couple_velocities(sys, traj.q[i], traj.qd[i]);
    EXPECT_LT((qd_o - fd).norm(), 1e-5);
  }
}

TEST(InteractionForce, StaticSelfSupportingOperator) {
  const auto sys = TestSystem();
  std::mt19937 rng(13);
  const VecX q = RandomConfig(5, rng);
  const VecX tau_o = sys.op.gravity(q);  // operator holds its own weight
  const Vec2 f =
      interaction_force(sys, q, VecX::Zero(5), VecX::Zero(5), tau_o);
  EXPECT_LT(f.norm(), 1e-12);
}

TEST(InteractionForce, PassiveOperatorHangsOnExoskeleton) {
  const auto sys = TestSystem(10.0);
  std::mt19937 rng(14);
  const VecX q = RandomConfig(5, rng);
  const Vec2 f = interaction_force(sys, q, VecX::Zero(5), VecX::Zero(5),
                                   VecX::Zero(2));
  EXPECT_NEAR(f.x(), 0.0, 1e-12);
  EXPECT_NEAR(f.y(), -10.0 * sys.chain.gravity, 1e-10);
}

TEST(InteractionForce, OperatorEquationResidualAlongTrajectory) {
  const auto sys = TestSystem();
  const auto traj = SimulateCoupled(sys, ArcPose(), 1e-3, 1500);
  for (size_t i = 0; i < traj.q.size(); i += 10) {
    const Vec2 f = interaction_force(sys, traj.q[i], traj.qd[i], traj.qdd[i],
                                     traj.tau_o[i]);
    const VecX qdd_o =
        couple_accelerations(sys, traj.q[i], traj.qd[i], traj.qdd[i]);
    const VecX residual = sys.op.inertia(traj.q[i]) * qdd_o +
                          sys.op.gravity(traj.q[i]) +
                          sys.op.coupling_jacobian(traj.q[i]).transpose() *
                              VecX(f) -
                          traj.tau_o[i];
    EXPECT_LT(residual.cwiseAbs().maxCoeff(), 1e-9);
  }
}

// The F/T-sensor feedback reconstructs the operator action: for any k_FF,
// k_FF J_o#^T (M_o qdd_o + h_o + J_o^T f_ox) = k_FF J_o#^T tau_o.
TEST(InteractionForce, FeedbackReconstructionIdentity) {
  const auto sys = TestSystem();
  const double k_ff = 1.7;
  const auto traj = SimulateCoupled(sys, ArcPose(), 1e-3, 1000);
  for (size_t i = 0; i < traj.q.size(); i += 10) {
    const VecX& q = traj.q[i];
    const Vec2 f =
        interaction_force(sys, q, traj.qd[i], traj.qdd[i], traj.tau_o[i]);
    const MatX jo_pinv_t = operator_pinv(sys, q).transpose();
    const VecX qdd_o = couple_accelerations(sys, q, traj.qd[i], traj.qdd[i]);
    const VecX lhs =
        k_ff * jo_pinv_t *
        (sys.op.inertia(q) * qdd_o + sys.op.gravity(q) +
         sys.op.coupling_jacobian(q).transpose() * VecX(f));
    const VecX rhs = k_ff * jo_pinv_t * traj.tau_o[i];
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(OperatorModel, RejectsNegativeMass) {
  EXPECT_THROW(OperatorModel::point_mass(-1.0, 9.81), std::invalid_argument);
}

}  // namespace
}  // namespace cwbc
