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
// Human operator model and the rigid Cartesian coupling between operator
// and exoskeleton. The coupling point is the chain end effector; operator
// quantities are expressed as functions of the exoskeleton configuration.

#ifndef CWBC_COUPLING_HPP_
#define CWBC_COUPLING_HPP_

#include <functional>
#include <utility>

#include "cwbc/rigidbody.hpp"
#include "cwbc/tasks.hpp"
#include "cwbc/types.hpp"

namespace cwbc {

/// Human model seen from the coupling point. The shipped variant is a point
/// mass whose generalized coordinates are the Cartesian coordinates of the
/// coupling point itself; the provider interface leaves room for richer
/// limb models.
struct OperatorModel {
  enum class Variant { kPointMass };

  Variant variant = Variant::kPointMass;
  double mass = 0.0;   // m_o [kg], >= 0 (0 = no operator attached)
  int dof = 2;         // dimension of the operator's generalized coordinates

  // Providers evaluated at the exoskeleton configuration.
  std::function<MatX(const VecX& q)> coupling_jacobian;  // J_o, 2 x dof
  std::function<MatX(const VecX& q)> inertia;            // M_o, dof x dof
  std::function<VecX(const VecX& q)> gravity;            // h_o, dof
  std::function<MatX(const VecX& q)> com_jacobian;       // J_co, 2 x dof

  static OperatorModel point_mass(double m_o, double gravity_magnitude) {
    if (m_o < 0) throw std::invalid_argument("operator mass must be >= 0");
    OperatorModel op;
    op.variant = Variant::kPointMass;
    op.mass = m_o;
    op.dof = 2;
    op.coupling_jacobian = [](const VecX&) { return MatX::Identity(2, 2); };
    op.inertia = [m_o](const VecX&) {
      return MatX(m_o * MatX::Identity(2, 2));
    };
    op.gravity = [m_o, gravity_magnitude](const VecX&) {
      return VecX(Vec2(0.0, m_o * gravity_magnitude));
    };
    op.com_jacobian = [](const VecX&) { return MatX::Identity(2, 2); };
    return op;
  }
};

/// Exoskeleton chain plus the operator rigidly attached at its end effector.
struct CoupledSystem {
  PlanarChain chain;
  OperatorModel op;

  CoupledSystem(PlanarChain c, OperatorModel o)
      : chain(std::move(c)), op(std::move(o)) {}

  /// Point-mass operator coupled to `c`, sharing its gravity magnitude.
  static CoupledSystem with_point_mass(PlanarChain c, double m_o) {
    const double g = c.gravity;
    return CoupledSystem(std::move(c), OperatorModel::point_mass(m_o, g));
  }

  int dof() const { return chain.dof(); }
};

/// J_o# (undamped): the operator-side pseudoinverse used by the coupling
/// constraints. Identity for the point-mass operator.
inline MatX operator_pinv(const CoupledSystem& sys, const VecX& q) {
  return pinv_min_norm(sys.op.coupling_jacobian(q));
}

/// Coupled inertia M_xo = M_x + J_x^T J_o#^T M_o J_o# J_x.
inline MatX coupled_mass_matrix(const CoupledSystem& sys, const VecX& q) {
  MatX m = mass_matrix(sys.chain, q);
  if (sys.op.mass > 0) {
    const MatX jx = ee_jacobian(sys.chain, q);
    const MatX reflected = operator_pinv(sys, q) * jx;  // J_o# J_x
    m.noalias() += reflected.transpose() * sys.op.inertia(q) * reflected;
  }
  return m;
}

/// Coupled gravity h_x + J_x^T J_o#^T h_o.
inline VecX coupled_gravity(const CoupledSystem& sys, const VecX& q) {
  VecX h = gravity_vector(sys.chain, q);
  if (sys.op.mass > 0) {
    const MatX jx = ee_jacobian(sys.chain, q);
    h.noalias() +=
        jx.transpose() * (operator_pinv(sys, q).transpose() * sys.op.gravity(q));
  }
  return h;
}

/// Combined potential of chain plus operator (point mass at the coupling
/// point), for finite-difference cross-checks of coupled_gravity.
inline double coupled_potential_energy(const CoupledSystem& sys,
                                       const VecX& q) {
  double u = potential_energy(sys.chain, q);
  if (sys.op.mass > 0) {
    u += sys.op.mass * sys.chain.gravity *
         forward_kinematics(sys.chain, q).end_effector().y();
  }
  return u;
}

/// Center of mass of the coupled system (operator mass concentrated at its
/// CoM, which for the point-mass variant is the coupling point).
inline Vec2 coupled_com(const CoupledSystem& sys, const VecX& q) {
  const ComResult chain_part = chain_com(sys.chain, q);
  if (sys.op.mass <= 0) return chain_part.position;
  const Vec2 op_com = forward_kinematics(sys.chain, q).end_effector();
  return (chain_part.total_mass * chain_part.position +
          sys.op.mass * op_com) /
         (chain_part.total_mass + sys.op.mass);
}

/// 2 x n Jacobian of the coupled center of mass, J_c.
inline MatX coupled_com_jacobian(const CoupledSystem& sys, const VecX& q) {
  const double chain_mass = sys.chain.mass.sum();
  MatX jac = chain_mass * chain_com_jacobian(sys.chain, q);
  if (sys.op.mass > 0) {
    // Operator CoM velocity = J_co qdot_o = J_co J_o# J_x qdot_x.
    const MatX jx = ee_jacobian(sys.chain, q);
    jac.noalias() +=
        sys.op.mass * sys.op.com_jacobian(q) * (operator_pinv(sys, q) * jx);
  }
  return jac / (chain_mass + sys.op.mass);
}

/// Operator generalized velocity qdot_o = J_o# J_x qdot_x.
inline VecX couple_velocities(const CoupledSystem& sys, const VecX& q,
                              const VecX& qd) {
  return operator_pinv(sys, q) * (ee_jacobian(sys.chain, q) * qd);
}

/// Operator generalized acceleration qdd_o = J_o# J_x qdd_x (higher-order
/// Jacobian-rate terms cancelled, valid at slow velocities).
inline VecX couple_accelerations(const CoupledSystem& sys, const VecX& q,
                                 const VecX& /*qd*/, const VecX& qdd) {
  return operator_pinv(sys, q) * (ee_jacobian(sys.chain, q) * qdd);
}

/// Interaction force applied by the operator on the exoskeleton, recovered
/// from the operator equation of motion:
///   J_o^T f_ox = tau_o - M_o qdd_o - h_o.
/// Exact Newton's law for the point-mass operator.
inline Vec2 interaction_force(const CoupledSystem& sys, const VecX& q,
                              const VecX& qd, const VecX& qdd,
                              const VecX& tau_o) {
  check_dim(tau_o, sys.op.dof, "tau_o");
  const VecX qdd_o = couple_accelerations(sys, q, qd, qdd);
  const VecX residual = tau_o - sys.op.inertia(q) * qdd_o - sys.op.gravity(q);
  // Least-squares solve through the same pseudoinverse family:
  // f_ox = J_o#^T residual.
  return operator_pinv(sys, q).transpose() * residual;
}

}  // namespace cwbc

#endif  // CWBC_COUPLING_HPP_
