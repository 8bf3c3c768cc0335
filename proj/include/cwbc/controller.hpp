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
// Concurrent whole-body controller: gravity compensation of the coupled
// system, a centroidal balance impedance as the primary task, force
// amplification of the sensed operator action in the null space of the
// balance task, and a dissipative null-space momentum damping term.

#ifndef CWBC_CONTROLLER_HPP_
#define CWBC_CONTROLLER_HPP_

#include <string>

#include "cwbc/coupling.hpp"
#include "cwbc/tasks.hpp"
#include "cwbc/types.hpp"

namespace cwbc {

/// Which rows of the CoM Jacobian the balance task controls.
enum class ComTaskMode {
  kHorizontal,  // x only; the vertical position is left free
  kFull2d,      // both Cartesian components
};

/// Force-feedback law used for the amplification term.
enum class FeedbackMode {
  kForceOnly,     // config token "eq14": sensed force + operator gravity
  kWithInertial,  // config token "eq13": adds the reflected inertial term,
                  // reconstructing the full operator action
};

/// Controller constants.
struct Gains {
  double k_Pc = 400.0;  // centroidal stiffness [N/m]
  double k_Dc = 40.0;   // centroidal damping [N s/m]
  double k_FF = 1.0;    // force augmentation factor, >= 0
  double k_jm = 5.0;    // null-space momentum damping [1/s]
  double pinv_damping = 1e-6;
  ComTaskMode com_mode = ComTaskMode::kHorizontal;

  void validate() const {
    if (!(k_Pc > 0) || !(k_Dc > 0)) {
      throw std::invalid_argument("k_Pc and k_Dc must be > 0");
    }
    if (k_FF < 0) throw std::invalid_argument("k_FF must be >= 0");
    if (k_jm < 0) throw std::invalid_argument("k_jm must be >= 0");
    if (pinv_damping < 0) {
      throw std::invalid_argument("pinv_damping must be >= 0");
    }
  }
};

/// Fixed references of the controller. The operator's end-effector target
/// lives in the operator policy, not here.
struct ControlTargets {
  Vec2 com_target = Vec2::Zero();  // y component ignored in horizontal mode
};

/// Joint torque with its per-term breakdown; tau is the exact sum.
struct TorqueCommand {
  VecX tau;
  VecX gravity_comp;
  VecX balance;
  VecX amplification;
  VecX momentum_damping;
};

inline int com_task_dim(ComTaskMode mode) {
  return mode == ComTaskMode::kHorizontal ? 1 : 2;
}

/// Rows of J_c used by the balance task.
inline MatX balance_jacobian(const CoupledSystem& sys, const VecX& q,
                             ComTaskMode mode) {
  const MatX jc = coupled_com_jacobian(sys, q);
  return mode == ComTaskMode::kHorizontal ? MatX(jc.row(0)) : jc;
}

/// Balance-task error x_c - x_c^d restricted to the controlled rows.
inline VecX com_task_error(const CoupledSystem& sys, const VecX& q,
                           const ControlTargets& targets, ComTaskMode mode) {
  const Vec2 err2 = coupled_com(sys, q) - targets.com_target;
  return mode == ComTaskMode::kHorizontal ? VecX(err2.head(1)) : VecX(err2);
}

/// Gravity compensation of the coupled system:
/// tau = h_x + J_x^T J_o#^T J_co^T (0, m_o g).
inline VecX gravity_compensation_torque(const CoupledSystem& sys,
                                        const VecX& q,
                                        const Gains& gains = Gains{}) {
  VecX tau = gravity_vector(sys.chain, q);
  if (sys.op.mass > 0) {
    const MatX jx = ee_jacobian(sys.chain, q);
    const MatX jo_pinv =
        pinv_min_norm(sys.op.coupling_jacobian(q), gains.pinv_damping);
    const Vec2 weight(0.0, sys.op.mass * sys.chain.gravity);
    tau.noalias() += jx.transpose() *
                     (jo_pinv.transpose() *
                      (sys.op.com_jacobian(q).transpose() * weight));
  }
  return tau;
}

/// Centroidal impedance torque J_c^T (k_Pc (x_c^d - x_c) - k_Dc xdot_c),
/// restricted to the controlled CoM rows.
inline VecX balance_torque(const CoupledSystem& sys, const VecX& q,
                           const VecX& qd, const ControlTargets& targets,
                           const Gains& gains) {
  const MatX jc = balance_jacobian(sys, q, gains.com_mode);
  const VecX err = com_task_error(sys, q, targets, gains.com_mode);
  const VecX task_force = -gains.k_Pc * err - gains.k_Dc * (jc * qd);
  return jc.transpose() * task_force;
}

/// Null-space force amplification from the sensed interaction force:
/// (J_x N_c)^T k_FF J_o#^T (h_o + J_o^T f_ox).
inline VecX amplification_torque(const CoupledSystem& sys, const VecX& q,
                                 const VecX& qd, const Vec2& f_ox,
                                 const ControlTargets& targets,
                                 const Gains& gains) {
  (void)qd;
  (void)targets;
  const int n = sys.dof();
  if (gains.k_FF == 0.0) return VecX::Zero(n);
  const MatX jc = balance_jacobian(sys, q, gains.com_mode);
  const MatX nc = null_projector(jc, pinv_min_norm(jc, gains.pinv_damping));
  const MatX jx = ee_jacobian(sys.chain, q);
  const MatX jo = sys.op.coupling_jacobian(q);
  const MatX jo_pinv = pinv_min_norm(jo, gains.pinv_damping);
  const VecX feedback = sys.op.gravity(q) + jo.transpose() * VecX(f_ox);
  return (jx * nc).transpose() * (gains.k_FF * (jo_pinv.transpose() * feedback));
}

/// Amplification including the reflected inertial term
/// (J_x N_c)^T k_FF J_o#^T (M_o J_o# J_x qdd + h_o + J_o^T f_ox).
inline VecX amplification_torque_full(const CoupledSystem& sys, const VecX& q,
                                      const VecX& qd, const VecX& qdd,
                                      const Vec2& f_ox,
                                      const ControlTargets& targets,
                                      const Gains& gains) {
  const int n = sys.dof();
  if (gains.k_FF == 0.0) return VecX::Zero(n);
  const MatX jc = balance_jacobian(sys, q, gains.com_mode);
  const MatX nc = null_projector(jc, pinv_min_norm(jc, gains.pinv_damping));
  const MatX jx = ee_jacobian(sys.chain, q);
  const MatX jo = sys.op.coupling_jacobian(q);
  const MatX jo_pinv = pinv_min_norm(jo, gains.pinv_damping);
  const VecX qdd_o = jo_pinv * (jx * qdd);
  const VecX feedback = sys.op.inertia(q) * qdd_o + sys.op.gravity(q) +
                        jo.transpose() * VecX(f_ox);
  return (jx * nc).transpose() * (gains.k_FF * (jo_pinv.transpose() * feedback));
}

/// Dissipative null-space damping tau = -N_s k_jm M_xo qd, with N_s the
/// null projector of the stacked active-task Jacobian. Prevents internal
/// joint drift without commanding the tasks.
inline VecX momentum_damping_torque(const CoupledSystem& sys, const VecX& q,
                                    const VecX& qd,
                                    const MatX& stacked_task_jacobian,
                                    const Gains& gains) {
  const int n = sys.dof();
  if (gains.k_jm == 0.0) return VecX::Zero(n);
  // The stack may exceed the chain's redundancy; the damped pseudoinverse
  // keeps the projector well defined (and ~zero) in that case.
  const double damping = std::max(gains.pinv_damping, 1e-8);
  const MatX ns = null_projector(stacked_task_jacobian,
                                 pinv_min_norm(stacked_task_jacobian, damping));
  return -(ns * (gains.k_jm * (coupled_mass_matrix(sys, q) * qd)));
}

/// Stack of all active task Jacobians: balance rows on top of the
/// end-effector rows.
inline MatX active_task_stack(const CoupledSystem& sys, const VecX& q,
                              ComTaskMode mode) {
  const MatX jc = balance_jacobian(sys, q, mode);
  const MatX jx = ee_jacobian(sys.chain, q);
  MatX stack(jc.rows() + jx.rows(), sys.dof());
  stack.topRows(jc.rows()) = jc;
  stack.bottomRows(jx.rows()) = jx;
  return stack;
}

/// Full controller output. `qdd` feeds the inertial feedback term in
/// kWithInertial mode (the simulator supplies the acceleration solved
/// self-consistently with the sensed force; a hardware realization would
/// substitute a filtered or one-step-delayed estimate). Ignored in
/// kForceOnly mode.
inline TorqueCommand control_torque(const CoupledSystem& sys, const VecX& q,
                                    const VecX& qd, const Vec2& f_ox,
                                    const ControlTargets& targets,
                                    const Gains& gains, FeedbackMode mode,
                                    const VecX& qdd) {
  gains.validate();
  TorqueCommand cmd;
  cmd.gravity_comp = gravity_compensation_torque(sys, q, gains);
  cmd.balance = balance_torque(sys, q, qd, targets, gains);
  cmd.amplification =
      mode == FeedbackMode::kForceOnly
          ? amplification_torque(sys, q, qd, f_ox, targets, gains)
          : amplification_torque_full(sys, q, qd, qdd, f_ox, targets, gains);
  cmd.momentum_damping = momentum_damping_torque(
      sys, q, qd, active_task_stack(sys, q, gains.com_mode), gains);
  cmd.tau =
      cmd.gravity_comp + cmd.balance + cmd.amplification + cmd.momentum_damping;
  return cmd;
}

inline TorqueCommand control_torque(const CoupledSystem& sys, const VecX& q,
                                    const VecX& qd, const Vec2& f_ox,
                                    const ControlTargets& targets,
                                    const Gains& gains,
                                    FeedbackMode mode = FeedbackMode::kForceOnly) {
  return control_torque(sys, q, qd, f_ox, targets, gains, mode,
                        VecX::Zero(sys.dof()));
}

}  // namespace cwbc

#endif  // CWBC_CONTROLLER_HPP_
