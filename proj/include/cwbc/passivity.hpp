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
// Energy accounting for the coupled closed loop: one kinetic tank plus
// three potential tanks (balance task, operator impedance, amplified
// impedance), analytic dissipation rates, and a runtime monitor that flags
// any step where the total storage grows beyond tolerance.

#ifndef CWBC_PASSIVITY_HPP_
#define CWBC_PASSIVITY_HPP_

#include <limits>

#include "cwbc/controller.hpp"
#include "cwbc/coupling.hpp"
#include "cwbc/types.hpp"

namespace cwbc {

/// Spring-damper policy applied by the operator at the coupling point.
struct OperatorPolicy {
  Mat2 k_P = 400.0 * Mat2::Identity();  // [N/m]
  Mat2 k_D = 60.0 * Mat2::Identity();   // [N s/m]
  Vec2 x_d = Vec2::Zero();              // fixed reach target [m]

  Vec2 force(const Vec2& x, const Vec2& xdot) const {
    return k_P * (x_d - x) - k_D * xdot;
  }

  void validate() const {
    auto check_spd = [](const Mat2& m, const char* name) {
      if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument(std::string(name) + " must be symmetric");
      }
      Eigen::SelfAdjointEigenSolver<Mat2> eig(m);
      if (eig.eigenvalues().minCoeff() <= 0) {
        throw std::invalid_argument(std::string(name) +
                                    " must be positive definite");
      }
    };
    check_spd(k_P, "k_Po");
    check_spd(k_D, "k_Do");
  }
};

/// Storage function of one task: S = xdot^T Lambda xdot / 2 + e^T k_P e / 2.
inline double storage_task(const MatX& task_inertia, const VecX& xdot,
                           const VecX& error, const MatX& k_P) {
  return 0.5 * xdot.dot(task_inertia * xdot) + 0.5 * error.dot(k_P * error);
}

/// Analytic storage rate of one damped task, Sdot = -xdot^T k_D xdot.
inline double dissipation_rate(const VecX& xdot, const MatX& k_D) {
  return -xdot.dot(k_D * xdot);
}

/// Energy tanks of the coupled closed loop at one instant.
struct EnergyBreakdown {
  double kinetic = 0.0;              // qd^T M_xo qd / 2
  double potential_balance = 0.0;    // balance-task spring
  double potential_operator = 0.0;   // operator impedance spring
  double potential_amplified = 0.0;  // k_FF-scaled impedance spring
  double total = 0.0;                // exact sum of the four tanks
  // Analytic estimate: task dampers plus (when filled in by the simulator)
  // the actual power drawn by the null-space momentum damping.
  double dissipation_rate_estimate = 0.0;
};

/// Energy breakdown at a state. The kinetic tank uses the joint-space form
/// qd^T M_xo qd / 2; the per-task kinetic contributions share this one
/// physical tank.
inline EnergyBreakdown storage_total(const CoupledSystem& sys, const VecX& q,
                                     const VecX& qd,
                                     const ControlTargets& targets,
                                     const OperatorPolicy& policy,
                                     const Gains& gains) {
  EnergyBreakdown e;
  e.kinetic = 0.5 * qd.dot(coupled_mass_matrix(sys, q) * qd);

  const VecX com_err = com_task_error(sys, q, targets, gains.com_mode);
  const MatX jc = balance_jacobian(sys, q, gains.com_mode);
  const VecX com_vel = jc * qd;
  e.potential_balance = 0.5 * gains.k_Pc * com_err.squaredNorm();

  const Vec2 x_ee = forward_kinematics(sys.chain, q).end_effector();
  const Vec2 ee_err = x_ee - policy.x_d;
  const Vec2 ee_vel = ee_jacobian(sys.chain, q) * qd;
  e.potential_operator = 0.5 * ee_err.dot(policy.k_P * ee_err);
  e.potential_amplified = gains.k_FF * e.potential_operator;

  e.total = e.kinetic + e.potential_balance + e.potential_operator +
            e.potential_amplified;
  e.dissipation_rate_estimate =
      -gains.k_Dc * com_vel.squaredNorm() +
      (1.0 + gains.k_FF) * dissipation_rate(ee_vel, policy.k_D);
  return e;
}

/// Outcome of one monitor step.
struct MonitorVerdict {
  bool ok = true;
  double magnitude = 0.0;  // energy growth in excess of the tolerance [J]
};

/// ok iff curr.total <= prev.total + tolerance.
inline MonitorVerdict monitor_step(const EnergyBreakdown& prev,
                                   const EnergyBreakdown& curr,
                                   double /*dt*/, double tolerance) {
  const double increase = curr.total - prev.total;
  if (increase <= tolerance) return MonitorVerdict{true, 0.0};
  return MonitorVerdict{false, increase - tolerance};
}

/// Run-level accumulation of monitor verdicts.
struct MonitorReport {
  long violations = 0;
  double max_magnitude = 0.0;
  double first_violation_time = std::numeric_limits<double>::quiet_NaN();
  double tolerance = 0.0;
};

/// Per-run passivity monitor. Tolerance: eta = 1e-9 S(0) + c dt^2, with c
/// a discretization allowance (see Scenario::monitor_c).
class PassivityMonitor {
 public:
  PassivityMonitor(double dt, double c) : dt_(dt), c_(c) {}

  void observe(double t, const EnergyBreakdown& e) {
    if (!has_prev_) {
      report_.tolerance = 1e-9 * e.total + c_ * dt_ * dt_;
    } else {
      const MonitorVerdict v = monitor_step(prev_, e, dt_, report_.tolerance);
      if (!v.ok) {
        if (report_.violations == 0) report_.first_violation_time = t;
        report_.violations += 1;
        report_.max_magnitude = std::max(report_.max_magnitude, v.magnitude);
      }
    }
    prev_ = e;
    has_prev_ = true;
  }

  const MonitorReport& report() const { return report_; }

 private:
  double dt_;
  double c_;
  bool has_prev_ = false;
  EnergyBreakdown prev_;
  MonitorReport report_;
};

}  // namespace cwbc

#endif  // CWBC_PASSIVITY_HPP_
