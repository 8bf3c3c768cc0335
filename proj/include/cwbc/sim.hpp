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
// Closed-loop simulation of the coupled plant under the whole-body
// controller and an operator impedance policy, plus the run metrics
// (effort, steady-state errors, oscillation detection) and the
// force-augmentation sweep.

#ifndef CWBC_SIM_HPP_
#define CWBC_SIM_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cwbc/controller.hpp"
#include "cwbc/coupling.hpp"
#include "cwbc/passivity.hpp"
#include "cwbc/rigidbody.hpp"
#include "cwbc/types.hpp"

namespace cwbc {

enum class IntegratorKind {
  kSemiImplicitEuler,  // config token "semi-implicit-euler"
  kRk4Zoh,             // config token "rk4-zoh": RK4 on the plant with the
                       // step's torques held constant
};

/// Full description of one experiment. All fields have working defaults;
/// `default_scenario()` is the canonical starting point.
struct Scenario {
  PlanarChain chain = PlanarChain::uniform(5, 0.3, 3.0, 0.15, -1.0);
  double m_o = 0.5;
  Gains gains;
  OperatorPolicy policy;        // x_d resolved (see default_scenario)
  ControlTargets targets;       // com_target resolved
  VecX q0;                      // initial configuration, released at rest
  double duration = 10.0;       // [s]
  double dt = 1e-3;             // [s]; 1 kHz control rate
  IntegratorKind integrator = IntegratorKind::kSemiImplicitEuler;
  bool plant_coriolis = false;  // add C_x qd to the simulated plant
  FeedbackMode mode = FeedbackMode::kForceOnly;
  double velocity_limit = 1e3;  // |qd| blowup bound [rad/s]
  double steady_state_window = 0.1;  // fraction of the run, from the end
  // Allowance of the passivity monitor: eta = 1e-9 S(0) + monitor_c dt^2.
  // Calibrated as the largest per-step |dS| of the zero-augmentation
  // default run over dt^2 (see calibrate_monitor_c); energy injected by an
  // unstable loop exceeds it by many orders of magnitude.
  double monitor_c = 1.75e4;

  CoupledSystem system() const {
    return CoupledSystem::with_point_mass(chain, m_o);
  }

  void validate() const {
    chain.validate();
    if (m_o < 0) throw std::invalid_argument("m_o must be >= 0");
    gains.validate();
    policy.validate();
    if (!(dt > 0)) throw std::invalid_argument("dt must be > 0");
    if (duration < 0) throw std::invalid_argument("duration must be >= 0");
    if (duration > 0 && duration < dt) {
      throw std::invalid_argument("duration must be >= dt");
    }
    if (q0.size() != chain.dof()) {
      throw std::invalid_argument("q0 dimension must match chain n");
    }
    if (!(velocity_limit > 0)) {
      throw std::invalid_argument("velocity_limit must be > 0");
    }
    if (steady_state_window <= 0 || steady_state_window > 1) {
      throw std::invalid_argument("steady_state_window must be in (0, 1]");
    }
  }
};

/// The documented reference experiment: a 5 x 0.3 m chain of 3 kg uniform
/// rods with a light (0.5 kg) point mass coupled at the end effector,
/// released ~0.1 m from the reach target and 0.05 m from the CoM
/// reference. Chosen so the closed loop settles cleanly at low
/// augmentation and develops the bandwidth-limited oscillation above
/// k_FF ~ 2.5.
inline Scenario default_scenario() {
  Scenario s;
  s.q0.resize(5);
  s.q0 << 1.4, -0.5, -0.5, -0.5, -0.5;
  const CoupledSystem sys = s.system();
  s.policy.x_d =
      forward_kinematics(s.chain, s.q0).end_effector() + Vec2(0.07, 0.07);
  s.targets.com_target = coupled_com(sys, s.q0) + Vec2(0.05, 0.0);
  return s;
}

/// One logged step.
struct LogRow {
  double t = 0.0;
  VecX q, qd, qdd;
  Vec2 x_ee = Vec2::Zero();
  Vec2 xdot_ee = Vec2::Zero();
  Vec2 x_c = Vec2::Zero();
  Vec2 f_ox = Vec2::Zero();  // physical interaction force at this state
  Vec2 f_op = Vec2::Zero();  // operator Cartesian force
  double effort = 0.0;       // |f_op|^2
  VecX tau;                  // applied exoskeleton torque (sum of parts)
  VecX tau_gravity, tau_balance, tau_amplification, tau_momentum;
  EnergyBreakdown energy;
};

struct OscillationReport {
  bool oscillating = false;
  double dominant_period = 0.0;  // [s]
  double amplitude = 0.0;        // peak deviation from window mean [N]
};

struct RunSummary {
  double cumulative_effort = 0.0;  // integral of |f_op|^2 dt [N^2 s]
  double ee_error_ss = 0.0;        // mean |x_ee - x_d| over the window [m]
  double com_error_ss = 0.0;       // mean horizontal CoM error [m]
  OscillationReport oscillation;
  MonitorReport monitor;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  bool diverged = false;
  double divergence_time = 0.0;
};

struct SimLog {
  Scenario scenario;
  std::vector<LogRow> rows;
  RunSummary summary;
};

namespace detail {

/// Plant acceleration of the coupled system:
/// qdd = M_xo^-1 (tau_x + J_x^T J_o#^T tau_o - h_x - J_x^T J_o#^T h_o
///                [- C_x qd]).
inline VecX plant_acceleration(const CoupledSystem& sys, const VecX& q,
                               const VecX& qd, const VecX& tau_x,
                               const VecX& tau_o, bool with_coriolis) {
  const MatX jx = ee_jacobian(sys.chain, q);
  const MatX jo_pinv_t = operator_pinv(sys, q).transpose();
  VecX rhs = tau_x + jx.transpose() * (jo_pinv_t * tau_o) -
             gravity_vector(sys.chain, q) -
             jx.transpose() * (jo_pinv_t * sys.op.gravity(q));
  if (with_coriolis) rhs -= coriolis_vector(sys.chain, q, qd);
  return coupled_mass_matrix(sys, q).ldlt().solve(rhs);
}

}  // namespace detail

/// Single-run stepper. Owns the one-step acceleration memory behind the
/// sampled F/T sensor (and the inertial feedback term in kWithInertial
/// mode). The sensor is warm-started at construction with the acceleration
/// consistent with the initial state, as if the controller had already
/// been engaged while the system was held there. One instance per run; not
/// shareable across concurrent runs.
class Simulator {
 public:
  explicit Simulator(Scenario scenario)
      : scenario_(std::move(scenario)), sys_(scenario_.system()) {
    scenario_.validate();
    qdd_prev_ = consistent_acceleration(JointState::rest(scenario_.q0));
  }

  const CoupledSystem& system() const { return sys_; }

  /// Evaluates one control step at `state`, returning the log row for this
  /// instant and the state advanced by dt. Throws NumericalBlowup when the
  /// next state exceeds the velocity bound or becomes non-finite.
  std::pair<LogRow, JointState> step(const JointState& state, double t) {
    LogRow row = evaluate(state, t);
    JointState next = integrate(state, row);
    qdd_prev_ = row.qdd;
    if (!next.q.allFinite() || !next.qd.allFinite() ||
        next.qd.norm() > scenario_.velocity_limit) {
      throw NumericalBlowup("velocity bound exceeded", t + scenario_.dt);
    }
    return {std::move(row), std::move(next)};
  }

  /// Evaluates the closed loop at `state` without advancing it (used for
  /// the terminal log row).
  ///
  /// The controller consumes the F/T sample available at this tick, which
  /// reflects the previous step's acceleration (one-sample sensor latency).
  /// The logged f_ox is the physical constraint force, consistent with this
  /// step's acceleration; in kWithInertial mode the sensor's inertial part
  /// and the controller's inertial feedforward cancel, so the amplified
  /// action reconstructs the operator torque exactly.
  LogRow evaluate(const JointState& state, double t) {
    const VecX& q = state.q;
    const VecX& qd = state.qd;
    LogRow row;
    row.t = t;
    row.q = q;
    row.qd = qd;

    const FkResult fk = forward_kinematics(sys_.chain, q);
    const MatX jx = ee_jacobian(sys_.chain, q);
    row.x_ee = fk.end_effector();
    row.xdot_ee = jx * qd;
    row.x_c = coupled_com(sys_, q);

    // (1) operator action from the impedance policy
    row.f_op = scenario_.policy.force(row.x_ee, row.xdot_ee);
    row.effort = row.f_op.squaredNorm();
    const VecX tau_o =
        sys_.op.coupling_jacobian(q).transpose() * VecX(row.f_op);

    // (2) F/T sample at this tick
    const Vec2 f_ox_sensed = interaction_force(sys_, q, qd, qdd_prev_, tau_o);

    // (3) controller
    const TorqueCommand cmd =
        control_torque(sys_, q, qd, f_ox_sensed, scenario_.targets,
                       scenario_.gains, scenario_.mode, qdd_prev_);
    row.tau = cmd.tau;
    row.tau_gravity = cmd.gravity_comp;
    row.tau_balance = cmd.balance;
    row.tau_amplification = cmd.amplification;
    row.tau_momentum = cmd.momentum_damping;

    // (4) plant acceleration under the applied torques
    row.qdd = detail::plant_acceleration(sys_, q, qd, cmd.tau, tau_o,
                                         scenario_.plant_coriolis);

    // Logged interaction force: the physical one at this instant.
    row.f_ox = interaction_force(sys_, q, qd, row.qdd, tau_o);

    row.energy = storage_total(sys_, q, qd, scenario_.targets,
                               scenario_.policy, scenario_.gains);
    row.energy.dissipation_rate_estimate += qd.dot(cmd.momentum_damping);
    return row;
  }

 private:
  /// Acceleration solving the closed loop with the sensed force taken at
  /// this same instant (the fixed point of the sensor loop; linear in qdd).
  VecX consistent_acceleration(const JointState& state) const {
    const VecX& q = state.q;
    const VecX& qd = state.qd;
    const MatX jx = ee_jacobian(sys_.chain, q);
    const MatX jo = sys_.op.coupling_jacobian(q);
    const Vec2 f_op = scenario_.policy.force(
        forward_kinematics(sys_.chain, q).end_effector(), jx * qd);
    const VecX tau_o = jo.transpose() * VecX(f_op);
    const MatX jo_pinv = pinv_min_norm(jo);
    const VecX h_o = sys_.op.gravity(q);
    const VecX tau_base =
        gravity_compensation_torque(sys_, q, scenario_.gains) +
        balance_torque(sys_, q, qd, scenario_.targets, scenario_.gains) +
        momentum_damping_torque(
            sys_, q, qd, active_task_stack(sys_, q, scenario_.gains.com_mode),
            scenario_.gains);
    MatX lhs = coupled_mass_matrix(sys_, q);
    VecX rhs = tau_base +
               jx.transpose() * (jo_pinv.transpose() * (tau_o - h_o)) -
               gravity_vector(sys_.chain, q);
    if (scenario_.plant_coriolis) {
      rhs -= coriolis_vector(sys_.chain, q, qd);
    }
    if (scenario_.gains.k_FF > 0) {
      const MatX jc = balance_jacobian(sys_, q, scenario_.gains.com_mode);
      const MatX nc = null_projector(
          jc, pinv_min_norm(jc, scenario_.gains.pinv_damping));
      const MatX jo_pinv_ctrl =
          pinv_min_norm(jo, scenario_.gains.pinv_damping);
      const MatX w = (jx * nc).transpose() * scenario_.gains.k_FF *
                     jo_pinv_ctrl.transpose();
      const MatX p_o = jo.transpose() * jo_pinv.transpose();
      lhs.noalias() += w * p_o * sys_.op.inertia(q) * (jo_pinv * jx);
      rhs.noalias() += w * (h_o + p_o * (tau_o - h_o));
      if (scenario_.mode == FeedbackMode::kWithInertial) {
        lhs.noalias() -= w * sys_.op.inertia(q) * (jo_pinv_ctrl * jx);
      }
    }
    return lhs.partialPivLu().solve(rhs);
  }

  JointState integrate(const JointState& state, const LogRow& row) const {
    const double dt = scenario_.dt;
    JointState next;
    if (scenario_.integrator == IntegratorKind::kSemiImplicitEuler) {
      next.qd = state.qd + dt * row.qdd;
      next.q = state.q + dt * next.qd;
      return next;
    }
    // RK4 with the step's torques held constant (zero-order hold). The
    // operator torque is re-expressed through J_o at the substates.
    const VecX tau_x = row.tau;
    const VecX tau_o =
        sys_.op.coupling_jacobian(state.q).transpose() * VecX(row.f_op);
    auto accel = [&](const VecX& q, const VecX& qd) {
      return detail::plant_acceleration(sys_, q, qd, tau_x, tau_o,
                                        scenario_.plant_coriolis);
    };
    const VecX k1q = state.qd;
    const VecX k1v = row.qdd;
    const VecX k2q = state.qd + 0.5 * dt * k1v;
    const VecX k2v = accel(state.q + 0.5 * dt * k1q, k2q);
    const VecX k3q = state.qd + 0.5 * dt * k2v;
    const VecX k3v = accel(state.q + 0.5 * dt * k2q, k3q);
    const VecX k4q = state.qd + dt * k3v;
    const VecX k4v = accel(state.q + dt * k3q, k4q);
    next.q = state.q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    next.qd = state.qd + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    return next;
  }

  Scenario scenario_;
  CoupledSystem sys_;
  VecX qdd_prev_;  // sensor/feedback memory; zero before the first step
};

/// Instantaneous |f_op|^2 series and its time integral (trapezoidal).
struct EffortSeries {
  std::vector<double> instantaneous;
  double cumulative = 0.0;
};

inline EffortSeries effort_series(const SimLog& log) {
  EffortSeries e;
  e.instantaneous.reserve(log.rows.size());
  for (const LogRow& row : log.rows) e.instantaneous.push_back(row.effort);
  for (size_t i = 1; i < log.rows.size(); ++i) {
    e.cumulative += 0.5 *
                    (e.instantaneous[i - 1] + e.instantaneous[i]) *
                    (log.rows[i].t - log.rows[i - 1].t);
  }
  return e;
}

/// Steady-state tracking errors: means over the final fraction of the run.
struct ErrorMetrics {
  double ee_error = 0.0;   // |x_ee - x_d| [m]
  double com_error = 0.0;  // |x_c,horizontal - x_c^d| [m]
};

inline ErrorMetrics error_metrics(const SimLog& log) {
  ErrorMetrics m;
  if (log.rows.empty()) return m;
  const size_t count = std::max<size_t>(
      1, static_cast<size_t>(std::llround(
             log.scenario.steady_state_window * log.rows.size())));
  const size_t begin = log.rows.size() - count;
  for (size_t i = begin; i < log.rows.size(); ++i) {
    m.ee_error += (log.rows[i].x_ee - log.scenario.policy.x_d).norm();
    m.com_error += std::abs(log.rows[i].x_c.x() -
                            log.scenario.targets.com_target.x());
  }
  m.ee_error /= count;
  m.com_error /= count;
  return m;
}

/// Oscillation detector: within the final half of the run, |f_ox| must
/// deviate from its window mean with at least 5 sign alternations and a
/// peak deviation above 5% of the run's peak force.
inline OscillationReport oscillation_report(const SimLog& log) {
  OscillationReport rep;
  if (log.rows.size() < 4) return rep;
  double run_peak = 0.0;
  for (const LogRow& row : log.rows) {
    run_peak = std::max(run_peak, row.f_ox.norm());
  }
  const size_t begin = log.rows.size() / 2;
  const size_t count = log.rows.size() - begin;
  double mean = 0.0;
  for (size_t i = begin; i < log.rows.size(); ++i) {
    mean += log.rows[i].f_ox.norm();
  }
  mean /= count;

  int alternations = 0;
  double peak_dev = 0.0;
  int last_sign = 0;
  std::vector<double> flip_times;
  for (size_t i = begin; i < log.rows.size(); ++i) {
    const double dev = log.rows[i].f_ox.norm() - mean;
    peak_dev = std::max(peak_dev, std::abs(dev));
    const int sign = dev > 0 ? 1 : (dev < 0 ? -1 : 0);
    if (sign != 0) {
      if (last_sign != 0 && sign != last_sign) {
        ++alternations;
        flip_times.push_back(log.rows[i].t);
      }
      last_sign = sign;
    }
  }
  rep.amplitude = peak_dev;
  rep.oscillating = alternations >= 5 && peak_dev > 0.05 * run_peak;
  if (alternations >= 2) {
    // Mean spacing between alternations is half the dominant period.
    const double span = flip_times.back() - flip_times.front();
    rep.dominant_period = 2.0 * span / (alternations - 1);
  }
  return rep;
}

/// Runs a scenario to completion, recording divergence in the summary
/// instead of throwing. Rows logged before the divergence are preserved.
inline SimLog run_tolerant(const Scenario& scenario) {
  SimLog log;
  log.scenario = scenario;
  scenario.validate();
  Simulator sim(scenario);
  const long steps = std::lround(scenario.duration / scenario.dt);
  log.rows.reserve(steps + 1);
  PassivityMonitor monitor(scenario.dt, scenario.monitor_c);

  JointState state = JointState::rest(scenario.q0);
  try {
    for (long k = 0; k < steps; ++k) {
      auto [row, next] = sim.step(state, k * scenario.dt);
      monitor.observe(row.t, row.energy);
      log.rows.push_back(std::move(row));
      state = std::move(next);
    }
    LogRow last = sim.evaluate(state, steps * scenario.dt);
    monitor.observe(last.t, last.energy);
    log.rows.push_back(std::move(last));
  } catch (const NumericalBlowup& blowup) {
    log.summary.diverged = true;
    log.summary.divergence_time = blowup.time();
  }

  log.summary.monitor = monitor.report();
  log.summary.cumulative_effort = effort_series(log).cumulative;
  const ErrorMetrics errors = error_metrics(log);
  log.summary.ee_error_ss = errors.ee_error;
  log.summary.com_error_ss = errors.com_error;
  log.summary.oscillation = oscillation_report(log);
  if (!log.rows.empty()) {
    log.summary.initial_energy = log.rows.front().energy.total;
    log.summary.final_energy = log.rows.back().energy.total;
  }
  return log;
}

/// Runs a scenario; throws NumericalBlowup (with the divergence time) if
/// the state escapes the velocity bound. Deterministic: identical
/// scenarios produce identical logs.
inline SimLog run(const Scenario& scenario) {
  SimLog log = run_tolerant(scenario);
  if (log.summary.diverged) {
    throw NumericalBlowup("simulation diverged",
                          log.summary.divergence_time);
  }
  return log;
}

/// Monitor allowance calibrated from a zero-augmentation baseline run of
/// `scenario`: the largest per-step |dS| of that run divided by dt^2.
inline double calibrate_monitor_c(const Scenario& scenario) {
  Scenario base = scenario;
  base.gains.k_FF = 0.0;
  const SimLog log = run_tolerant(base);
  double max_abs = 0.0;
  for (size_t i = 1; i < log.rows.size(); ++i) {
    max_abs = std::max(max_abs, std::abs(log.rows[i].energy.total -
                                         log.rows[i - 1].energy.total));
  }
  return max_abs / (scenario.dt * scenario.dt);
}

/// One sweep entry.
struct SweepRow {
  double k_ff = 0.0;
  double cumulative_effort = 0.0;
  double effort_ratio = 1.0;  // vs the zero-augmentation run
  double peak_fox_x = 0.0;    // peak |f_ox,x|
  double peak_fox_y = 0.0;    // peak |f_ox,y|
  double peak_fox_norm = 0.0;
  double ee_error_ss = 0.0;
  double com_error_ss = 0.0;
  bool oscillating = false;
  long passivity_violations = 0;
  bool diverged = false;
  double divergence_time = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;   // ordered by k_FF
  std::vector<SimLog> logs;     // same order
};

/// Repeats the scenario at each augmentation factor. Per-run failures are
/// recorded in their row; the sweep continues. `max_threads` caps
/// parallelism (0 or 1 = sequential); results do not depend on it.
inline SweepReport sweep(const Scenario& scenario, std::vector<double> k_ff_values,
                         unsigned max_threads = 0) {
  if (k_ff_values.empty()) {
    throw std::invalid_argument("sweep needs at least one k_FF value");
  }
  std::sort(k_ff_values.begin(), k_ff_values.end());
  SweepReport report;
  report.logs.resize(k_ff_values.size());

  auto run_one = [&](size_t i) {
    Scenario s = scenario;
    s.gains.k_FF = k_ff_values[i];
    report.logs[i] = run_tolerant(s);
  };

  const unsigned workers =
      std::min<unsigned>(max_threads, k_ff_values.size());
  if (workers > 1) {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < k_ff_values.size();
             i = next.fetch_add(1)) {
          run_one(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  } else {
    for (size_t i = 0; i < k_ff_values.size(); ++i) run_one(i);
  }

  double base_effort = 0.0;
  for (size_t i = 0; i < k_ff_values.size(); ++i) {
    const SimLog& log = report.logs[i];
    SweepRow row;
    row.k_ff = k_ff_values[i];
    row.cumulative_effort = log.summary.cumulative_effort;
    for (const LogRow& r : log.rows) {
      row.peak_fox_x = std::max(row.peak_fox_x, std::abs(r.f_ox.x()));
      row.peak_fox_y = std::max(row.peak_fox_y, std::abs(r.f_ox.y()));
      row.peak_fox_norm = std::max(row.peak_fox_norm, r.f_ox.norm());
    }
    row.ee_error_ss = log.summary.ee_error_ss;
    row.com_error_ss = log.summary.com_error_ss;
    row.oscillating = log.summary.oscillation.oscillating;
    row.passivity_violations = log.summary.monitor.violations;
    row.diverged = log.summary.diverged;
    row.divergence_time = log.summary.divergence_time;
    if (i == 0) base_effort = row.cumulative_effort;
    if (k_ff_values[i] == 0.0) base_effort = row.cumulative_effort;
    report.rows.push_back(row);
  }
  for (SweepRow& row : report.rows) {
    row.effort_ratio =
        base_effort > 0 ? row.cumulative_effort / base_effort : 1.0;
  }
  return report;
}

}  // namespace cwbc

#endif  // CWBC_SIM_HPP_
