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
// Kinematics and dynamics of a planar serial chain with revolute joints and
// a fixed base. Link angles are cumulative: the absolute angle of link i is
// the sum of joint angles 0..i. The base frame has x to the right, y up,
// and gravity acting along -y.

#ifndef CWBC_RIGIDBODY_HPP_
#define CWBC_RIGIDBODY_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "cwbc/types.hpp"

namespace cwbc {

/// Planar revolute-joint serial chain. All quantities SI.
struct PlanarChain {
  VecX length;      // link lengths [m], > 0
  VecX mass;        // link masses [kg], > 0
  VecX com_offset;  // CoM distance from the proximal joint [m], in [0, length]
  VecX inertia_zz;  // rotational inertia about the link CoM [kg m^2], >= 0
  double gravity = 9.81;  // magnitude [m/s^2], acts along -y

  int dof() const { return static_cast<int>(length.size()); }

  /// Chain of n identical links. `inertia_zz < 0` selects the uniform-rod
  /// value m*l^2/12.
  static PlanarChain uniform(int n, double link_length, double link_mass,
                             double link_com_offset, double link_inertia_zz,
                             double gravity = 9.81) {
    PlanarChain c;
    c.length = VecX::Constant(n, link_length);
    c.mass = VecX::Constant(n, link_mass);
    c.com_offset = VecX::Constant(n, link_com_offset);
    if (link_inertia_zz < 0) {
      link_inertia_zz = link_mass * link_length * link_length / 12.0;
    }
    c.inertia_zz = VecX::Constant(n, link_inertia_zz);
    c.gravity = gravity;
    c.validate();
    return c;
  }

  void validate() const {
    const auto n = length.size();
    if (n < 1) throw std::invalid_argument("chain must have at least 1 link");
    if (mass.size() != n || com_offset.size() != n || inertia_zz.size() != n) {
      throw std::invalid_argument("chain: per-link arrays disagree on n");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(length[i] > 0)) throw std::invalid_argument("length must be > 0");
      if (!(mass[i] > 0)) throw std::invalid_argument("mass must be > 0");
      if (com_offset[i] < 0 || com_offset[i] > length[i]) {
        throw std::invalid_argument("com_offset must lie within [0, length]");
      }
      if (inertia_zz[i] < 0) {
        throw std::invalid_argument("inertia_zz must be >= 0");
      }
    }
    if (gravity < 0) throw std::invalid_argument("gravity must be >= 0");
  }
};

/// Joint-space state of a chain.
struct JointState {
  VecX q;   // [rad]
  VecX qd;  // [rad/s]

  static JointState rest(const VecX& q0) {
    return JointState{q0, VecX::Zero(q0.size())};
  }
};

/// Forward-kinematics result: joint positions (base first, end effector
/// last) and absolute link angles.
struct FkResult {
  std::vector<Vec2> joints;  // n+1 points, joints[0] = base at origin
  VecX link_angle;           // n cumulative angles [rad]

  const Vec2& end_effector() const { return joints.back(); }
};

inline FkResult forward_kinematics(const PlanarChain& chain, const VecX& q) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  FkResult fk;
  fk.joints.resize(n + 1);
  fk.link_angle.resize(n);
  fk.joints[0].setZero();
  double angle = 0.0;
  for (int i = 0; i < n; ++i) {
    angle += q[i];
    fk.link_angle[i] = angle;
    fk.joints[i + 1] =
        fk.joints[i] + chain.length[i] * Vec2(std::cos(angle), std::sin(angle));
  }
  return fk;
}

/// Position of the material point at `local_offset` along link `link_index`
/// (1-based, as counted from the base).
inline Vec2 link_point(const PlanarChain& chain, const VecX& q, int link_index,
                       double local_offset) {
  const int n = chain.dof();
  if (link_index < 1 || link_index > n) {
    throw std::invalid_argument("link_index out of range");
  }
  if (local_offset < 0 || local_offset > chain.length[link_index - 1]) {
    throw std::invalid_argument("local_offset outside link");
  }
  const FkResult fk = forward_kinematics(chain, q);
  const double a = fk.link_angle[link_index - 1];
  return fk.joints[link_index - 1] +
         local_offset * Vec2(std::cos(a), std::sin(a));
}

/// 2 x n Jacobian of the material point at `local_offset` along link
/// `link_index` (1-based). Columns j >= link_index are zero.
inline MatX point_jacobian(const PlanarChain& chain, const VecX& q,
                           int link_index, double local_offset) {
  const int n = chain.dof();
  if (link_index < 1 || link_index > n) {
    throw std::invalid_argument("link_index out of range");
  }
  if (local_offset < 0 || local_offset > chain.length[link_index - 1]) {
    throw std::invalid_argument("local_offset outside link");
  }
  const FkResult fk = forward_kinematics(chain, q);
  const double a = fk.link_angle[link_index - 1];
  const Vec2 p = fk.joints[link_index - 1] +
                 local_offset * Vec2(std::cos(a), std::sin(a));
  MatX jac = MatX::Zero(2, n);
  // dp/dq_j = z x (p - joint_j) for every joint j proximal to the point.
  for (int j = 0; j < link_index; ++j) {
    const Vec2 r = p - fk.joints[j];
    jac(0, j) = -r.y();
    jac(1, j) = r.x();
  }
  return jac;
}

/// Jacobian of the end effector (coupling point).
inline MatX ee_jacobian(const PlanarChain& chain, const VecX& q) {
  const int n = chain.dof();
  return point_jacobian(chain, q, n, chain.length[n - 1]);
}

/// Joint-space inertia matrix, assembled from per-link CoM Jacobians:
/// M = sum_i (m_i Jv_i^T Jv_i + I_i Jw_i^T Jw_i). Symmetric positive
/// definite for any valid chain.
inline MatX mass_matrix(const PlanarChain& chain, const VecX& q) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  MatX m = MatX::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    const MatX jv = point_jacobian(chain, q, i, chain.com_offset[i - 1]);
    m.noalias() += chain.mass[i - 1] * jv.transpose() * jv;
    // Planar angular Jacobian of link i is [1 ... 1 0 ... 0].
    const double inertia = chain.inertia_zz[i - 1];
    if (inertia > 0) {
      m.topLeftCorner(i, i).array() += inertia;
    }
  }
  return m;
}

/// Gravitational potential of the chain, sum_i m_i g y_com,i.
inline double potential_energy(const PlanarChain& chain, const VecX& q) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  const FkResult fk = forward_kinematics(chain, q);
  double u = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y =
        fk.joints[i].y() + chain.com_offset[i] * std::sin(fk.link_angle[i]);
    u += chain.mass[i] * chain.gravity * y;
  }
  return u;
}

/// Gravity torque vector h = dU/dq, with the sign convention
/// M qdd + C qd + h = tau.
inline VecX gravity_vector(const PlanarChain& chain, const VecX& q) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  VecX h = VecX::Zero(n);
  for (int i = 1; i <= n; ++i) {
    const MatX jv = point_jacobian(chain, q, i, chain.com_offset[i - 1]);
    h.noalias() +=
        chain.mass[i - 1] * chain.gravity * jv.row(1).transpose();
  }
  return h;
}

/// Partial derivatives dM/dq_k, by central differences of the mass matrix.
inline std::vector<MatX> mass_matrix_partials(const PlanarChain& chain,
                                              const VecX& q,
                                              double step = 1e-6) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  std::vector<MatX> dm(n);
  VecX qp = q, qm = q;
  for (int k = 0; k < n; ++k) {
    qp[k] = q[k] + step;
    qm[k] = q[k] - step;
    dm[k] = (mass_matrix(chain, qp) - mass_matrix(chain, qm)) / (2.0 * step);
    qp[k] = q[k];
    qm[k] = q[k];
  }
  return dm;
}

/// Coriolis/centripetal matrix C(q, qd) from the Christoffel symbols of the
/// mass matrix, c_ijk = (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) / 2.
/// Satisfies qd^T (Mdot - 2C) qd = 0 for Mdot built from the same partials.
inline MatX coriolis_matrix(const PlanarChain& chain, const VecX& q,
                            const VecX& qd) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  check_dim(qd, n, "qd");
  const std::vector<MatX> dm = mass_matrix_partials(chain, q);
  MatX c = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double cij = 0.0;
      for (int k = 0; k < n; ++k) {
        cij += 0.5 * (dm[k](i, j) + dm[j](i, k) - dm[i](j, k)) * qd[k];
      }
      c(i, j) = cij;
    }
  }
  return c;
}

/// Coriolis/centripetal torque C(q, qd) qd.
inline VecX coriolis_vector(const PlanarChain& chain, const VecX& q,
                            const VecX& qd) {
  return coriolis_matrix(chain, q, qd) * qd;
}

/// Chain center of mass and total mass.
struct ComResult {
  Vec2 position;
  double total_mass;
};

inline ComResult chain_com(const PlanarChain& chain, const VecX& q) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  const FkResult fk = forward_kinematics(chain, q);
  Vec2 weighted = Vec2::Zero();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = fk.link_angle[i];
    const Vec2 p =
        fk.joints[i] + chain.com_offset[i] * Vec2(std::cos(a), std::sin(a));
    weighted += chain.mass[i] * p;
    total += chain.mass[i];
  }
  return ComResult{weighted / total, total};
}

/// 2 x n Jacobian of the chain center of mass (mass-weighted average of the
/// per-link CoM Jacobians).
inline MatX chain_com_jacobian(const PlanarChain& chain, const VecX& q) {
  const int n = chain.dof();
  check_dim(q, n, "q");
  MatX jac = MatX::Zero(2, n);
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    jac.noalias() += chain.mass[i - 1] *
                     point_jacobian(chain, q, i, chain.com_offset[i - 1]);
    total += chain.mass[i - 1];
  }
  return jac / total;
}

/// Kinetic energy at a joint-space state.
inline double kinetic_energy(const PlanarChain& chain, const VecX& q,
                             const VecX& qd) {
  return 0.5 * qd.dot(mass_matrix(chain, q) * qd);
}

}  // namespace cwbc

#endif  // CWBC_RIGIDBODY_HPP_
