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

#ifndef CWBC_TYPES_HPP_
#define CWBC_TYPES_HPP_

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cwbc {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Thrown when a task Jacobian is rank deficient and no damping was
/// requested, so the minimal-norm pseudoinverse does not exist.
class SingularTask : public std::runtime_error {
 public:
  explicit SingularTask(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a simulation diverges (velocity bound exceeded or
/// non-finite state). Carries the simulated time of divergence.
class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Thrown on malformed or invalid configuration input. `where` names the
/// offending key (and line, when parsed from a file).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline void check_dim(const VecX& v, Eigen::Index n, const char* name) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(name) + ": expected dimension " +
                                std::to_string(n) + ", got " +
                                std::to_string(v.size()));
  }
}

}  // namespace cwbc

#endif  // CWBC_TYPES_HPP_
