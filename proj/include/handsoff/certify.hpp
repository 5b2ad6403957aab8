/*
 Copyright 2026 The handsoff Authors

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
#ifndef HANDSOFF_CERTIFY_HPP
#define HANDSOFF_CERTIFY_HPP

#include "handsoff/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace handsoff {

// =============================================================================
// Subdifferentials of the norms
// =============================================================================

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
  double distance(double x) const {
    return x < lo ? lo - x : (x > hi ? x - hi : 0.0);
  }
  bool operator==(const Interval &o) const = default;
};

/// Product of intervals: [-1, 1] at zero coordinates, {sign(u_k)} elsewhere.
struct L1Subdifferential {
  std::vector<Interval> coords;

  VectorXd distance(const Eigen::Ref<const VectorXd> &y) const {
    VectorXd d(y.size());
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      d(k) = coords[static_cast<std::size_t>(k)].distance(y(k));
    }
    return d;
  }
  bool contains(const Eigen::Ref<const VectorXd> &y, double tol = 0.0) const {
    return y.size() == static_cast<Eigen::Index>(coords.size()) &&
           distance(y).lpNorm<Eigen::Infinity>() <= tol;
  }
};

/// The closed unit ball at u = 0, the single point u / ||u|| otherwise.
struct L2Subdifferential {
  bool is_ball = true;
  VectorXd point;

  double distance(const Eigen::Ref<const VectorXd> &y) const {
    if (is_ball) return std::max(0.0, y.norm() - 1.0);
    return (y - point).norm();
  }
  bool contains(const Eigen::Ref<const VectorXd> &y, double tol = 0.0) const {
    return distance(y) <= tol;
  }
};

/**
 * Face of the l1 unit ball selected by the coordinates attaining ||u||_inf:
 * y with y_k = c_k sign(u_k), c_k >= 0, sum c_k = 1 on active coordinates and
 * y_k = 0 elsewhere. At u = 0 every coordinate is active with free sign.
 */
struct LinfSubdifferential {
  std::vector<int> pattern; ///< sign(u_k) on active coordinates, 0 elsewhere
  bool at_zero = false;

  bool contains(const Eigen::Ref<const VectorXd> &y, double tol = 0.0) const {
    if (y.size() != static_cast<Eigen::Index>(pattern.size())) return false;
    if (at_zero) return y.lpNorm<1>() <= 1.0 + tol;
    double mass = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const int s = pattern[static_cast<std::size_t>(k)];
      if (s == 0) {
        if (std::abs(y(k)) > tol) return false;
      } else {
        if (y(k) * s < -tol) return false;
        mass += y(k) * s;
      }
    }
    return std::abs(mass - 1.0) <= tol;
  }
};

inline L1Subdifferential subdiff_l1(const Eigen::Ref<const VectorXd> &u) {
  L1Subdifferential s;
  s.coords.reserve(static_cast<std::size_t>(u.size()));
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    if (u(k) == 0.0) {
      s.coords.push_back({-1.0, 1.0});
    } else {
      const double sg = u(k) > 0.0 ? 1.0 : -1.0;
      s.coords.push_back({sg, sg});
    }
  }
  return s;
}

inline L2Subdifferential subdiff_l2(const Eigen::Ref<const VectorXd> &u) {
  L2Subdifferential s;
  const double nu = u.norm();
  if (nu > 0.0) {
    s.is_ball = false;
    s.point = u / nu;
  }
  return s;
}

/// `rel_tol` widens the test |u_k| = ||u||_inf to |u_k| >= (1 - rel_tol)||u||_inf.
inline LinfSubdifferential subdiff_linf(const Eigen::Ref<const VectorXd> &u,
                                        double rel_tol = 0.0) {
  LinfSubdifferential s;
  s.pattern.assign(static_cast<std::size_t>(u.size()), 0);
  const double m = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  if (m == 0.0) {
    s.at_zero = true;
    return s;
  }
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    if (std::abs(u(k)) >= (1.0 - rel_tol) * m) {
      s.pattern[static_cast<std::size_t>(k)] = u(k) > 0.0 ? 1 : -1;
    }
  }
  return s;
}

// =============================================================================
// Certificates
// =============================================================================

class UncertifiableError : public std::invalid_argument {
public:
  explicit UncertifiableError(const std::string &what)
      : std::invalid_argument("uncertifiable: " + what) {}
};

/**
 * @brief KKT residuals of a candidate solution.
 *
 * Primal residuals are in the units of the constraints. Dual-side residuals
 * (stationarity, slackness, sign) are divided by the l1 weight so that they
 * do not change when the objective is rescaled. All are compared against
 * `tolerance` = tol (1 + ||Ad^N xi||).
 */
struct Certificate {
  double stationarity_residual = 0.0;
  double eq_violation = 0.0;
  double box_violation = 0.0;
  double state_violation = 0.0;
  double slackness_residual = 0.0;
  double dual_negativity = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/**
 * Evaluate the first-order conditions
 *
 *   0 in d reg(u) + Phi^T beta + gamma d||u||_inf + sum_i alpha_i Psi_i^T x_i/||x_i||
 *   gamma (||u||_inf - u_max) = 0,  alpha_i (||x_i|| - theta) = 0,
 *   gamma, alpha_i >= 0
 *
 * at (sol.u, sol.duals). The box dual vector is read as gamma y with
 * gamma = ||box||_1; each state dual is reduced to its component alpha_i
 * along x_i, the rest counting toward stationarity.
 */
inline Certificate certify(const ProblemSpec &spec, const Solution &sol,
                           double tol = 1e-4) {
  if (!(tol > 0.0)) throw std::invalid_argument("certify: tol must be positive");
  const DiscreteProblem &d = spec.discrete;
  const Regularizer &reg = spec.reg;
  const int N = d.N;
  const auto n = d.order();
  const double U = d.plant.u_max;
  const bool constrained = spec.theta.has_value() && N >= 2;

  if (sol.u.size() != N) throw UncertifiableError("control has the wrong length");
  if (sol.duals.terminal.size() != n) {
    throw UncertifiableError("terminal multiplier missing");
  }
  if (sol.duals.box.size() != N) throw UncertifiableError("box multiplier missing");
  if (constrained &&
      (sol.duals.state.rows() != N - 1 || sol.duals.state.cols() != n)) {
    throw UncertifiableError("state multipliers missing");
  }

  Certificate c;
  c.tolerance = tol * (1.0 + d.b_terminal.norm());
  const double active_band = 10.0 * c.tolerance;
  const double l1w = reg.l1_weight();
  const VectorXd &u = sol.u;

  const MatrixXd X = simulate(d, u);
  c.eq_violation = X.col(N).norm();
  const double umax = u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
  c.box_violation = std::max(0.0, umax - U);

  // Gradient contributions of the constraints.
  VectorXd r = d.Phi.transpose() * sol.duals.terminal;
  double slack = 0.0;
  double negativity = 0.0;

  // Box: gamma y with y in the linf face at u.
  const VectorXd &m = sol.duals.box;
  const double gamma = m.lpNorm<1>();
  if (gamma > 0.0) {
    const auto face = subdiff_linf(u, 1e-12);
    for (Eigen::Index k = 0; k < N; ++k) {
      const int s = face.pattern[static_cast<std::size_t>(k)];
      if (s == 0 || face.at_zero) {
        negativity = std::max(negativity, std::abs(m(k)));
      } else {
        negativity = std::max(negativity, std::max(0.0, -m(k) * s));
      }
    }
    slack += gamma * std::abs(U - umax);
    if (umax < U - active_band) slack += gamma;
  }
  r += m;

  if (constrained) {
    const double theta = *spec.theta;
    MatrixXd mu_along(n, N - 1);
    for (Eigen::Index i = 1; i < N; ++i) {
      const VectorXd xi = X.col(i);
      const double nx = xi.norm();
      const VectorXd mui = sol.duals.state.row(i - 1).transpose();
      c.state_violation = std::max(c.state_violation, nx - theta);
      if (nx == 0.0) {
        mu_along.col(i - 1).setZero();
        continue;
      }
      const double alpha_raw = mui.dot(xi) / nx;
      negativity = std::max(negativity, std::max(0.0, -alpha_raw));
      const double alpha = std::max(0.0, alpha_raw);
      mu_along.col(i - 1) = alpha * xi / nx;
      slack += alpha * std::abs(theta - nx);
      if (nx < theta - active_band) slack += alpha;
    }
    c.state_violation = std::max(0.0, c.state_violation);
    r += apply_psi_transpose(d.Ad, d.Bd, mu_along);
  }

  // Distance from -r to d reg(u), coordinatewise where the set is a product.
  const VectorXd g = -r;
  double dist = 0.0;
  const auto l1 = subdiff_l1(u);
  switch (reg.kind) {
  case Method::Lasso:
    dist = l1.distance(g / l1w).norm() * l1w;
    break;
  case Method::ElasticNet: {
    const VectorXd rest = g - 2.0 * reg.l2_weight() * u;
    dist = l1.distance(rest / l1w).norm() * l1w;
    break;
  }
  case Method::Clot: {
    const double c2 = reg.l2_weight();
    const auto l2 = subdiff_l2(u);
    if (l2.is_ball) {
      // min over y1 in [-1,1]^N of ||g - l1w y1|| beyond radius c2.
      dist = std::max(0.0, prox_l1(g, l1w).norm() - c2);
    } else {
      const VectorXd rest = g - c2 * l2.point;
      dist = l1.distance(rest / l1w).norm() * l1w;
    }
    break;
  }
  }

  c.stationarity_residual = dist / l1w;
  c.slackness_residual = slack / l1w;
  c.dual_negativity = negativity / l1w;
  c.passed = c.stationarity_residual <= c.tolerance &&
             c.eq_violation <= c.tolerance && c.box_violation <= c.tolerance &&
             c.state_violation <= c.tolerance &&
             c.slackness_residual <= c.tolerance &&
             c.dual_negativity <= c.tolerance;
  return c;
}

} // namespace handsoff

#endif // HANDSOFF_CERTIFY_HPP
