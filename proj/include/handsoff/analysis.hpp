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
#ifndef HANDSOFF_ANALYSIS_HPP
#define HANDSOFF_ANALYSIS_HPP

#include "handsoff/certify.hpp"
#include "handsoff/parallel.hpp"
#include "handsoff/solver.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace handsoff {

inline constexpr std::array<Method, 3> kAllMethods = {
    Method::Lasso, Method::ElasticNet, Method::Clot};

// =============================================================================
// Sparsity
// =============================================================================

struct SparsityReport {
  double density = 0.0;
  double threshold = 1e-4;
  int nonzero_count = 0;
  int N = 0;
};

/// Fraction of samples with |u_k| > threshold.
inline SparsityReport sparsity_density(const Eigen::Ref<const VectorXd> &u,
                                       double threshold = 1e-4) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("sparsity_density: threshold must be positive");
  }
  SparsityReport r;
  r.threshold = threshold;
  r.N = static_cast<int>(u.size());
  r.nonzero_count = static_cast<int>((u.array().abs() > threshold).count());
  r.density = r.N ? static_cast<double>(r.nonzero_count) / r.N : 0.0;
  return r;
}

/// Largest Euclidean norm over the intermediate states x_1..x_{N-1}.
inline double l_max(const Solution &sol) {
  if (sol.states.size() == 0) return 0.0;
  return sol.states.rowwise().norm().maxCoeff();
}

// =============================================================================
// Theta sweep
// =============================================================================

struct SweepPoint {
  double theta = 0.0;
  std::array<double, 3> density{};
  std::array<Status, 3> status{Status::MaxIters, Status::MaxIters,
                               Status::MaxIters};
  std::array<int, 3> iterations{};
  std::array<bool, 3> certified{}; ///< false when not optimal or not checked

  bool infeasible() const {
    for (auto s : status) {
      if (s == Status::Infeasible) return true;
    }
    return false;
  }
  /// "optimal", "infeasible", or "max_iters" if some method did not converge.
  std::string_view label() const {
    if (infeasible()) return to_string(Status::Infeasible);
    for (auto s : status) {
      if (s != Status::Optimal) return to_string(Status::MaxIters);
    }
    return to_string(Status::Optimal);
  }
};

struct ThetaRange {
  double theta_max = 0.0;
  double theta_min = std::numeric_limits<double>::quiet_NaN(); ///< NaN if none
  double step = 0.0;
  std::vector<SweepPoint> per_theta;
  bool reached_infeasible = false;
};

struct SweepOptions {
  double theta_floor = 0.0; ///< stop before going below this value
  SolverConfig solver{};
  bool certify = true;
  double certify_tol = 1e-4;
  /// Starting points for the first theta, indexed like kAllMethods.
  std::optional<std::array<Solution, 3>> warm;
  /// Called after every solve, e.g. to keep or inspect solutions.
  std::function<void(const ProblemSpec &, const Solution &)> observer;
};

/**
 * Solve the three formulations on theta = theta_max - k step, k = 0, 1, ...,
 * warm-starting each method from its previous solution, until an
 * Infeasible status is met (recorded, then the sweep stops) or theta drops
 * below the floor. The feasible set does not depend on the regularizer, so
 * a single Infeasible status ends the sweep.
 */
inline ThetaRange theta_sweep(const DiscreteProblem &d, double lambda,
                              double theta_max, double step,
                              const SweepOptions &opt = {}) {
  if (!(step > 0.0)) throw std::invalid_argument("theta_sweep: step must be positive");
  if (!(theta_max > 0.0)) {
    throw std::invalid_argument("theta_sweep: theta_max must be positive");
  }
  ThetaRange out;
  out.theta_max = theta_max;
  out.step = step;

  std::array<std::optional<Solution>, 3> prev;
  if (opt.warm) {
    for (std::size_t m = 0; m < 3; ++m) prev[m] = (*opt.warm)[m];
  }

  // Relative slack so that a floor on the grid is included.
  const double floor = std::max(opt.theta_floor, 0.0) - 1e-9 * step;
  for (int k = 0;; ++k) {
    const double theta = theta_max - k * step;
    if (theta <= 0.0 || theta < floor) break;
    SweepPoint pt;
    pt.theta = theta;
    for (std::size_t m = 0; m < 3; ++m) {
      const auto spec = make_problem(d, kAllMethods[m], lambda, theta);
      Solution s = solve(spec, opt.solver, prev[m]);
      if (opt.observer) opt.observer(spec, s);
      pt.status[m] = s.status;
      pt.iterations[m] = s.iterations;
      pt.density[m] = sparsity_density(s.u).density;
      if (opt.certify && s.status == Status::Optimal) {
        pt.certified[m] = certify(spec, s, opt.certify_tol).passed;
      }
      if (s.status != Status::Infeasible) prev[m] = std::move(s);
    }
    out.per_theta.push_back(pt);
    if (pt.infeasible()) {
      out.reached_infeasible = true;
      break;
    }
    out.theta_min = theta;
  }
  return out;
}

// =============================================================================
// Continuity in the sampling time
// =============================================================================

struct ContinuityStudy {
  std::vector<double> h_values;
  std::vector<double> max_diffs;
  std::vector<int> N_values;
  /// Least-squares slope of log(max_diff) against log(h) over the positive
  /// differences; NaN when fewer than two are positive.
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  Method method = Method::Clot;
};

/// max_k |u_k - u_{k+1}|, k = 0..N-2 (no wraparound).
inline double max_adjacent_difference(const Eigen::Ref<const VectorXd> &u) {
  if (u.size() < 2) return 0.0;
  return (u.tail(u.size() - 1) - u.head(u.size() - 1)).cwiseAbs().maxCoeff();
}

/// Slope of the least-squares line through (log x_i, log y_i), y_i > 0.
inline double loglog_slope(const std::vector<double> &x,
                           const std::vector<double> &y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  const double den = m * sxx - sx * sx;
  if (m < 2 || !(std::abs(den) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / den;
}

/// Default grid T/250, T/500, T/1000, T/2000, T/4000.
inline std::vector<double> default_h_values(double T) {
  return {T / 250, T / 500, T / 1000, T / 2000, T / 4000};
}

/**
 * Solve the same problem for each sampling time (independently, possibly in
 * parallel) and record the largest jump between adjacent control samples.
 * Every h must divide T; h_values must be strictly decreasing with at least
 * three entries. Throws std::runtime_error if some solve is infeasible.
 */
inline ContinuityStudy continuity_study(const Plant &plant, double lambda,
                                        const std::vector<double> &h_values,
                                        Method method = Method::Clot,
                                        const SolverConfig &cfg = {}) {
  plant.validate();
  if (h_values.size() < 3) {
    throw std::invalid_argument("continuity_study: need at least three h values");
  }
  ContinuityStudy out;
  out.method = method;
  out.h_values = h_values;
  for (std::size_t i = 0; i < h_values.size(); ++i) {
    const double h = h_values[i];
    if (!(h > 0.0)) throw std::invalid_argument("continuity_study: h must be positive");
    if (i && !(h < h_values[i - 1])) {
      throw std::invalid_argument("continuity_study: h values must decrease");
    }
    const double ratio = plant.T / h;
    const double N = std::round(ratio);
    if (N < 1 || std::abs(ratio - N) > 1e-9 * ratio) {
      throw std::invalid_argument("continuity_study: h = " + std::to_string(h) +
                                  " does not divide T");
    }
    out.N_values.push_back(static_cast<int>(N));
  }

  out.max_diffs.assign(h_values.size(), 0.0);
  std::vector<Status> status(h_values.size(), Status::MaxIters);
  parallel_for(h_values.size(), [&](std::size_t i) {
    const auto d = discretize(plant, out.N_values[i]);
    const Solution s = solve(make_problem(d, method, lambda), cfg);
    status[i] = s.status;
    out.max_diffs[i] = max_adjacent_difference(s.u);
  });
  for (std::size_t i = 0; i < status.size(); ++i) {
    if (status[i] == Status::Infeasible) {
      throw std::runtime_error("continuity_study: infeasible at N = " +
                               std::to_string(out.N_values[i]));
    }
  }
  out.fitted_exponent = loglog_slope(out.h_values, out.max_diffs);
  return out;
}

} // namespace handsoff

#endif // HANDSOFF_ANALYSIS_HPP
