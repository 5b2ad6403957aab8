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
#ifndef HANDSOFF_PROX_HPP
#define HANDSOFF_PROX_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace handsoff {

using Eigen::VectorXd;

// =============================================================================
// Regularizers
// =============================================================================

enum class Method { Lasso, ElasticNet, Clot };

inline constexpr std::string_view to_string(Method m) {
  switch (m) {
  case Method::Lasso:
    return "lasso";
  case Method::ElasticNet:
    return "en";
  case Method::Clot:
    return "clot";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "lasso") return Method::Lasso;
  if (s == "en" || s == "elastic-net") return Method::ElasticNet;
  if (s == "clot") return Method::Clot;
  throw std::invalid_argument("unknown method: " + std::string(s));
}

/**
 * @brief Discretized control cost for one of the three formulations.
 *
 *   LASSO: h ||u||_1
 *   EN:    h ||u||_1 + h lambda ||u||_2^2
 *   CLOT:  h ||u||_1 + sqrt(h) lambda ||u||_2
 *
 * `scale` multiplies both weights; it is 1 for the programs as stated.
 */
struct Regularizer {
  Method kind = Method::Clot;
  double lambda = 0.0;
  double h = 1.0;
  double scale = 1.0;

  double l1_weight() const { return scale * h; }

  /// Weight of the second term; zero for LASSO.
  double l2_weight() const {
    switch (kind) {
    case Method::Lasso:
      return 0.0;
    case Method::ElasticNet:
      return scale * h * lambda;
    case Method::Clot:
      return scale * std::sqrt(h) * lambda;
    }
    return 0.0;
  }

  double operator()(const Eigen::Ref<const VectorXd> &u) const {
    double value = l1_weight() * u.lpNorm<1>();
    if (kind == Method::ElasticNet) value += l2_weight() * u.squaredNorm();
    if (kind == Method::Clot) value += l2_weight() * u.norm();
    return value;
  }

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("regularizer: lambda must be nonnegative");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw std::invalid_argument("regularizer: h must be positive");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw std::invalid_argument("regularizer: scale must be positive");
    }
  }
};

// =============================================================================
// Proximal operators
// =============================================================================

inline void prox_l1(const Eigen::Ref<const VectorXd> &v, double t,
                    Eigen::Ref<VectorXd> out) {
  out = v.array().sign() * (v.array().abs() - t).max(0.0);
}

/// Componentwise soft threshold sign(v) max(|v| - t, 0).
inline VectorXd prox_l1(const Eigen::Ref<const VectorXd> &v, double t) {
  VectorXd out(v.size());
  prox_l1(v, t, out);
  return out;
}

/// Exact prox of mu1 ||.||_1 + mu2 ||.||_2: soft threshold, then block
/// shrink.
inline VectorXd prox_clot(const Eigen::Ref<const VectorXd> &v, double mu1,
                          double mu2) {
  VectorXd w = prox_l1(v, mu1);
  const double nw = w.norm();
  if (nw <= mu2) return VectorXd::Zero(v.size());
  return (1.0 - mu2 / nw) * w;
}

/// Exact prox of mu1 ||.||_1 + mu2 ||.||_2^2.
inline VectorXd prox_en(const Eigen::Ref<const VectorXd> &v, double mu1,
                        double mu2) {
  return prox_l1(v, mu1) / (1.0 + 2.0 * mu2);
}

inline VectorXd project_box(const Eigen::Ref<const VectorXd> &v,
                            double bound) {
  return v.cwiseMax(-bound).cwiseMin(bound);
}

inline VectorXd project_ball(const Eigen::Ref<const VectorXd> &p,
                             const Eigen::Ref<const VectorXd> &center,
                             double radius) {
  const VectorXd d = p - center;
  const double nd = d.norm();
  if (nd <= radius) return p;
  return center + (radius / nd) * d;
}

/// Projection onto the singleton {target}.
inline VectorXd project_point(const Eigen::Ref<const VectorXd> & /*p*/,
                              const Eigen::Ref<const VectorXd> &target) {
  return target;
}

namespace detail {

/**
 * Prox of mu ||.||_2 + indicator(||.||_inf <= bound) at w. The minimizer is
 * clamp(c w) for the unique c in (0, 1) with (1 - c) ||clamp(c w)|| / c = mu,
 * found by bisection over the sorted magnitudes.
 */
inline void shrink_clamped(Eigen::Ref<VectorXd> w, double mu, double bound) {
  const double nw = w.norm();
  if (nw <= mu) {
    w.setZero();
    return;
  }
  // Unclamped block shrink first; it is the answer when nothing saturates.
  const double c0 = 1.0 - mu / nw;
  const double wmax = w.cwiseAbs().maxCoeff();
  if (c0 * wmax <= bound) {
    w *= c0;
    return;
  }

  std::vector<double> mag(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    mag[static_cast<std::size_t>(i)] = std::abs(w(i));
  }
  std::sort(mag.begin(), mag.end(), std::greater<>());
  // suffix[k] = sum of squares of mag[k..]
  std::vector<double> suffix(mag.size() + 1, 0.0);
  for (std::size_t k = mag.size(); k-- > 0;) {
    suffix[k] = suffix[k + 1] + mag[k] * mag[k];
  }
  // ||clamp(c w)|| / c as a function of c.
  auto scaled_norm = [&](double c) {
    const double cut = bound / c;
    const auto it = std::lower_bound(mag.begin(), mag.end(), cut,
                                     std::greater_equal<>());
    const auto m = static_cast<double>(it - mag.begin());
    const auto k = static_cast<std::size_t>(it - mag.begin());
    return std::sqrt(suffix[k] + m * cut * cut);
  };
  double lo = 0.0;
  double hi = c0;
  // Residual (1 - c) g(c) - mu is decreasing in c; positive at lo.
  for (int iter = 0; iter < 200 && hi - lo > 1e-16 * hi; ++iter) {
    const double c = 0.5 * (lo + hi);
    if ((1.0 - c) * scaled_norm(c) > mu) {
      lo = c;
    } else {
      hi = c;
    }
  }
  const double c = 0.5 * (lo + hi);
  w = (c * w).cwiseMax(-bound).cwiseMin(bound);
}

} // namespace detail

/**
 * @brief Prox of t (reg + indicator of the box [-bound, bound]^N) at v.
 *
 * The box composes with each regularizer prox: soft threshold, then the
 * remaining smooth or block part restricted to the box.
 */
inline void prox_regularized_box(const Eigen::Ref<const VectorXd> &v,
                                 const Regularizer &reg, double t,
                                 double bound, Eigen::Ref<VectorXd> out) {
  prox_l1(v, t * reg.l1_weight(), out);
  switch (reg.kind) {
  case Method::Lasso:
    break;
  case Method::ElasticNet:
    out /= 1.0 + 2.0 * t * reg.l2_weight();
    break;
  case Method::Clot:
    detail::shrink_clamped(out, t * reg.l2_weight(), bound);
    return;
  }
  out = out.cwiseMax(-bound).cwiseMin(bound);
}

inline VectorXd prox_regularized_box(const Eigen::Ref<const VectorXd> &v,
                                     const Regularizer &reg, double t,
                                     double bound) {
  VectorXd out(v.size());
  prox_regularized_box(v, reg, t, bound, out);
  return out;
}

} // namespace handsoff

#endif // HANDSOFF_PROX_HPP
