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
#ifndef HANDSOFF_LTI_HPP
#define HANDSOFF_LTI_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace handsoff {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

/**
 * @brief Single-input continuous-time LTI plant dx/dt = A x + B u.
 *
 * The control is bounded by |u(t)| <= u_max and must steer the state from
 * xi to the origin within the horizon T.
 */
struct Plant {
  MatrixXd A;
  VectorXd B;
  VectorXd xi;
  double T = 1.0;
  double u_max = 1.0;

  Eigen::Index order() const { return A.rows(); }

  /// Throws std::invalid_argument when shapes or scalars are inconsistent.
  void validate() const {
    const auto n = A.rows();
    if (n == 0 || A.cols() != n) {
      throw std::invalid_argument("plant: A must be a non-empty square matrix");
    }
    if (B.size() != n) {
      throw std::invalid_argument("plant: B must have " + std::to_string(n) +
                                  " rows");
    }
    if (xi.size() != n) {
      throw std::invalid_argument("plant: x0 must have length " +
                                  std::to_string(n));
    }
    if (!(T > 0.0) || !std::isfinite(T)) {
      throw std::invalid_argument("plant: horizon T must be positive");
    }
    if (!(u_max > 0.0) || !std::isfinite(u_max)) {
      throw std::invalid_argument("plant: u_max must be positive");
    }
    if (!A.allFinite() || !B.allFinite() || !xi.allFinite()) {
      throw std::invalid_argument("plant: non-finite entries");
    }
  }
};

/// Controllability matrix [B, AB, ..., A^{n-1}B].
inline MatrixXd controllability_matrix(const MatrixXd &A, const VectorXd &B) {
  const auto n = A.rows();
  MatrixXd C(n, n);
  VectorXd col = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    C.col(k) = col;
    col = A * col;
  }
  return C;
}

/// Numerical rank of the controllability matrix. A rank below the plant
/// order means the terminal constraint may be unreachable; callers warn.
inline Eigen::Index controllability_rank(const Plant &plant) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(
      controllability_matrix(plant.A, plant.B));
  qr.setThreshold(1e-10);
  return qr.rank();
}

inline bool is_controllable(const Plant &plant) {
  return controllability_rank(plant) == plant.order();
}

/**
 * @brief Pole/zero/gain description of a strictly proper SISO plant,
 *        P(s) = gain * prod(s - z_i) / prod(s - p_i).
 */
struct TransferFunctionSpec {
  std::vector<std::complex<double>> zeros;
  std::vector<std::complex<double>> poles;
  double gain = 1.0;
};

/// State-space realization (A, B, C, D) of a transfer function.
struct Realization {
  MatrixXd A;
  VectorXd B;
  RowVectorXd C;
  double D = 0.0;
};

namespace detail {

inline bool has_conjugate_pairs(const std::vector<std::complex<double>> &roots) {
  constexpr double tol = 1e-9;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    const auto &r = roots[i];
    const double scale = 1.0 + std::abs(r);
    if (std::abs(r.imag()) <= tol * scale) {
      used[i] = true;
      continue;
    }
    bool found = false;
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (!used[j] && std::abs(roots[j] - std::conj(r)) <= tol * scale) {
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

} // namespace detail

/**
 * @brief Monic polynomial with the given roots, highest power first.
 *
 * Same convention as Matlab's `poly`: the result for roots {r1, r2} is
 * {1, -(r1 + r2), r1 r2}. Imaginary parts are dropped after expansion, so the
 * roots must come in conjugate pairs.
 */
inline std::vector<double>
poly_from_roots(const std::vector<std::complex<double>> &roots) {
  if (!detail::has_conjugate_pairs(roots)) {
    throw std::invalid_argument(
        "complex roots must appear in conjugate pairs");
  }
  std::vector<std::complex<double>> c{1.0};
  for (const auto &r : roots) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k] += c[k];
      next[k + 1] -= r * c[k];
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  std::transform(c.begin(), c.end(), out.begin(),
                 [](const std::complex<double> &z) { return z.real(); });
  return out;
}

/**
 * @brief Controller-companion realization of a strictly proper transfer
 *        function.
 *
 * With monic denominator d(s) = s^n + a_1 s^{n-1} + ... + a_n the realization
 * is
 *
 *     A = [-a_1 -a_2 ... -a_n]      B = e_1
 *         [  1    0  ...   0 ]
 *         [       ...        ]
 *         [  0  ...   1    0 ]
 *
 * and C holds the numerator coefficients right-aligned. This is the layout
 * Matlab's tf->ss conversion starts from; see balance() for the diagonal
 * rescaling that `ssdata` applies on top of it. The initial state of an
 * experiment is expressed in these coordinates, so the convention changes
 * which physical problem is solved.
 */
inline Realization realize(const TransferFunctionSpec &spec) {
  if (spec.poles.empty()) {
    throw std::invalid_argument("transfer function needs at least one pole");
  }
  if (spec.zeros.size() >= spec.poles.size()) {
    throw std::invalid_argument(
        "transfer function must be strictly proper (fewer zeros than poles)");
  }
  const auto den = poly_from_roots(spec.poles);
  const auto num = poly_from_roots(spec.zeros);
  const auto n = static_cast<Eigen::Index>(spec.poles.size());

  Realization r;
  r.A = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r.A(0, j) = -den[static_cast<std::size_t>(j + 1)];
  }
  for (Eigen::Index i = 1; i < n; ++i) {
    r.A(i, i - 1) = 1.0;
  }
  r.B = VectorXd::Zero(n);
  r.B(0) = 1.0;
  r.C = RowVectorXd::Zero(n);
  const auto m = static_cast<Eigen::Index>(num.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    r.C(n - m + k) = spec.gain * num[static_cast<std::size_t>(k)];
  }
  r.D = 0.0;
  return r;
}

/**
 * @brief Power-of-two diagonal scaling that balances [A B; C 0].
 *
 * Mirrors the `ssbal` step of Matlab's tf->ss conversion: the (n+1)x(n+1)
 * system matrix is balanced with the LAPACK xGEBAL scaling iteration (no
 * permutations), and the state coordinates are rescaled by
 * s_i / s_{n+1}. Returns the scaling vector t with A' = T^{-1} A T,
 * B' = T^{-1} B, C' = C T, T = diag(t).
 */
inline VectorXd balancing_scales(const Realization &r) {
  const auto n = r.A.rows();
  const auto m = n + 1;
  MatrixXd M = MatrixXd::Zero(m, m);
  M.topLeftCorner(n, n) = r.A;
  M.topRightCorner(n, 1) = r.B;
  M.bottomLeftCorner(1, n) = r.C;

  constexpr double radix = 2.0;
  constexpr double factor = 0.95;
  const double sfmin1 = std::numeric_limits<double>::min() /
                        std::numeric_limits<double>::epsilon() * radix;
  const double sfmax1 = 1.0 / sfmin1;
  const double sfmin2 = sfmin1 * radix;
  const double sfmax2 = 1.0 / sfmin2;

  VectorXd scale = VectorXd::Ones(m);
  bool noconv = true;
  while (noconv) {
    noconv = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      double c = M.col(i).norm();
      double rr = M.row(i).norm();
      double ca = M.col(i).cwiseAbs().maxCoeff();
      double ra = M.row(i).cwiseAbs().maxCoeff();
      if (c == 0.0 || rr == 0.0) continue;

      double g = rr / radix;
      double f = 1.0;
      const double s = c + rr;
      while (!(c >= g || std::max({f, c, ca}) >= sfmax2 ||
               std::min({rr, g, ra}) <= sfmin2)) {
        f *= radix;
        c *= radix;
        ca *= radix;
        rr /= radix;
        g /= radix;
        ra /= radix;
      }
      g = c / radix;
      while (!(g < rr || std::max(rr, ra) >= sfmax2 ||
               std::min({f, c, g, ca}) <= sfmin2)) {
        f /= radix;
        c /= radix;
        g /= radix;
        ca /= radix;
        rr *= radix;
        ra *= radix;
      }
      if (c + rr >= factor * s) continue;
      if (f < 1.0 && scale(i) < 1.0 && f * scale(i) <= sfmin1) continue;
      if (f > 1.0 && scale(i) > 1.0 && scale(i) >= sfmax1 / f) continue;
      scale(i) *= f;
      noconv = true;
      M.row(i) /= f;
      M.col(i) *= f;
    }
  }
  return scale.head(n) / scale(n);
}

inline Realization balance(const Realization &r) {
  const VectorXd t = balancing_scales(r);
  Realization out;
  out.A = t.cwiseInverse().asDiagonal() * r.A * t.asDiagonal();
  out.B = r.B.cwiseQuotient(t);
  out.C = r.C.cwiseProduct(t.transpose());
  out.D = r.D;
  return out;
}

/// How a pole/zero description is turned into (A, B).
enum class RealizationConvention {
  Companion, ///< controller companion form, B = e_1
  Balanced,  ///< companion form followed by balance() (Matlab ssdata)
};

inline Realization realize(const TransferFunctionSpec &spec,
                           RealizationConvention convention) {
  auto r = realize(spec);
  if (convention == RealizationConvention::Balanced) {
    r = balance(r);
  }
  return r;
}

/**
 * @brief Zero-order-hold discretization of a plant with sampling time h
 *        and its stacked reachability operators.
 *
 * Only Phi is stored densely. The intermediate-state operator Psi has
 * (N-1)n x (N-1) entries, which is too large to hold for N in the thousands;
 * apply it with simulate-style recursions or materialize it with
 * build_psi() for small N.
 */
struct DiscreteProblem {
  Plant plant;
  MatrixXd Ad;
  VectorXd Bd;
  int N = 0;
  double h = 0.0;
  MatrixXd Phi;        ///< n x N, column k = Ad^{N-1-k} Bd
  VectorXd b_terminal; ///< -Ad^N xi
  MatrixXd c_state;    ///< n x (N-1), column i-1 = Ad^i xi

  Eigen::Index order() const { return Ad.rows(); }
  /// Ad^N xi, the free response at the horizon.
  VectorXd free_terminal() const { return -b_terminal; }
};

/// Ad = e^{Ah}, Bd = int_0^h e^{At} B dt from the exponential of the
/// augmented matrix [[A, B], [0, 0]] h.
inline std::pair<MatrixXd, VectorXd> zoh(const MatrixXd &A, const VectorXd &B,
                                         double h) {
  const auto n = A.rows();
  MatrixXd M = MatrixXd::Zero(n + 1, n + 1);
  M.topLeftCorner(n, n) = A * h;
  M.topRightCorner(n, 1) = B * h;
  const MatrixXd E = M.exp();
  if (!E.allFinite()) {
    throw std::runtime_error("matrix exponential produced non-finite entries");
  }
  return {E.topLeftCorner(n, n), E.topRightCorner(n, 1)};
}

/// [Ad^{N-1} Bd, ..., Ad Bd, Bd] by running product.
inline MatrixXd build_phi(const MatrixXd &Ad, const VectorXd &Bd, int N) {
  if (N < 1) throw std::invalid_argument("build_phi: N must be positive");
  if (Ad.rows() != Ad.cols() || Bd.size() != Ad.rows()) {
    throw std::invalid_argument("build_phi: shape mismatch");
  }
  MatrixXd Phi(Ad.rows(), N);
  VectorXd col = Bd;
  for (int k = N - 1; k >= 0; --k) {
    Phi.col(k) = col;
    if (k > 0) col = Ad * col;
  }
  return Phi;
}

/// Dense (N-1)n x (N-1) block lower-triangular map from (u_0..u_{N-2}) to
/// (x_1..x_{N-1}) with zero initial state. Block (i, k) = Ad^{i-k} Bd for
/// k <= i (zero-based blocks).
inline MatrixXd build_psi(const MatrixXd &Ad, const VectorXd &Bd, int N) {
  if (N < 2) throw std::invalid_argument("build_psi: N must be at least 2");
  if (Ad.rows() != Ad.cols() || Bd.size() != Ad.rows()) {
    throw std::invalid_argument("build_psi: shape mismatch");
  }
  const auto n = Ad.rows();
  const int m = N - 1;
  std::vector<VectorXd> powers;
  powers.reserve(static_cast<std::size_t>(m));
  powers.push_back(Bd);
  for (int i = 1; i < m; ++i) powers.push_back(Ad * powers.back());

  MatrixXd Psi = MatrixXd::Zero(m * n, m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k <= i; ++k) {
      Psi.block(i * n, k, n, 1) = powers[static_cast<std::size_t>(i - k)];
    }
  }
  return Psi;
}

/// Intermediate states x_1..x_{N-1} (columns of the n x (N-1) result) driven
/// by u from a zero initial state; the matrix-free form of Psi * u.
inline MatrixXd apply_psi(const MatrixXd &Ad, const VectorXd &Bd,
                          const Eigen::Ref<const VectorXd> &u) {
  const auto N = u.size();
  MatrixXd X(Ad.rows(), std::max<Eigen::Index>(N - 1, 0));
  VectorXd x = VectorXd::Zero(Ad.rows());
  for (Eigen::Index k = 0; k + 1 < N; ++k) {
    x = Ad * x + Bd * u(k);
    X.col(k) = x;
  }
  return X;
}

/// Psi^T applied to stacked state weights Y (n x (N-1)); the result has
/// length N and a zero last entry since u_{N-1} does not reach x_{N-1}.
inline VectorXd apply_psi_transpose(const MatrixXd &Ad, const VectorXd &Bd,
                                    const Eigen::Ref<const MatrixXd> &Y) {
  const auto N = Y.cols() + 1;
  VectorXd g = VectorXd::Zero(N);
  VectorXd p = VectorXd::Zero(Ad.rows());
  for (Eigen::Index k = N - 1; k >= 1; --k) {
    p = Y.col(k - 1) + Ad.transpose() * p;
    g(k - 1) = Bd.dot(p);
  }
  return g;
}

inline DiscreteProblem discretize(const Plant &plant, int N) {
  plant.validate();
  const auto n = plant.order();
  if (N < n) {
    throw std::invalid_argument("discretize: N must be at least the plant order");
  }
  DiscreteProblem d;
  d.plant = plant;
  d.N = N;
  d.h = plant.T / N;
  auto [Ad, Bd] = zoh(plant.A, plant.B, d.h);
  d.Ad = std::move(Ad);
  d.Bd = std::move(Bd);
  d.Phi = build_phi(d.Ad, d.Bd, N);

  d.c_state.resize(n, std::max(N - 1, 0));
  VectorXd x = plant.xi;
  for (int i = 1; i < N; ++i) {
    x = d.Ad * x;
    d.c_state.col(i - 1) = x;
  }
  d.b_terminal = -(d.Ad * x);
  return d;
}

} // namespace handsoff

#endif // HANDSOFF_LTI_HPP
