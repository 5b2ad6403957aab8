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
#ifndef HANDSOFF_SOLVER_HPP
#define HANDSOFF_SOLVER_HPP

#include "handsoff/lti.hpp"
#include "handsoff/prox.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace handsoff {

/**
 * @brief One discretized hands-off program: minimize reg(u) subject to the
 *        terminal equality, the box |u_k| <= u_max and, when theta is set,
 *        ||x_k|| <= theta for k = 1..N-1.
 */
struct ProblemSpec {
  DiscreteProblem discrete;
  Regularizer reg;
  std::optional<double> theta;

  void validate() const {
    reg.validate();
    if (discrete.N < 1 || discrete.Phi.cols() != discrete.N) {
      throw std::invalid_argument("problem: discrete problem is not assembled");
    }
    if (theta && (!(*theta > 0.0) || !std::isfinite(*theta))) {
      throw std::invalid_argument("problem: theta must be positive");
    }
  }
};

inline ProblemSpec make_problem(DiscreteProblem discrete, Method method,
                                double lambda,
                                std::optional<double> theta = std::nullopt) {
  ProblemSpec spec;
  spec.reg = Regularizer{method, lambda, discrete.h};
  spec.discrete = std::move(discrete);
  spec.theta = theta;
  return spec;
}

struct SolverConfig {
  int max_iters = 200000;
  double eps_abs = 1e-7;
  double eps_rel = 1e-6;
  int check_every = 50;
  int infeasibility_window = 2000;
  double over_relaxation = 1.8;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iters <= 0 || check_every <= 0 || infeasibility_window <= 0) {
      throw std::invalid_argument("solver config: counts must be positive");
    }
    if (!(eps_abs > 0.0 && eps_abs < 1.0 && eps_rel > 0.0 && eps_rel < 1.0)) {
      throw std::invalid_argument("solver config: tolerances must be in (0, 1)");
    }
    if (!(over_relaxation >= 1.0 && over_relaxation < 2.0)) {
      throw std::invalid_argument(
          "solver config: over_relaxation must be in [1, 2)");
    }
  }
};

enum class Status { Optimal, MaxIters, Infeasible };

inline constexpr std::string_view to_string(Status s) {
  switch (s) {
  case Status::Optimal:
    return "optimal";
  case Status::MaxIters:
    return "max_iters";
  case Status::Infeasible:
    return "infeasible";
  }
  return "?";
}

/**
 * @brief Lagrange multipliers of a solve.
 *
 * With them the stationarity condition reads
 *   0 in d reg(u) + box + Phi^T terminal + sum_i Psi_i^T state_i
 * where `box` lies in the normal cone of the box at u and every state_i lies
 * in the normal cone of the theta-ball at x_i.
 */
struct Duals {
  VectorXd terminal;  ///< multiplier of the terminal equality (n)
  MatrixXd state;     ///< (N-1) x n, row i-1 pairs with x_i; empty without theta
  VectorXd box;       ///< normal-cone element of the box constraint (N)
  VectorXd consensus; ///< subgradient of reg + box at u (N)
};

struct Solution {
  VectorXd u;
  MatrixXd states; ///< (N-1) x n, row k-1 is x_k
  Duals duals;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  Status status = Status::MaxIters;
  double rho = 0.0; ///< final ADMM penalty, reused by warm starts
};

/// Forward recursion x_{k+1} = Ad x_k + Bd u_k from xi; returns the n x (N+1)
/// trajectory x_0..x_N.
inline MatrixXd simulate(const DiscreteProblem &d,
                         const Eigen::Ref<const VectorXd> &u) {
  if (u.size() != d.N) {
    throw std::invalid_argument("simulate: control length must equal N");
  }
  MatrixXd X(d.order(), d.N + 1);
  X.col(0) = d.plant.xi;
  for (int k = 0; k < d.N; ++k) {
    X.col(k + 1) = d.Ad * X.col(k) + d.Bd * u(k);
  }
  return X;
}

/// ||x_k||_2 for k = 1..N-1 of a solution.
inline VectorXd state_norms(const Solution &sol) {
  return sol.states.rowwise().norm();
}

/// Feasibility tolerance used to qualify an optimal solution.
inline double feasibility_tolerance(const DiscreteProblem &d) {
  return 1e-5 * (1.0 + d.b_terminal.norm());
}

/// Largest singular value of the intermediate-state operator Psi, by power
/// iteration from a seeded random start.
inline double estimate_psi_norm(const DiscreteProblem &d, std::uint64_t seed,
                                int iterations = 100) {
  if (d.N < 2) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd v(d.N);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  v(d.N - 1) = 0.0;
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nv = v.norm();
    if (nv == 0.0) return 0.0;
    v /= nv;
    const VectorXd w = apply_psi_transpose(d.Ad, d.Bd, apply_psi(d.Ad, d.Bd, v));
    sigma = std::sqrt(v.dot(w));
    v = w;
  }
  return sigma;
}

namespace detail {

/**
 * Equality-constrained LQ tracking problem
 *
 *   min  sum_k 1/2 (u_k - a_k)^2 + omega/2 sum_{i=1}^{N-1} ||x_i - d_i||^2
 *   s.t. x_{k+1} = Ad x_k + Bd u_k,  x_0 = xi,  x_N = 0.
 *
 * The Riccati gains depend only on (Ad, Bd, N, omega) and are computed once;
 * each solve is one backward and one forward sweep. The terminal multiplier
 * enters affinely, so the responses to unit multipliers are precomputed and
 * combined to meet x_N = 0, followed by one refinement step.
 */
class TerminalLqr {
public:
  TerminalLqr(const MatrixXd &Ad, const VectorXd &Bd, int N, double omega)
      : A_(Ad), B_(Bd), N_(N), omega_(omega), n_(Ad.rows()) {
    K_.resize(n_, N_);
    PB_.resize(n_, N_);
    g_.resize(N_);
    MatrixXd P = MatrixXd::Zero(n_, n_);
    for (int k = N_ - 1; k >= 0; --k) {
      const VectorXd PB = P * B_;
      const double g = 1.0 / (1.0 + B_.dot(PB));
      const VectorXd ApB = A_.transpose() * PB;
      K_.col(k) = g * ApB;
      PB_.col(k) = PB;
      g_(k) = g;
      MatrixXd Pk = A_.transpose() * P * A_ - g * ApB * ApB.transpose();
      Pk = 0.5 * (Pk + Pk.transpose());
      if (k >= 1) Pk.diagonal().array() += omega_;
      P = std::move(Pk);
    }

    const bool with_states = omega_ > 0.0;
    G_.resize(N_, n_);
    H_.resize(n_, n_);
    if (with_states) XG_.assign(static_cast<std::size_t>(n_), MatrixXd());
    const VectorXd zeros_u = VectorXd::Zero(N_);
    const VectorXd zero_x = VectorXd::Zero(n_);
    VectorXd u(N_), xN(n_);
    MatrixXd X;
    for (Eigen::Index j = 0; j < n_; ++j) {
      const VectorXd e = VectorXd::Unit(n_, j);
      sweep(zeros_u, nullptr, zero_x, e, u, with_states ? &X : nullptr, xN);
      G_.col(j) = u;
      H_.col(j) = xN;
      if (with_states) XG_[static_cast<std::size_t>(j)] = X;
    }
    H_qr_.compute(H_);
  }

  /// Writes the minimizer u, its states x_1..x_{N-1} (when omega > 0) and the
  /// terminal multiplier nu.
  void solve(const VectorXd &a, const MatrixXd *d, const VectorXd &xi,
             VectorXd &u, MatrixXd *X, VectorXd &nu) const {
    VectorXd xN(n_);
    sweep(a, d, xi, VectorXd::Zero(n_), u, X, xN);
    nu = -H_qr_.solve(xN);
    add_response(nu, u, X);
    // One refinement against the simulated terminal state.
    VectorXd x = xi;
    for (int k = 0; k < N_; ++k) x = A_ * x + B_ * u(k);
    const VectorXd dnu = -H_qr_.solve(x);
    add_response(dnu, u, X);
    nu += dnu;
  }

private:
  void add_response(const VectorXd &nu, VectorXd &u, MatrixXd *X) const {
    u.noalias() += G_ * nu;
    if (X != nullptr) {
      for (Eigen::Index j = 0; j < n_; ++j) {
        *X += nu(j) * XG_[static_cast<std::size_t>(j)];
      }
    }
  }

  void sweep(const VectorXd &a, const MatrixXd *d, const VectorXd &xi,
             const VectorXd &pN, VectorXd &u, MatrixXd *X,
             VectorXd &xN) const {
    VectorXd kff(N_);
    VectorXd p = pN;
    VectorXd q(n_);
    for (int k = N_ - 1; k >= 0; --k) {
      const double ff = g_(k) * (a(k) - B_.dot(p));
      kff(k) = ff;
      // Linear term of the cost-to-go at x_k:
      //   -K^T (ff - a) + Acl^T (P B ff + p),  Acl = A - B K.
      q = PB_.col(k) * ff + p;
      const double bq = B_.dot(q);
      p.noalias() = A_.transpose() * q;
      p -= K_.col(k) * (bq + ff - a(k));
      if (k >= 1 && d != nullptr) p -= omega_ * d->col(k - 1);
    }
    if (X != nullptr) X->resize(n_, std::max(N_ - 1, 0));
    VectorXd x = xi;
    for (int k = 0; k < N_; ++k) {
      u(k) = kff(k) - K_.col(k).dot(x);
      x = A_ * x + B_ * u(k);
      if (X != nullptr && k + 1 < N_) X->col(k) = x;
    }
    xN = x;
  }

  MatrixXd A_;
  VectorXd B_;
  int N_;
  double omega_;
  Eigen::Index n_;
  MatrixXd K_;  // n x N, feedback u_k = -K_k^T x_k + kff_k
  MatrixXd PB_; // n x N, P_{k+1} B
  VectorXd g_;  // 1 / (1 + B^T P_{k+1} B)
  MatrixXd G_;  // N x n, control response to unit terminal multipliers
  MatrixXd H_;  // n x n, terminal-state response
  std::vector<MatrixXd> XG_;
  Eigen::ColPivHouseholderQR<MatrixXd> H_qr_;
};

inline void project_state_balls(Eigen::Ref<MatrixXd> Y, double theta) {
  for (Eigen::Index i = 0; i < Y.cols(); ++i) {
    const double nrm = Y.col(i).norm();
    if (nrm > theta) Y.col(i) *= theta / nrm;
  }
}

/// Normal-cone component of lambda at saturated coordinates of u.
inline VectorXd box_multiplier(const VectorXd &u, const VectorXd &lambda,
                               const Regularizer &reg, double bound) {
  VectorXd m = VectorXd::Zero(u.size());
  const double nu = u.norm();
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    if (std::abs(u(k)) < bound) continue;
    const double s = u(k) > 0.0 ? 1.0 : -1.0;
    double g = s * reg.l1_weight();
    if (reg.kind == Method::ElasticNet) g += 2.0 * reg.l2_weight() * u(k);
    if (reg.kind == Method::Clot && nu > 0.0) g += reg.l2_weight() * u(k) / nu;
    const double r = lambda(k) - g;
    if (r * s > 0.0) m(k) = r;
  }
  return m;
}

inline double inf_norm(const Eigen::Ref<const MatrixXd> &M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

/**
 * min over |u_k| <= U of reg(u) + s^T u, in closed form per regularizer.
 * With v = (|s| - l1w)_+ the minimizer is u_k = -sign(s_k) a_k, a >= 0.
 */
inline double box_conjugate_min(const Regularizer &reg, double U,
                                const VectorXd &s) {
  const VectorXd v = (s.array().abs() - reg.l1_weight()).max(0.0).matrix();
  const double c = reg.l2_weight();
  switch (reg.kind) {
  case Method::Lasso:
    return -U * v.sum();
  case Method::ElasticNet: {
    double value = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (v(k) == 0.0) continue;
      const double a = c > 0.0 ? std::min(U, v(k) / (2.0 * c)) : U;
      value += c * a * a - v(k) * a;
    }
    return value;
  }
  case Method::Clot: {
    // max v^T a - c ||a|| over the box: a = clamp(tau v, U) with
    // ||clamp(tau v, U)|| = c tau, or a = 0 when ||v|| <= c.
    const double nv = v.norm();
    if (nv <= c) return 0.0;
    std::vector<double> mag;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (v(k) > 0.0) mag.push_back(v(k));
    }
    std::sort(mag.begin(), mag.end(), std::greater<>());
    std::vector<double> suffix(mag.size() + 1, 0.0);
    for (std::size_t k = mag.size(); k-- > 0;) {
      suffix[k] = suffix[k + 1] + mag[k] * mag[k];
    }
    auto clamped = [&](double tau, double &dot, double &norm) {
      const double cut = U / tau;
      const auto it = std::lower_bound(mag.begin(), mag.end(), cut,
                                       std::greater_equal<>());
      const auto k = static_cast<std::size_t>(it - mag.begin());
      double head = 0.0;
      for (std::size_t j = 0; j < k; ++j) head += mag[j];
      dot = U * head + tau * suffix[k];
      norm = std::sqrt(static_cast<double>(k) * U * U + tau * tau * suffix[k]);
    };
    if (c == 0.0) return -U * v.sum();
    // ||clamp(tau v)|| / tau decreases in tau; past hi every coordinate is
    // saturated and the maximizer is the full box corner.
    double lo = 0.0;
    double hi = U / mag.back();
    double dot, norm;
    clamped(hi, dot, norm);
    if (norm >= c * hi) return -(dot - c * norm);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double tau = 0.5 * (lo + hi);
      clamped(tau, dot, norm);
      if (norm > c * tau) lo = tau;
      else hi = tau;
    }
    clamped(0.5 * (lo + hi), dot, norm);
    return -(dot - c * norm);
  }
  }
  return 0.0;
}

/**
 * r = -(Phi^T beta + Psi^T mu) minus the smooth part of the regularizer
 * gradient at u; stationarity asks r_k in l1w * d|u_k| plus the box normal
 * cone. mu is reduced to its radial part at each state, as in the
 * certificate.
 */
inline VectorXd stationarity_residuals(const DiscreteProblem &d, const Regularizer &reg,
                                       const VectorXd &u, const VectorXd &beta,
                                       const MatrixXd &mu, const MatrixXd &X) {
  VectorXd g = -(d.Phi.transpose() * beta);
  if (mu.size() > 0) {
    MatrixXd radial = MatrixXd::Zero(mu.rows(), mu.cols());
    for (Eigen::Index i = 0; i < mu.cols(); ++i) {
      const double nx = X.col(i + 1).norm();
      if (nx == 0.0) continue;
      const VectorXd xh = X.col(i + 1) / nx;
      radial.col(i) = std::max(0.0, mu.col(i).dot(xh)) * xh;
    }
    g -= apply_psi_transpose(d.Ad, d.Bd, radial);
  }
  if (reg.kind == Method::ElasticNet) g -= 2.0 * reg.l2_weight() * u;
  const double nu = u.norm();
  if (reg.kind == Method::Clot && nu > 0.0) g -= reg.l2_weight() / nu * u;
  return g;
}

/// Per-coordinate stationarity violation, in units of the l1 weight.
inline VectorXd stationarity_gaps(const Regularizer &reg, double U, const VectorXd &u,
                                  const VectorXd &res) {
  const double l1w = reg.l1_weight();
  VectorXd out(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double r = res(k);
    double v;
    if (u(k) == 0.0) {
      v = std::max(0.0, std::abs(r) - l1w);
    } else {
      const double s = u(k) > 0.0 ? 1.0 : -1.0;
      v = std::abs(u(k)) >= U ? std::max(0.0, l1w - s * r) : std::abs(r - s * l1w);
    }
    out(k) = v / l1w;
  }
  return out;
}

/**
 * Lagrange dual at (beta, mu):
 *   -beta^T t + sum_i (mu_i^T c_i - theta ||mu_i||) + min_box reg(u) + s^T u
 * with s = Phi^T beta + Psi^T mu. Pass an empty mu without state constraints.
 */
inline double dual_value(const DiscreteProblem &d, const Regularizer &reg,
                         double U, double theta, const VectorXd &beta,
                         const MatrixXd &mu) {
  VectorXd s = d.Phi.transpose() * beta;
  double value = -beta.dot(d.b_terminal);
  if (mu.size() > 0) {
    s += apply_psi_transpose(d.Ad, d.Bd, mu);
    value += mu.cwiseProduct(d.c_state).sum() - theta * mu.colwise().norm().sum();
  }
  return value + box_conjugate_min(reg, U, s);
}

/**
 * min 1/2 ||x||^2 s.t. E x = e, G x <= g, by a primal-dual active-set loop.
 * Meant for a handful of variables; returns false when the working set does
 * not settle or the equalities are inconsistent.
 */
inline bool min_norm_qp(const MatrixXd &E, const VectorXd &e, const MatrixXd &G,
                        const VectorXd &g, VectorXd &x) {
  const auto p = E.cols();
  const auto m = G.rows();
  std::vector<char> active(static_cast<std::size_t>(m), 0);
  const double scale = 1.0 + e.cwiseAbs().maxCoeff() +
                       (m > 0 ? g.cwiseAbs().maxCoeff() : 0.0);
  for (int iter = 0; iter < 4 * static_cast<int>(m) + 20; ++iter) {
    std::vector<Eigen::Index> W;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (active[static_cast<std::size_t>(j)]) W.push_back(j);
    }
    const auto rows = E.rows() + static_cast<Eigen::Index>(W.size());
    MatrixXd M(rows, p);
    VectorXd r(rows);
    M.topRows(E.rows()) = E;
    r.head(E.rows()) = e;
    for (std::size_t j = 0; j < W.size(); ++j) {
      M.row(E.rows() + static_cast<Eigen::Index>(j)) = G.row(W[j]);
      r(E.rows() + static_cast<Eigen::Index>(j)) = g(W[j]);
    }
    x = M.completeOrthogonalDecomposition().solve(r);
    if ((M * x - r).norm() > 1e-9 * scale) return false;

    // x = -M^T y; inequality multipliers must be nonnegative.
    const VectorXd y =
        MatrixXd(M.transpose()).completeOrthogonalDecomposition().solve(
            VectorXd(-x));
    Eigen::Index drop = -1;
    double most_negative = -1e-12 * (1.0 + x.norm());
    for (std::size_t j = 0; j < W.size(); ++j) {
      const double eta = y(E.rows() + static_cast<Eigen::Index>(j));
      if (eta < most_negative) {
        most_negative = eta;
        drop = W[j];
      }
    }
    if (drop >= 0) {
      active[static_cast<std::size_t>(drop)] = 0;
      continue;
    }
    Eigen::Index add = -1;
    double worst = 1e-12 * scale;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (active[static_cast<std::size_t>(j)]) continue;
      const double viol = G.row(j).dot(x) - g(j);
      if (viol > worst) {
        worst = viol;
        add = j;
      }
    }
    if (add < 0) return true;
    active[static_cast<std::size_t>(add)] = 1;
  }
  return false;
}

/**
 * min ||M x - b|| subject to x_j >= 0 for j >= nfree (Lawson-Hanson with the
 * first nfree variables always passive).
 */
inline VectorXd nnls_partial(const MatrixXd &M, const VectorXd &b,
                             Eigen::Index nfree) {
  const auto cols = M.cols();
  std::vector<char> passive(static_cast<std::size_t>(cols), 0);
  for (Eigen::Index j = 0; j < nfree; ++j) passive[static_cast<std::size_t>(j)] = 1;
  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    MatrixXd MP(M.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      MP.col(static_cast<Eigen::Index>(j)) = M.col(idx[j]);
    }
    VectorXd z = VectorXd::Zero(cols);
    if (!idx.empty()) {
      const VectorXd zp = MP.completeOrthogonalDecomposition().solve(b);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        z(idx[j]) = zp(static_cast<Eigen::Index>(j));
      }
    }
    return z;
  };
  VectorXd x = solve_passive();
  const double tol = 1e-12 * (1.0 + b.norm()) * (1.0 + M.norm());
  for (int outer = 0; outer < 3 * static_cast<int>(cols) + 10; ++outer) {
    const VectorXd grad = M.transpose() * (b - M * x);
    Eigen::Index enter = -1;
    double best = tol;
    for (Eigen::Index j = nfree; j < cols; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && grad(j) > best) {
        best = grad(j);
        enter = j;
      }
    }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = 1;
    for (int inner = 0; inner < static_cast<int>(cols) + 5; ++inner) {
      const VectorXd z = solve_passive();
      double alpha = 1.0;
      bool clipped = false;
      for (Eigen::Index j = nfree; j < cols; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = x(j) - z(j);
          const double a = denom > 0.0 ? x(j) / denom : 0.0;
          if (a < alpha) alpha = a;
          clipped = true;
        }
      }
      if (!clipped) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index j = nfree; j < cols; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-300) {
          passive[static_cast<std::size_t>(j)] = 0;
          x(j) = 0.0;
        }
      }
    }
  }
  return x;
}

/**
 * Polish step. Coordinates of z at zero or at the bound are kept;
 * the others are corrected by the least-norm step that restores the terminal
 * equality and, with state constraints, the linearized balls at states near
 * the boundary. The multiplier is improved on the free rows. The result is
 * accepted only if it is feasible and the duality gap against (beta, mu) is
 * below gap_tol relative to the objective and the multipliers satisfy
 * stationarity to stat_tol.
 */
/**
 * Multipliers for a fixed primal point by an active-set least-squares fit of
 * (beta, eta >= 0) on all stationarity rows. Free coordinates are fitted to
 * l1w sign(u_k); zero and saturated coordinates join once their residual
 * leaves the allowed interval and are then held at its edge. The state
 * multipliers are mu_i = eta_i x_hat_i at the states within 1e-6 of the ball.
 * Returns false (outputs untouched) if there are too many such states.
 */
inline bool refine_duals(const DiscreteProblem &d, const Regularizer &reg, double U,
                         double theta, bool constrained, const VectorXd &u,
                         const MatrixXd &X, VectorXd &beta, MatrixXd &mu) {
  const auto n = d.order();
  const int N = d.N;
  std::vector<Eigen::Index> tight;
  if (constrained) {
    for (int i = 1; i < N; ++i) {
      if (X.col(i).norm() > theta * (1.0 - 1e-6)) tight.push_back(i);
    }
  }
  if (tight.size() > 64) return false;
  const auto t = static_cast<Eigen::Index>(tight.size());
  MatrixXd M(N, n + t);
  M.leftCols(n) = d.Phi.transpose();
  for (Eigen::Index r = 0; r < t; ++r) {
    const Eigen::Index i = tight[static_cast<std::size_t>(r)];
    MatrixXd E = MatrixXd::Zero(n, N - 1);
    E.col(i - 1) = X.col(i).normalized();
    M.col(n + r) = apply_psi_transpose(d.Ad, d.Bd, E);
  }
  VectorXd smooth = VectorXd::Zero(N);
  if (reg.kind == Method::ElasticNet) smooth = 2.0 * reg.l2_weight() * u;
  if (reg.kind == Method::Clot && u.norm() > 0.0) smooth = reg.l2_weight() / u.norm() * u;

  const double l1w = reg.l1_weight();
  std::vector<Eigen::Index> rows;
  VectorXd target = VectorXd::Zero(N);
  std::vector<char> in(static_cast<std::size_t>(N), 0);
  for (Eigen::Index k = 0; k < N; ++k) {
    if (u(k) != 0.0 && std::abs(u(k)) < U) {
      rows.push_back(k);
      in[static_cast<std::size_t>(k)] = 1;
      target(k) = u(k) > 0.0 ? l1w : -l1w;
    }
  }
  VectorXd y = VectorXd::Zero(n + t);
  for (int it = 0; it < 32; ++it) {
    const auto nr = static_cast<Eigen::Index>(rows.size());
    MatrixXd Mr(nr, n + t);
    VectorXd rhs(nr);
    for (Eigen::Index j = 0; j < nr; ++j) {
      const Eigen::Index k = rows[static_cast<std::size_t>(j)];
      Mr.row(j) = M.row(k);
      rhs(j) = -(target(k) + smooth(k));
    }
    if (nr > 0) y = nnls_partial(Mr, rhs, n);
    const VectorXd r = -(M * y) - smooth;
    bool added = false;
    for (Eigen::Index k = 0; k < N; ++k) {
      if (in[static_cast<std::size_t>(k)]) continue;
      const double s = u(k) > 0.0 ? 1.0 : -1.0;
      double edge = 0.0;
      if (u(k) == 0.0 && std::abs(r(k)) > l1w * (1.0 + 1e-12)) {
        edge = r(k) > 0.0 ? l1w : -l1w;
      } else if (u(k) != 0.0 && std::abs(u(k)) >= U && s * r(k) < l1w * (1.0 - 1e-12)) {
        edge = s * l1w;
      } else {
        continue;
      }
      rows.push_back(k);
      in[static_cast<std::size_t>(k)] = 1;
      target(k) = edge;
      added = true;
    }
    if (!added) break;
  }
  beta = y.head(n);
  mu = MatrixXd::Zero(n, std::max(N - 1, 0));
  for (Eigen::Index r = 0; r < t; ++r) {
    const Eigen::Index i = tight[static_cast<std::size_t>(r)];
    mu.col(i - 1) = y(n + r) * X.col(i).normalized();
  }
  return true;
}

enum class PolishOutcome { Rejected, DualCheckFailed, Accepted };

inline PolishOutcome polish_attempt(const DiscreteProblem &d, const Regularizer &reg,
                                    double U, double theta, const VectorXd &z,
                                    const VectorXd &beta_hint, const MatrixXd &mu,
                                    double gap_tol, double stat_tol, VectorXd &u,
                                    VectorXd &beta, MatrixXd &mu_out) {
  const auto n = d.order();
  const bool constrained = mu.size() > 0;
  mu_out = mu;
  const double l1w = reg.l1_weight();
  u = z;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (std::abs(z(k)) >= U) u(k) = z(k) > 0.0 ? U : -U;
  }
  // Free coordinates F (strictly inside the box and nonzero), their columns
  // of Phi and their signs.
  std::vector<Eigen::Index> F;
  Eigen::Index m = 0;
  MatrixXd PF;
  VectorXd sF;
  auto collect = [&]() {
    F.clear();
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      if (u(k) != 0.0 && std::abs(u(k)) < U) F.push_back(k);
    }
    m = static_cast<Eigen::Index>(F.size());
    PF.resize(n, m);
    sF.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      PF.col(j) = d.Phi.col(F[static_cast<std::size_t>(j)]);
      sF(j) = u(F[static_cast<std::size_t>(j)]) > 0.0 ? 1.0 : -1.0;
    }
  };
  collect();
  if (reg.kind == Method::Lasso && m > 8 * n + 32) return PolishOutcome::Rejected;
  const double feas_tol = 0.5 * feasibility_tolerance(d);

  // Rows x_hat_i^T Psi_i restricted to F, x_hat_i the unit direction of x_i.
  auto ball_rows = [&](const MatrixXd &X, const std::vector<Eigen::Index> &idx) {
    MatrixXd G(static_cast<Eigen::Index>(idx.size()), m);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const Eigen::Index i = idx[r];
      VectorXd q = X.col(i).normalized();
      Eigen::Index next = i - 1;
      for (Eigen::Index j = m - 1; j >= 0; --j) {
        const Eigen::Index k = F[static_cast<std::size_t>(j)];
        if (k >= i) {
          G(static_cast<Eigen::Index>(r), j) = 0.0;
          continue;
        }
        for (; next > k; --next) q = d.Ad.transpose() * q;
        G(static_cast<Eigen::Index>(r), j) = d.Bd.dot(q);
      }
    }
    return G;
  };

  // Each round moves u_F to the point of the reduced problem nearest to its
  // unconstrained minimizer p on the terminal equality and the linearized
  // balls: exact for EN, a fixed point in ||u|| for CLOT, and the least-norm
  // correction for LASSO.
  const double c2 = reg.l2_weight();
  const bool quadratic = reg.kind != Method::Lasso && c2 > 0.0;
  for (int round = 0; round < 64 && m > 0; ++round) {
    const MatrixXd X = simulate(d, u);
    VectorXd uF(m);
    for (Eigen::Index j = 0; j < m; ++j) uF(j) = u(F[static_cast<std::size_t>(j)]);
    VectorXd q = VectorXd::Zero(m);
    if (quadratic) {
      const double curvature =
          reg.kind == Method::ElasticNet ? 2.0 * c2 : c2 / u.norm();
      q = -l1w * sF / curvature - uF;
    }
    const VectorXd e = d.b_terminal - d.Phi * u - PF * q;
    MatrixXd G(0, m);
    VectorXd g(0);
    if (constrained) {
      std::vector<Eigen::Index> near;
      for (int i = 1; i < d.N; ++i) {
        if (X.col(i).norm() > theta * (1.0 - 1e-3)) near.push_back(i);
      }
      if (near.size() > 400) return PolishOutcome::Rejected;
      G = ball_rows(X, near);
      g.resize(G.rows());
      for (std::size_t r = 0; r < near.size(); ++r) {
        g(static_cast<Eigen::Index>(r)) = theta - X.col(near[r]).norm();
      }
      g -= G * q;
    }
    VectorXd eps;
    if (!min_norm_qp(PF, e, G, g, eps)) return PolishOutcome::Rejected;
    const VectorXd delta = q + eps;
    // Stop at the first coordinate that would cross zero or the bound, pin
    // it there and continue on the smaller free set.
    double step = 1.0;
    Eigen::Index block = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double v = sF(j) * delta(j);
      const double a = std::abs(uF(j));
      if (v < 0.0 && a + step * v < 0.0) {
        step = a / -v;
        block = j;
      } else if (v > 0.0 && a + step * v > U) {
        step = (U - a) / v;
        block = j;
      }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      u(F[static_cast<std::size_t>(j)]) = uF(j) + step * delta(j);
    }
    if (block >= 0) {
      const auto k = F[static_cast<std::size_t>(block)];
      u(k) = sF(block) * delta(block) < 0.0 ? 0.0 : sF(block) * U;
      collect();
      continue;
    }
    if (!constrained && reg.kind != Method::Clot) break;
    if (delta.cwiseAbs().maxCoeff() <= 1e-14 * U) break;
  }

  // LASSO: walk to a vertex of the reduced feasible set along null-space
  // directions that do not increase the objective, so that the free rows
  // determine the multipliers.
  if (reg.kind == Method::Lasso) {
    std::vector<Eigen::Index> forced;
    for (int step = 0; step < 8 * static_cast<int>(n) + 64 && m > 0; ++step) {
      const MatrixXd X = simulate(d, u);
      std::vector<Eigen::Index> near;
      std::vector<char> is_tight;
      if (constrained) {
        for (int i = 1; i < d.N; ++i) {
          const double nx = X.col(i).norm();
          if (nx <= theta * (1.0 - 1e-3)) continue;
          near.push_back(i);
          is_tight.push_back(
              theta - nx <= 1e-9 * theta ||
              std::find(forced.begin(), forced.end(), i) != forced.end());
        }
      }
      const MatrixXd Gn = ball_rows(X, near);
      const auto nt = std::count(is_tight.begin(), is_tight.end(), 1);
      MatrixXd E(n + nt, m);
      E.topRows(n) = PF;
      for (std::size_t r = 0, row = 0; r < near.size(); ++r) {
        if (is_tight[r]) {
          E.row(n + static_cast<Eigen::Index>(row++)) =
              Gn.row(static_cast<Eigen::Index>(r));
        }
      }
      Eigen::JacobiSVD<MatrixXd> svd(E, Eigen::ComputeFullV);
      svd.setThreshold(1e-10);
      const auto rank = svd.rank();
      if (rank >= m) break;
      const MatrixXd K = svd.matrixV().rightCols(m - rank);
      const VectorXd c = l1w * sF;
      VectorXd dir = -(K * (K.transpose() * c));
      if (dir.norm() <= 1e-12 * c.norm()) dir = K.col(0);

      double alpha = std::numeric_limits<double>::infinity();
      Eigen::Index block = -1;
      bool to_zero = false;
      Eigen::Index block_row = -1;
      for (Eigen::Index j = 0; j < m; ++j) {
        const double v = sF(j) * dir(j);
        const double a = std::abs(u(F[static_cast<std::size_t>(j)]));
        if (v < 0.0 && a / -v < alpha) {
          alpha = a / -v;
          block = j;
          to_zero = true;
        } else if (v > 0.0 && (U - a) / v < alpha) {
          alpha = (U - a) / v;
          block = j;
          to_zero = false;
        }
      }
      for (std::size_t r = 0; r < near.size(); ++r) {
        if (is_tight[r]) continue;
        const double gd = Gn.row(static_cast<Eigen::Index>(r)).dot(dir);
        const double slack = theta - X.col(near[r]).norm();
        if (gd > 0.0 && slack / gd < alpha) {
          alpha = slack / gd;
          block = -1;
          block_row = near[r];
        }
      }
      if (!std::isfinite(alpha)) return PolishOutcome::Rejected;
      for (Eigen::Index j = 0; j < m; ++j) {
        u(F[static_cast<std::size_t>(j)]) += alpha * dir(j);
      }
      if (block >= 0) {
        u(F[static_cast<std::size_t>(block)]) = to_zero ? 0.0 : sF(block) * U;
      } else if (block_row >= 0) {
        forced.push_back(block_row);
      }
      collect();
    }
  }

  const MatrixXd X = simulate(d, u);
  if (X.col(d.N).norm() > feas_tol) return PolishOutcome::Rejected;
  if (constrained &&
      X.middleCols(1, d.N - 1).colwise().norm().maxCoeff() > theta + feas_tol) {
    return PolishOutcome::Rejected;
  }

  const double primal = reg(u);
  // Stationarity rows on F: -(Phi^T beta + Psi^T mu)_F = grad of reg at u_F.
  VectorXd grad_F = l1w * sF;
  if (reg.kind != Method::Lasso) {
    const double nu2 = u.norm();
    for (Eigen::Index j = 0; j < m; ++j) {
      const double uk = u(F[static_cast<std::size_t>(j)]);
      grad_F(j) += reg.kind == Method::ElasticNet ? 2.0 * reg.l2_weight() * uk
                                                  : reg.l2_weight() * uk / nu2;
    }
  }
  beta = beta_hint;
  double best = dual_value(d, reg, U, theta, beta, mu);
  if (m > 0) {
    VectorXd target = -grad_F;
    if (constrained) {
      const VectorXd pm = apply_psi_transpose(d.Ad, d.Bd, mu);
      for (Eigen::Index j = 0; j < m; ++j) {
        target(j) -= pm(F[static_cast<std::size_t>(j)]);
      }
    }
    const VectorXd b2 =
        MatrixXd(PF.transpose()).completeOrthogonalDecomposition().solve(target);
    const double v2 = dual_value(d, reg, U, theta, b2, mu);
    if (v2 > best) {
      best = v2;
      beta = b2;
    }
  }
  if (constrained && m > 0 && primal - best > gap_tol * (1.0 + std::abs(primal))) {
    // Multipliers consistent with the polished point: stationarity on the
    // free rows with mu_i = eta_i x_hat_i, eta >= 0, at the tight states.
    std::vector<Eigen::Index> tight;
    for (int i = 1; i < d.N; ++i) {
      if (X.col(i).norm() > theta * (1.0 - 1e-6)) tight.push_back(i);
    }
    const MatrixXd G = ball_rows(X, tight);
    const auto t = G.rows();
    MatrixXd M(m, n + t);
    M.leftCols(n) = PF.transpose();
    M.rightCols(t) = G.transpose();
    const VectorXd sol = nnls_partial(M, VectorXd(-grad_F), n);
    MatrixXd mu3 = MatrixXd::Zero(n, d.N - 1);
    for (Eigen::Index r = 0; r < t; ++r) {
      const Eigen::Index i = tight[static_cast<std::size_t>(r)];
      mu3.col(i - 1) = sol(n + r) * X.col(i).normalized();
    }
    const VectorXd b3 = sol.head(n);
    const double v3 = dual_value(d, reg, U, theta, b3, mu3);
    if (v3 > best) {
      best = v3;
      beta = b3;
      mu_out = mu3;
    }
  }
  // A small gap can also hide a neighbouring vertex whose multipliers leave
  // the l1 ball on a few coordinates.
  auto passes = [&](const VectorXd &b, const MatrixXd &mm, double value) {
    return primal - value <= gap_tol * (1.0 + std::abs(primal)) &&
           stationarity_gaps(reg, U, u, stationarity_residuals(d, reg, u, b, mm, X))
                   .maxCoeff() <= stat_tol;
  };
  if (passes(beta, mu_out, best)) return PolishOutcome::Accepted;
  // At a degenerate vertex the free rows do not pin the multipliers down.
  VectorXd b4;
  MatrixXd mu4;
  if (refine_duals(d, reg, U, theta, constrained, u, X, b4, mu4)) {
    if (!constrained) mu4 = mu_out;
    if (passes(b4, mu4, dual_value(d, reg, U, theta, b4, mu4))) {
      beta = b4;
      mu_out = mu4;
      return PolishOutcome::Accepted;
    }
  }
  return PolishOutcome::DualCheckFailed;
}

/**
 * Primal active-set polish: polish_attempt on the support of z; while the
 * multipliers show coordinates that should enter the support (zero with
 * |r_k| > l1w) or leave the bound, nudge the largest of them and retry from
 * the polished point.
 */
inline bool polish(const DiscreteProblem &d, const Regularizer &reg, double U,
                   double theta, const VectorXd &z, const VectorXd &beta_hint,
                   const MatrixXd &mu, double gap_tol, double stat_tol, VectorXd &u,
                   VectorXd &beta, MatrixXd &mu_out) {
  VectorXd start = z, b = beta_hint;
  MatrixXd m = mu;
  for (int pivot = 0; pivot < 8; ++pivot) {
    const auto outcome =
        polish_attempt(d, reg, U, theta, start, b, m, gap_tol, stat_tol, u, beta, mu_out);
    if (outcome != PolishOutcome::DualCheckFailed) return outcome == PolishOutcome::Accepted;
    const MatrixXd X = simulate(d, u);
    const VectorXd res = stationarity_residuals(d, reg, u, beta, mu_out, X);
    const VectorXd gaps = stationarity_gaps(reg, U, u, res);
    std::vector<Eigen::Index> movers;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      if (gaps(k) > 1e-9 && (u(k) == 0.0 || std::abs(u(k)) >= U)) movers.push_back(k);
    }
    if (movers.empty()) return false;
    const std::size_t keep = std::min<std::size_t>(movers.size(), 16);
    std::partial_sort(movers.begin(), movers.begin() + static_cast<std::ptrdiff_t>(keep),
                      movers.end(), [&](Eigen::Index i, Eigen::Index j) {
                        return gaps(i) > gaps(j);
                      });
    start = u;
    for (std::size_t i = 0; i < keep; ++i) {
      const Eigen::Index k = movers[i];
      start(k) = u(k) == 0.0 ? std::copysign(1e-9 * U, res(k)) : u(k) * (1.0 - 1e-9);
    }
    b = beta;
    m = mu_out;
  }
  return false;
}

} // namespace detail

/**
 * @brief Solve a hands-off program by over-relaxed ADMM.
 *
 * Splitting: u carries the dynamics and the terminal equality (exact
 * LQ-structured projection, see detail::TerminalLqr); a copy z carries the
 * regularizer and the box through prox_regularized_box; copies of the
 * intermediate states carry the theta-balls. The returned control is z, so
 * box feasibility and exact zeros are preserved. Warm starts reuse u, the
 * multipliers and the penalty of a previous Solution.
 */
inline Solution solve(const ProblemSpec &spec, const SolverConfig &cfg = {},
                      const std::optional<Solution> &warm = std::nullopt) {
  spec.validate();
  cfg.validate();
  const DiscreteProblem &d = spec.discrete;
  const Regularizer &reg = spec.reg;
  const int N = d.N;
  const auto n = d.order();
  const double U = d.plant.u_max;
  const bool constrained = spec.theta.has_value() && N >= 2;
  const double theta = constrained ? *spec.theta : 0.0;
  const double alpha = cfg.over_relaxation;

  if (warm && warm->u.size() != N) {
    throw std::invalid_argument("solve: warm start has the wrong length");
  }

  // The state block is weighted so that a ball of radius theta and the
  // control box have comparable size.
  const double omega = constrained ? 1.0 / (theta * theta) : 0.0;
  const detail::TerminalLqr lqr(d.Ad, d.Bd, N, omega);

  // Orthonormal basis of range(Phi^T) for the dual residual and for
  // infeasibility certificates.
  const Eigen::HouseholderQR<MatrixXd> phi_qr(d.Phi.transpose());
  const MatrixXd Qphi =
      phi_qr.householderQ() * MatrixXd::Identity(N, std::min<Eigen::Index>(n, N));
  const MatrixXd Rphi = phi_qr.matrixQR()
                            .topRows(std::min<Eigen::Index>(n, N))
                            .template triangularView<Eigen::Upper>();
  auto null_component = [&](const VectorXd &s) -> VectorXd {
    return s - Qphi * (Qphi.transpose() * s);
  };

  const double l1w = reg.l1_weight();
  double rho = l1w;
  VectorXd z = VectorXd::Zero(N);
  VectorXd w = VectorXd::Zero(N);
  MatrixXd Y, V;
  if (constrained) {
    Y = MatrixXd::Zero(n, N - 1);
    V = MatrixXd::Zero(n, N - 1);
  }
  if (warm) {
    if (warm->rho > 0.0) rho = warm->rho;
    z = warm->u;
    if (warm->duals.consensus.size() == N) w = warm->duals.consensus / rho;
    if (constrained && warm->states.rows() == N - 1 && warm->states.cols() == n) {
      Y = warm->states.transpose();
      detail::project_state_balls(Y, theta);
      if (warm->duals.state.rows() == N - 1 && warm->duals.state.cols() == n) {
        V = warm->duals.state.transpose() / (rho * omega);
      }
    }
  }

  VectorXd u(N), nu(n), uh(N), z_prev(N), w_prev(N);
  MatrixXd X, Xh, Y_prev, V_prev;
  VectorXd a(N);
  MatrixXd dref;

  Solution sol;
  sol.status = Status::MaxIters;
  const double feas_tol = feasibility_tolerance(d);

  double window_start_residual = std::numeric_limits<double>::infinity();
  double window_start_dual_norm = 0.0;
  int checks_in_window = 0;

  bool polished = false;
  // LASSO minimizers need not be unique, so only the gap is meaningful there;
  // the EN and CLOT reduced problems are solved exactly and held tighter.
  const double polish_gap =
      reg.kind == Method::Lasso ? cfg.eps_rel : 1e-3 * cfg.eps_rel;
  // Stationarity is measured on the certificate's scale, 10x tighter.
  const double polish_stat = 10.0 * cfg.eps_rel * (1.0 + d.b_terminal.norm());
  VectorXd u_pol, beta_pol;
  MatrixXd mu_pol;
  int polish_interval = 1, polish_wait = 0;

  int it = 0;
  double rp = 0.0, rd = 0.0;
  for (it = 1; it <= cfg.max_iters; ++it) {
    const bool check = it % cfg.check_every == 0;
    if (check) {
      z_prev = z;
      w_prev = w;
      if (constrained) {
        Y_prev = Y;
        V_prev = V;
      }
    }

    a = z - w;
    if (constrained) {
      dref = Y - V;
      lqr.solve(a, &dref, d.plant.xi, u, &X, nu);
    } else {
      lqr.solve(a, nullptr, d.plant.xi, u, nullptr, nu);
    }

    uh = alpha * u + (1.0 - alpha) * z;
    const VectorXd zin = uh + w;
    prox_regularized_box(zin, reg, 1.0 / rho, U, z);
    w += uh - z;

    if (constrained) {
      Xh = alpha * X + (1.0 - alpha) * Y;
      Y = Xh + V;
      detail::project_state_balls(Y, theta);
      V += Xh - Y;
    }

    if (!check) continue;

    // Residuals in control/state units and in units of the l1 weight.
    rp = detail::inf_norm(u - z);
    double pscale = std::max(detail::inf_norm(u), detail::inf_norm(z));
    VectorXd s = rho * (z - z_prev);
    if (constrained) {
      rp = std::max(rp, detail::inf_norm(X - Y));
      pscale = std::max({pscale, detail::inf_norm(X), detail::inf_norm(Y)});
      s += rho * omega * apply_psi_transpose(d.Ad, d.Bd, Y - Y_prev);
    }
    rd = detail::inf_norm(null_component(s)) / l1w;
    const VectorXd lambda = rho * w;
    double dscale = detail::inf_norm(lambda) / l1w;
    if (constrained) {
      dscale = std::max(dscale, rho * omega *
                                    detail::inf_norm(apply_psi_transpose(
                                        d.Ad, d.Bd, V)) /
                                    l1w);
    }

    const bool residuals_ok = rp <= cfg.eps_abs + cfg.eps_rel * pscale &&
                              rd <= cfg.eps_abs + cfg.eps_rel * dscale;
    if (residuals_ok) {
      const MatrixXd traj = simulate(d, z);
      bool feasible = traj.col(N).norm() <= feas_tol;
      if (constrained && feasible) {
        const double worst =
            traj.middleCols(1, N - 1).colwise().norm().maxCoeff();
        feasible = worst <= theta + feas_tol;
      }
      if (feasible) {
        sol.status = Status::Optimal;
        break;
      }
    }

    // Failed polish attempts back off geometrically, up to every 8th check.
    if (--polish_wait <= 0) {
      if (detail::polish(d, reg, U, theta, z, VectorXd(rho * nu),
                         constrained ? MatrixXd(rho * omega * V) : MatrixXd(),
                         polish_gap, polish_stat, u_pol, beta_pol, mu_pol)) {
        polished = true;
        sol.status = Status::Optimal;
        break;
      }
      polish_interval = std::min(2 * polish_interval, 8);
      polish_wait = polish_interval;
    }

    // Primal infeasibility certificate from the multiplier increments: a
    // direction (dl, dm) with dl + Psi^T dm = Phi^T beta proves
    // infeasibility when beta^T t + dm^T c exceeds the support terms.
    {
      const VectorXd dl = rho * (w - w_prev);
      VectorXd sdir = dl;
      double support = U * dl.lpNorm<1>();
      double linear = 0.0;
      if (constrained) {
        const MatrixXd dm = rho * omega * (V - V_prev);
        sdir += apply_psi_transpose(d.Ad, d.Bd, dm);
        support += theta * dm.colwise().norm().sum();
        linear += (dm.cwiseProduct(d.c_state)).sum();
      }
      const VectorXd beta = Rphi.template triangularView<Eigen::Upper>().solve(
          Qphi.transpose() * sdir);
      linear += beta.dot(d.b_terminal);
      support += U * null_component(sdir).lpNorm<1>();
      const double scale = std::abs(linear) + support;
      if (scale > 0.0 && std::abs(linear) - support > 1e-6 * scale) {
        sol.status = Status::Infeasible;
        break;
      }
    }

    // Stagnation fallback: residual flat over a whole window while the
    // multipliers keep growing.
    const double dual_norm = (rho * w).norm();
    if (checks_in_window == 0) {
      window_start_residual = rp;
      window_start_dual_norm = dual_norm;
    }
    if (++checks_in_window >= cfg.infeasibility_window) {
      if (rp > 0.999 * window_start_residual &&
          dual_norm > 2.0 * window_start_dual_norm) {
        sol.status = Status::Infeasible;
        break;
      }
      checks_in_window = 0;
    }

    // Penalty adaptation; lambda = rho * w is kept fixed.
    const double rp_rel = rp / std::max(pscale, 1e-300);
    const double rd_rel = rd / std::max(dscale, 1e-300);
    if (rp_rel > 0.0 && rd_rel > 0.0) {
      const double ratio = std::sqrt(rp_rel / rd_rel);
      if (ratio > 5.0 || ratio < 0.2) {
        rho *= ratio;
        w /= ratio;
        if (constrained) V /= ratio;
      }
    }
  }

  sol.iterations = std::min(it, cfg.max_iters);
  if (polished) {
    z = u_pol;
    nu = beta_pol / rho;
    w = -(d.Phi.transpose() * nu);
    if (constrained) {
      V = mu_pol / (rho * omega);
      w -= omega * apply_psi_transpose(d.Ad, d.Bd, V);
    }
  }
  sol.u = z;
  const MatrixXd traj = simulate(d, z);
  sol.states = traj.middleCols(1, std::max(N - 1, 0)).transpose();
  sol.objective = reg(z);
  sol.primal_residual = rp;
  sol.dual_residual = rd;
  sol.rho = rho;
  sol.duals.consensus = rho * w;
  sol.duals.terminal = rho * nu;
  if (constrained) {
    sol.duals.state = (rho * omega * V).transpose();
  } else {
    sol.duals.state.resize(0, n);
  }
  sol.duals.box = detail::box_multiplier(z, sol.duals.consensus, reg, U);
  return sol;
}

} // namespace handsoff

#endif // HANDSOFF_SOLVER_HPP
