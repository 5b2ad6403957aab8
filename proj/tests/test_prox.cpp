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
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace handsoff;
using namespace handsoff::testing;

TEST(Regularizer, Weights) {
  const Regularizer lasso{Method::Lasso, 0.5, 0.01};
  const Regularizer en{Method::ElasticNet, 0.5, 0.01};
  const Regularizer clot{Method::Clot, 0.5, 0.01};
  EXPECT_DOUBLE_EQ(lasso.l2_weight(), 0.0);
  EXPECT_DOUBLE_EQ(en.l2_weight(), 0.005);
  EXPECT_DOUBLE_EQ(clot.l2_weight(), 0.05);
  VectorXd u(2);
  u << 3, -4;
  EXPECT_DOUBLE_EQ(lasso(u), 0.07);
  EXPECT_DOUBLE_EQ(en(u), 0.07 + 0.005 * 25);
  EXPECT_DOUBLE_EQ(clot(u), 0.07 + 0.05 * 5);
}

TEST(Regularizer, ParseMethod) {
  EXPECT_EQ(parse_method("lasso"), Method::Lasso);
  EXPECT_EQ(parse_method("en"), Method::ElasticNet);
  EXPECT_EQ(parse_method("elastic-net"), Method::ElasticNet);
  EXPECT_EQ(parse_method("clot"), Method::Clot);
  EXPECT_THROW(parse_method("ridge"), std::invalid_argument);
  EXPECT_THROW((Regularizer{Method::Clot, -1.0, 0.1}.validate()), std::invalid_argument);
}

TEST(Prox, SoftThresholdAgainstGrid) {
  for (double v : {-2.3, -0.4, 0.0, 0.05, 0.7, 1.9}) {
    const double t = 0.5;
    const double ref = scalar_argmin(v, [&](double x) { return t * std::abs(x); }, -3, 3);
    VectorXd vv(1);
    vv << v;
    EXPECT_NEAR(prox_l1(vv, t)(0), ref, 1e-4) << v;
  }
}

TEST(Prox, ElasticNetAgainstGrid) {
  for (double v : {-2.3, -0.4, 0.0, 0.7, 1.9}) {
    const double m1 = 0.3, m2 = 0.8;
    const double ref = scalar_argmin(
        v, [&](double x) { return m1 * std::abs(x) + m2 * x * x; }, -3, 3);
    VectorXd vv(1);
    vv << v;
    EXPECT_NEAR(prox_en(vv, m1, m2)(0), ref, 1e-4) << v;
  }
}

// Two-dimensional grid oracle for the CLOT prox, with and without the box.
TEST(Prox, ClotAgainstTwoDimensionalGrid) {
  const double m1 = 0.2, m2 = 0.3;
  const std::vector<std::pair<double, double>> points = {{1.5, -0.4}, {0.25, 0.1}, {2.0, 1.1}, {-0.9, 0.9}};
  for (auto [a, b] : points) {
    VectorXd v(2);
    v << a, b;
    for (double bound : {10.0, 0.8}) {
      double best = 1e300;
      Eigen::Vector2d arg;
      const int K = 801;
      for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
          const Eigen::Vector2d x(-2 + 4.0 * i / (K - 1), -2 + 4.0 * j / (K - 1));
          if (x.cwiseAbs().maxCoeff() > bound) continue;
          const double f = 0.5 * (x - v).squaredNorm() + m1 * x.lpNorm<1>() + m2 * x.norm();
          if (f < best) {
            best = f;
            arg = x;
          }
        }
      }
      // h = 1: l1 weight = scale, l2 weight = scale * lambda.
      const Regularizer reg{Method::Clot, m2 / m1, 1.0, m1};
      const VectorXd p = prox_regularized_box(v, reg, 1.0, bound);
      EXPECT_LT((p - arg).norm(), 1e-2) << a << "," << b << " bound " << bound;
      if (bound > 5) EXPECT_LT((p - prox_clot(v, m1, m2)).norm(), 1e-14);
    }
  }
}

TEST(Prox, MoreauIdentityForL1) {
  // prox_{t||.||_1}(v) + t prox_{||.||_1^*/t}(v/t) = v, where the conjugate
  // prox is the projection onto the unit linf ball.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd v = random_vector(rng, 20, 2.0);
    const double t = 0.1 + 0.05 * trial;
    const VectorXd lhs = prox_l1(v, t) + t * project_box(v / t, 1.0);
    EXPECT_LT((lhs - v).norm(), 1e-12);
  }
}

TEST(Prox, NonExpansive) {
  std::mt19937_64 rng(13);
  for (Method m : kAllMethods) {
    const Regularizer reg{m, 0.7, 0.05};
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd a = random_vector(rng, 15, 3.0);
      const VectorXd b = random_vector(rng, 15, 3.0);
      const VectorXd pa = prox_regularized_box(a, reg, 2.0, 1.0);
      const VectorXd pb = prox_regularized_box(b, reg, 2.0, 1.0);
      EXPECT_LE((pa - pb).norm(), (a - b).norm() * (1 + 1e-12));
      EXPECT_LE(pa.cwiseAbs().maxCoeff(), 1.0);
    }
  }
}

// Optimality of the boxed prox: p minimizes 0.5||x - v||^2 + t reg(x) over
// the box, checked against random feasible perturbations.
TEST(Prox, BoxedProxIsMinimizer) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (Method m : kAllMethods) {
    const Regularizer reg{m, 1.3, 0.2};
    for (int trial = 0; trial < 20; ++trial) {
      const VectorXd v = random_vector(rng, 6, 2.0);
      const VectorXd p = prox_regularized_box(v, reg, 1.0, 0.9);
      auto f = [&](const VectorXd &x) { return 0.5 * (x - v).squaredNorm() + reg(x); };
      for (int k = 0; k < 200; ++k) {
        VectorXd x = p;
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += 0.05 * unit(rng);
        x = project_box(x, 0.9);
        EXPECT_GE(f(x), f(p) - 1e-12);
      }
    }
  }
}

TEST(Prox, Projections) {
  VectorXd p(2), c(2);
  p << 3, 4;
  c << 0, 0;
  EXPECT_NEAR(project_ball(p, c, 1.0).norm(), 1.0, 1e-15);
  EXPECT_EQ(project_ball(p, c, 10.0), p);
  EXPECT_EQ(project_point(p, c), c);
  EXPECT_EQ(project_box(p, 3.5)(1), 3.5);
}
