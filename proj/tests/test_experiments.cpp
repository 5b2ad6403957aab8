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

#include <algorithm>
#include <fstream>

using namespace handsoff;
using namespace handsoff::testing;

namespace {

bool same_roots(std::vector<C> a, std::vector<C> b) {
  auto key = [](const C &x, const C &y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  };
  std::sort(a.begin(), a.end(), key);
  std::sort(b.begin(), b.end(), key);
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-12) return false;
  }
  return true;
}

} // namespace

TEST(Catalog, PlantsMatchTheirDefinitions) {
  const std::vector<C> quad = {C(0), C(0), C(0), C(0)};
  const std::vector<C> six = {C(0), C(0), C(0), C(0), C(0, 1), C(0, -1)};
  struct Expect {
    const char *id;
    std::vector<C> poles, zeros;
    double T;
  };
  const std::vector<Expect> expected = {
      {"P1", quad, {}, 20},
      {"P2", {C(-0.025, 1), C(-0.025, -1)}, {}, 20},
      {"P3", {C(-1, 0.2), C(-1, -0.2), C(0, 1), C(0, -1)}, {C(-2)}, 20},
      {"P4", p4_poles(), {}, 20},
      {"P5", six, {}, 40},
      {"P6", six, {C(2)}, 40},
      {"P7", six, {C(1), C(2)}, 40},
  };
  for (const auto &e : expected) {
    const auto &entry = find_entry(e.id);
    EXPECT_TRUE(same_roots(entry.plant.tf.poles, e.poles)) << e.id;
    EXPECT_TRUE(same_roots(entry.plant.tf.zeros, e.zeros)) << e.id;
    EXPECT_EQ(entry.plant.T, e.T) << e.id;
    EXPECT_EQ(entry.plant.x0, VectorXd::Ones(static_cast<Eigen::Index>(e.poles.size())));
  }
}

TEST(Catalog, TableRowsReferToTheirPlants) {
  const char *plant_of_row[] = {"P1", "P1", "P2", "P2", "P3", "P4", "P6", "P7"};
  const double lambda_of_row[] = {1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  for (int r = 1; r <= 8; ++r) {
    const auto &row = find_entry("row" + std::to_string(r));
    const auto &plant = find_entry(plant_of_row[r - 1]);
    EXPECT_EQ(row.plant_id, plant.id);
    EXPECT_TRUE(same_roots(row.plant.tf.poles, plant.plant.tf.poles));
    EXPECT_TRUE(same_roots(row.plant.tf.zeros, plant.plant.tf.zeros));
    EXPECT_EQ(row.lambda, lambda_of_row[r - 1]);
    EXPECT_EQ(row.plant.T, r >= 7 ? 40.0 : 20.0);
    EXPECT_TRUE(row.reference.count("table3"));
  }
  VectorXd x(2);
  x << 10, 1;
  EXPECT_EQ(find_entry("row4").plant.x0, x);
}

TEST(Catalog, SweepEntries) {
  const auto &p1 = find_entry("sweep-P1");
  ASSERT_TRUE(p1.theta_range);
  EXPECT_EQ(*p1.theta_range, (ThetaGrid{6, 10, 0.5}));
  EXPECT_EQ(p1.lambda, 1.0);
  EXPECT_EQ(p1.plant.convention, RealizationConvention::Companion);
  const auto &p7 = find_entry("sweep-P7");
  ASSERT_TRUE(p7.theta_range);
  EXPECT_EQ(*p7.theta_range, (ThetaGrid{30, 200, 1}));
  EXPECT_EQ(p7.plant.T, 40.0);
  EXPECT_EQ(p7.plant.x0.size(), 6);
  EXPECT_EQ(p7.plant.x0(1), 0.0);
}

TEST(Catalog, AliasesResolve) {
  EXPECT_EQ(find_entry("table1:P6").id, "P7");
  EXPECT_EQ(find_entry("table1:P5").id, "P6");
  EXPECT_THROW(find_entry("P99"), std::out_of_range);
}

TEST(Catalog, RoundTripsThroughJson) {
  const Catalog &c = builtin_catalog();
  const Catalog back = catalog_from_json(json::parse(catalog_to_json(c).dump()));
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_TRUE(back[i] == c[i]) << c[i].id;
}

TEST(Catalog, EmbeddedCopyMatchesAsset) {
  std::ifstream in(HANDSOFF_SOURCE_DIR "/assets/catalog.json");
  ASSERT_TRUE(in.good());
  const Catalog file = catalog_from_json(json::parse(in));
  const Catalog &embedded = builtin_catalog();
  ASSERT_EQ(file.size(), embedded.size());
  for (std::size_t i = 0; i < file.size(); ++i) EXPECT_TRUE(file[i] == embedded[i]);
}

TEST(Catalog, EveryPlantIsControllable) {
  for (const auto &e : builtin_catalog()) {
    EXPECT_TRUE(is_controllable(e.make_plant())) << e.id;
  }
}

// Densities at N = 2000 from an interior-point conic solver (Clarabel) on
// the same discretization, thresholded at 1e-4.
TEST(Reproduction, DensitiesMatchConicReference) {
  struct Ref {
    const char *row;
    std::size_t method;
    double density;
  };
  const std::vector<Ref> refs = {
      {"row1", 2, 0.445}, {"row2", 1, 0.3255}, {"row4", 1, 0.49},
      {"row7", 0, 0.132}, {"row7", 1, 0.2245}, {"row7", 2, 0.159},
  };
  for (const auto &r : refs) {
    const auto &e = find_entry(r.row);
    const auto d = discretize(e.make_plant(), 2000);
    const Solution s = solve(make_problem(d, kAllMethods[r.method], e.lambda));
    ASSERT_EQ(s.status, Status::Optimal);
    EXPECT_NEAR(sparsity_density(s.u).density, r.density, 0.005)
        << r.row << " " << to_string(kAllMethods[r.method]);
  }
}

TEST(Reproduction, LassoIgnoresLambda) {
  const auto rows = run_table2(1000);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].cells[0].density, rows[1].cells[0].density);
  for (const auto &r : rows) {
    ASSERT_TRUE(r.reference);
    for (const auto &c : r.cells) {
      EXPECT_EQ(c.status, Status::Optimal);
      EXPECT_TRUE(c.certified);
      EXPECT_TRUE(c.error.empty());
    }
  }
}

TEST(Reproduction, OrderingHoldsAcrossTableRows) {
  for (const auto &r : run_table3(1000)) {
    const auto d = r.densities();
    EXPECT_LE(d[0], d[2]) << r.id;
    EXPECT_LE(d[2], d[1] + 0.02) << r.id;
  }
}
