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

#include <sstream>

using namespace handsoff;
using namespace handsoff::testing;

TEST(Format, TenSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(format_number(-2.0), "-2");
  EXPECT_EQ(format_number(1e-5), "1e-05");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
  EXPECT_DOUBLE_EQ(round_significant(1.0 / 3.0), 0.3333333333);
  EXPECT_DOUBLE_EQ(parse_number("2.5e-3"), 0.0025);
  EXPECT_THROW(parse_number("2,5"), std::invalid_argument);
}

TEST(PlantJson, PoleZeroForm) {
  const json j = json::parse(R"({"poles": [[-1, 0.2], [-1, -0.2], [0, 1], [0, -1]],
                                 "zeros": [-2], "T": 20, "x0": [1, 1, 1, 1]})");
  const PlantDescription p = plant_from_json(j);
  EXPECT_FALSE(p.raw());
  EXPECT_EQ(p.convention, RealizationConvention::Balanced);
  EXPECT_EQ(p.tf.zeros.size(), 1u);
  EXPECT_EQ(p.tf.zeros[0], C(-2));
  const Plant plant = p.to_plant();
  EXPECT_EQ(plant.order(), 4);
  EXPECT_EQ(plant.u_max, 1.0);
  EXPECT_TRUE(plant_from_json(plant_to_json(p)) == p);
}

TEST(PlantJson, RawForm) {
  const json j = json::parse(R"({"A": [[0, 1], [-1, -0.05]], "B": [0, 1], "T": 5,
                                 "x0": [1, 0], "u_max": 2})");
  const PlantDescription p = plant_from_json(j);
  ASSERT_TRUE(p.raw());
  const Plant plant = p.to_plant();
  EXPECT_EQ(plant.A(1, 1), -0.05);
  EXPECT_EQ(plant.u_max, 2.0);
  EXPECT_TRUE(plant_from_json(plant_to_json(p)) == p);
}

TEST(PlantJson, Errors) {
  EXPECT_THROW(plant_from_json(json::parse(R"({"T": 1, "x0": [1]})")), std::invalid_argument);
  EXPECT_THROW(plant_from_json(json::parse(R"({"poles": [0], "x0": [1]})")), std::invalid_argument);
  EXPECT_THROW(plant_from_json(json::parse(R"({"A": [[0, 1], [0]], "B": [0, 1], "T": 1, "x0": [1, 1]})")),
               std::invalid_argument);
  EXPECT_THROW(plant_from_json(json::parse(R"({"poles": [0], "T": 1, "x0": [1], "convention": "modal"})")),
               std::invalid_argument);
  // Shape errors surface when the plant is built.
  EXPECT_THROW(plant_from_json(json::parse(R"({"poles": [0, 0], "T": 1, "x0": [1]})")).to_plant(),
               std::invalid_argument);
}

TEST(Csv, StableHeadersAndBytes) {
  const auto d = discretize(integrator_chain(2, 4.0, VectorXd::Ones(2)), 40);
  const auto spec = make_problem(d, Method::Clot, 0.1);
  const Solution s = solve(spec);
  std::ostringstream a, b, st;
  write_control_csv(a, d.h, s.u);
  write_control_csv(b, d.h, solve(spec).u);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, 6), "k,t,u\n");
  write_state_csv(st, d.h, simulate(d, s.u));
  EXPECT_EQ(st.str().substr(0, 15), "k,t,state_norm\n");
  const std::string states = st.str();
  EXPECT_EQ(std::count(states.begin(), states.end(), '\n'), 42);

  ThetaRange r;
  SweepPoint p;
  p.theta = 6.5;
  p.density = {0.1, 0.3, 0.2};
  p.status = {Status::Optimal, Status::MaxIters, Status::Optimal};
  r.per_theta.push_back(p);
  std::ostringstream sw;
  write_sweep_csv(sw, r);
  EXPECT_EQ(sw.str(), "theta,density_lasso,density_en,density_clot,status\n6.5,0.1,0.3,0.2,max_iters\n");

  ContinuityStudy c;
  c.h_values = {0.1, 0.05};
  c.max_diffs = {0.2, 0.1};
  std::ostringstream cs;
  write_continuity_csv(cs, c);
  EXPECT_EQ(cs.str(), "h,max_adjacent_diff\n0.1,0.2\n0.05,0.1\n");
}

TEST(Json, CertificateFields) {
  Certificate c;
  c.passed = true;
  c.tolerance = 1e-4;
  const json j = certificate_to_json(c);
  for (const char *k : {"passed", "tolerance", "stationarity_residual", "eq_violation", "box_violation",
                        "state_violation", "slackness_residual", "dual_negativity"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_TRUE(j["passed"].get<bool>());
}
