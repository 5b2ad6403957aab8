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
// Fourth-order integrator: compare the sparsity of the three formulations.

#include "handsoff/handsoff.hpp"

#include <iostream>

int main() {
  using namespace handsoff;

  Plant plant = find_entry("P1").make_plant(); // 1/s^4, x0 = (1,1,1,1), T = 20
  const DiscreteProblem d = discretize(plant, 2000);

  for (Method m : kAllMethods) {
    const ProblemSpec spec = make_problem(d, m, /*lambda=*/0.1);
    const Solution s = solve(spec);
    const Certificate c = certify(spec, s);
    std::cout << to_string(m) << ": status=" << to_string(s.status)
              << " density=" << sparsity_density(s.u).density
              << " objective=" << s.objective
              << " certified=" << (c.passed ? "yes" : "no") << '\n';
  }
}
