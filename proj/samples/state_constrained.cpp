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
// Bound the state norm below its unconstrained peak and watch the control
// become denser; a short theta sweep ends at the first infeasible bound.

#include "handsoff/handsoff.hpp"

#include <iostream>

int main() {
  using namespace handsoff;

  const CatalogEntry &e = find_entry("sweep-P1"); // x0 = (1,0,1,1), lambda = 1
  const DiscreteProblem d = discretize(e.make_plant(), 1000);

  const Solution free = solve(make_problem(d, Method::Clot, e.lambda));
  const double peak = l_max(free);
  std::cout << "unconstrained: l_max=" << peak
            << " density=" << sparsity_density(free.u).density << '\n';

  const ProblemSpec spec = make_problem(d, Method::Clot, e.lambda, 0.8 * peak);
  const Solution s = solve(spec, {}, free);
  std::cout << "theta=" << *spec.theta << ": status=" << to_string(s.status)
            << " l_max=" << l_max(s) << " density=" << sparsity_density(s.u).density
            << " certified=" << (certify(spec, s).passed ? "yes" : "no") << '\n';

  const ThetaRange r = theta_sweep(d, e.lambda, 7.0, 1.0);
  for (const auto &p : r.per_theta) {
    std::cout << "theta=" << p.theta << " lasso=" << p.density[0] << " en=" << p.density[1]
              << " clot=" << p.density[2] << " " << p.label() << '\n';
  }
}
