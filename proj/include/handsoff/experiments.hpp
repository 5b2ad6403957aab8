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
#ifndef HANDSOFF_EXPERIMENTS_HPP
#define HANDSOFF_EXPERIMENTS_HPP

#include "handsoff/analysis.hpp"
#include "handsoff/catalog_data.hpp" // generated from assets/catalog.json
#include "handsoff/certify.hpp"
#include "handsoff/io.hpp"
#include "handsoff/parallel.hpp"
#include "handsoff/solver.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace handsoff {

// =============================================================================
// Catalog
// =============================================================================

struct ThetaGrid {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  bool operator==(const ThetaGrid &) const = default;
};

using DensityTriple = std::array<double, 3>; ///< lasso, en, clot

struct CatalogEntry {
  std::string id;
  std::vector<std::string> aliases;
  std::string plant_id; ///< the plant a table row uses; empty for plant entries
  PlantDescription plant;
  double lambda = 0.1;
  std::optional<ThetaGrid> theta_range;
  std::map<std::string, DensityTriple> reference; ///< reference densities by table

  Plant make_plant() const { return plant.to_plant(); }
};

inline bool operator==(const CatalogEntry &a, const CatalogEntry &b) {
  return a.id == b.id && a.aliases == b.aliases && a.plant_id == b.plant_id &&
         a.plant == b.plant && a.lambda == b.lambda &&
         a.theta_range == b.theta_range && a.reference == b.reference;
}

inline CatalogEntry entry_from_json(const json &j) {
  CatalogEntry e;
  try {
    e.id = j.at("id").get<std::string>();
    e.aliases = j.value("aliases", std::vector<std::string>{});
    e.plant_id = j.value("plant", std::string{});
    e.plant = plant_from_json(j);
    e.lambda = j.at("lambda").get<double>();
    if (j.contains("theta_range")) {
      const auto &t = j.at("theta_range");
      e.theta_range = ThetaGrid{t.at("lo").get<double>(), t.at("hi").get<double>(),
                                t.at("step").get<double>()};
    }
    if (j.contains("reference")) {
      for (const auto &[table, v] : j.at("reference").items()) {
        e.reference[table] = v.get<DensityTriple>();
      }
    }
  } catch (const json::exception &ex) {
    throw std::invalid_argument("catalog entry '" + e.id + "': " + ex.what());
  }
  return e;
}

inline json entry_to_json(const CatalogEntry &e) {
  json j = plant_to_json(e.plant);
  j["id"] = e.id;
  if (!e.aliases.empty()) j["aliases"] = e.aliases;
  if (!e.plant_id.empty()) j["plant"] = e.plant_id;
  j["lambda"] = e.lambda;
  if (e.theta_range) {
    j["theta_range"] = {{"lo", e.theta_range->lo},
                        {"hi", e.theta_range->hi},
                        {"step", e.theta_range->step}};
  }
  if (!e.reference.empty()) {
    json r = json::object();
    for (const auto &[table, v] : e.reference) r[table] = v;
    j["reference"] = r;
  }
  return j;
}

using Catalog = std::vector<CatalogEntry>;

inline Catalog catalog_from_json(const json &j) {
  Catalog c;
  for (const auto &e : j.at("entries")) c.push_back(entry_from_json(e));
  return c;
}

inline json catalog_to_json(const Catalog &c) {
  json entries = json::array();
  for (const auto &e : c) entries.push_back(entry_to_json(e));
  return {{"version", 1}, {"entries", entries}};
}

/// The catalog embedded at build time.
inline const Catalog &builtin_catalog() {
  static const Catalog c = catalog_from_json(json::parse(assets::kCatalogJson));
  return c;
}

/// Lookup by id or alias; throws std::out_of_range listing the known ids.
inline const CatalogEntry &find_entry(std::string_view key,
                                      const Catalog &c = builtin_catalog()) {
  for (const auto &e : c) {
    if (e.id == key) return e;
  }
  for (const auto &e : c) {
    for (const auto &a : e.aliases) {
      if (a == key) return e;
    }
  }
  std::string known;
  for (const auto &e : c) known += (known.empty() ? "" : ", ") + e.id;
  throw std::out_of_range("unknown catalog id '" + std::string(key) +
                          "' (known: " + known + ")");
}

// =============================================================================
// Table reproduction
// =============================================================================

struct CellResult {
  double density = 0.0;
  Status status = Status::MaxIters;
  int iterations = 0;
  double seconds = 0.0;
  bool certified = false;
  std::string error; ///< non-empty when the solve threw
};

struct RowResult {
  std::string id;
  int N = 0;
  double lambda = 0.0;
  std::array<CellResult, 3> cells;
  std::optional<DensityTriple> reference;

  DensityTriple densities() const {
    return {cells[0].density, cells[1].density, cells[2].density};
  }
};

namespace detail {

inline CellResult solve_cell(const DiscreteProblem &d, Method m, double lambda,
                             const SolverConfig &cfg) {
  CellResult c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto spec = make_problem(d, m, lambda);
    const Solution s = solve(spec, cfg);
    c.status = s.status;
    c.iterations = s.iterations;
    c.density = sparsity_density(s.u).density;
    c.certified = s.status == Status::Optimal && certify(spec, s).passed;
  } catch (const std::exception &e) {
    c.error = e.what();
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

/// All (row, method) cells concurrently; results land by index.
inline std::vector<RowResult> run_rows(const std::vector<const CatalogEntry *> &rows,
                                       int N, const std::string &table,
                                       const SolverConfig &cfg) {
  std::vector<RowResult> out(rows.size());
  std::vector<DiscreteProblem> problems(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[r].id = rows[r]->id;
    out[r].N = N;
    out[r].lambda = rows[r]->lambda;
    if (auto it = rows[r]->reference.find(table); it != rows[r]->reference.end()) {
      out[r].reference = it->second;
    }
    problems[r] = discretize(rows[r]->make_plant(), N);
  }
  parallel_for(rows.size() * 3, [&](std::size_t i) {
    const std::size_t r = i / 3, m = i % 3;
    out[r].cells[m] = solve_cell(problems[r], kAllMethods[m], rows[r]->lambda, cfg);
  });
  return out;
}

} // namespace detail

/// P1, x0 = (1,1,1,1), T = 20, lambda in {1, 0.1}.
inline std::vector<RowResult> run_table2(int N = 2000, const SolverConfig &cfg = {}) {
  return detail::run_rows({&find_entry("row1"), &find_entry("row2")}, N, "table2", cfg);
}

/// The eight rows of the plant table.
inline std::vector<RowResult> run_table3(int N = 2000, const SolverConfig &cfg = {}) {
  std::vector<const CatalogEntry *> rows;
  for (int r = 1; r <= 8; ++r) rows.push_back(&find_entry("row" + std::to_string(r)));
  return detail::run_rows(rows, N, "table3", cfg);
}

struct SweepResult {
  std::string id;
  DensityTriple unconstrained_density{};
  DensityTriple unconstrained_l_max{};
  ThetaRange range;
};

/**
 * Unconstrained solves give l_max per method; the sweep then starts on the
 * theta grid at floor(max l_max / step) step and descends until the
 * problem becomes infeasible. `step_override` > 0 replaces the catalog step.
 */
inline SweepResult run_sweep(const CatalogEntry &e, int N = 2000,
                             double step_override = 0.0,
                             const SolverConfig &cfg = {}) {
  if (!e.theta_range) {
    throw std::invalid_argument("catalog entry '" + e.id + "' has no theta range");
  }
  SweepResult out;
  out.id = e.id;
  const auto d = discretize(e.make_plant(), N);
  std::array<Solution, 3> free;
  for (std::size_t m = 0; m < 3; ++m) {
    free[m] = solve(make_problem(d, kAllMethods[m], e.lambda), cfg);
    if (free[m].status == Status::Infeasible) {
      throw std::runtime_error("sweep '" + e.id + "': unconstrained problem infeasible");
    }
    out.unconstrained_density[m] = sparsity_density(free[m].u).density;
    out.unconstrained_l_max[m] = l_max(free[m]);
  }
  const double step = step_override > 0.0 ? step_override : e.theta_range->step;
  const double top = *std::max_element(out.unconstrained_l_max.begin(),
                                       out.unconstrained_l_max.end());
  const double start = std::max(step, std::floor(top / step) * step);
  SweepOptions opt;
  opt.solver = cfg;
  opt.warm = free;
  out.range = theta_sweep(d, e.lambda, start, step, opt);
  return out;
}

/// Both state-constrained configurations of the catalog.
inline std::vector<SweepResult> run_table4_sweeps(int N = 2000, double step_override = 0.0,
                                                  const SolverConfig &cfg = {}) {
  std::vector<SweepResult> out;
  for (const auto &e : builtin_catalog()) {
    if (e.theta_range) out.push_back(run_sweep(e, N, step_override, cfg));
  }
  return out;
}

} // namespace handsoff

#endif // HANDSOFF_EXPERIMENTS_HPP
