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
// Command-line front end: solve, sweep-theta, continuity, reproduce, certify.

#include "handsoff/handsoff.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace handsoff;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUsage = 64;

class UsageError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string plant;
  std::string method = "clot";
  std::optional<double> lambda;
  int N = 2000;
  std::optional<double> theta;
  double step = 0.0;
  double theta_floor = 0.0;
  std::string out;
  std::string format = "csv";
  std::string h_list;
  std::string input;
  std::string table = "all";
  std::string out_dir = ".";
  int max_iters = SolverConfig{}.max_iters;
};

struct ResolvedPlant {
  std::string name;
  Plant plant;
  double lambda = 0.1;
  std::optional<ThetaGrid> theta_range;
};

ResolvedPlant resolve_plant(const RunConfig &rc) {
  if (rc.plant.empty()) throw UsageError("--plant is required");
  ResolvedPlant r;
  constexpr std::string_view prefix = "catalog:";
  if (rc.plant.rfind(prefix, 0) == 0) {
    const auto &e = find_entry(std::string_view(rc.plant).substr(prefix.size()));
    r.name = e.id;
    r.plant = e.make_plant();
    r.lambda = e.lambda;
    r.theta_range = e.theta_range;
  } else {
    r.name = fs::path(rc.plant).stem().string();
    r.plant = plant_from_json(read_json_file(rc.plant)).to_plant();
  }
  if (rc.lambda) r.lambda = *rc.lambda;
  if (!(r.lambda >= 0.0)) throw UsageError("--lambda must be nonnegative");
  return r;
}

std::vector<Method> methods_of(const std::string &s) {
  if (s == "all") return {kAllMethods.begin(), kAllMethods.end()};
  try {
    return {parse_method(s)};
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
}

SolverConfig solver_config(const RunConfig &rc) {
  SolverConfig cfg;
  cfg.max_iters = rc.max_iters;
  return cfg;
}

std::ofstream open_out(const fs::path &p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

/// out = "u.csv", method clot, several methods -> "u_clot.csv".
fs::path per_method_path(const std::string &out, Method m, bool several) {
  fs::path p(out);
  if (!several) return p;
  return p.parent_path() /
         (p.stem().string() + "_" + std::string(to_string(m)) + p.extension().string());
}

fs::path states_path(const fs::path &p) {
  return p.parent_path() / (p.stem().string() + "_states" + p.extension().string());
}

json solution_to_json(const std::string &plant, const ProblemSpec &spec,
                      const Solution &s, const Certificate &c) {
  const MatrixXd X = simulate(spec.discrete, s.u);
  json u = json::array(), norms = json::array(), term = json::array(),
       box = json::array(), state = json::array();
  for (Eigen::Index k = 0; k < s.u.size(); ++k) u.push_back(round_significant(s.u(k)));
  for (Eigen::Index k = 0; k < X.cols(); ++k) norms.push_back(round_significant(X.col(k).norm()));
  for (Eigen::Index k = 0; k < s.duals.terminal.size(); ++k) {
    term.push_back(round_significant(s.duals.terminal(k)));
  }
  for (Eigen::Index k = 0; k < s.duals.box.size(); ++k) {
    box.push_back(round_significant(s.duals.box(k)));
  }
  for (Eigen::Index i = 0; i < s.duals.state.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < s.duals.state.cols(); ++j) {
      row.push_back(round_significant(s.duals.state(i, j)));
    }
    state.push_back(row);
  }
  json j = {{"plant", plant},
            {"method", to_string(spec.reg.kind)},
            {"lambda", spec.reg.lambda},
            {"N", spec.discrete.N},
            {"h", round_significant(spec.discrete.h)},
            {"status", to_string(s.status)},
            {"objective", round_significant(s.objective)},
            {"density", round_significant(sparsity_density(s.u).density)},
            {"iterations", s.iterations},
            {"u", u},
            {"state_norm", norms},
            {"duals", {{"terminal", term}, {"box", box}, {"state", state}}},
            {"certificate", certificate_to_json(c)}};
  j["theta"] = spec.theta ? json(*spec.theta) : json(nullptr);
  return j;
}

void print_summary(std::string_view method, const Solution &s, const Certificate &c) {
  std::cout << "method=" << method << " status=" << to_string(s.status)
            << " objective=" << format_number(s.objective)
            << " density=" << format_number(sparsity_density(s.u).density)
            << " iterations=" << s.iterations
            << " certificate=" << (c.passed ? "pass" : "fail") << '\n';
}

Certificate safe_certify(const ProblemSpec &spec, const Solution &s) {
  if (s.status == Status::Infeasible) return {};
  return certify(spec, s);
}

int cmd_solve(const RunConfig &rc) {
  const auto rp = resolve_plant(rc);
  const auto methods = methods_of(rc.method);
  const auto d = discretize(rp.plant, rc.N);
  const auto cfg = solver_config(rc);

  std::vector<ProblemSpec> specs;
  for (auto m : methods) specs.push_back(make_problem(d, m, rp.lambda, rc.theta));
  std::vector<Solution> sols(specs.size());
  std::vector<Certificate> certs(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) {
    sols[i] = solve(specs[i], cfg);
    certs[i] = safe_certify(specs[i], sols[i]);
  });

  bool infeasible = false;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto &s = sols[i];
    infeasible |= s.status == Status::Infeasible;
    if (!rc.out.empty() && s.status != Status::Infeasible) {
      const fs::path p = per_method_path(rc.out, methods[i], methods.size() > 1);
      if (rc.format == "json") {
        auto os = open_out(p);
        os << solution_to_json(rp.name, specs[i], s, certs[i]).dump(2) << '\n';
      } else {
        auto os = open_out(p);
        write_control_csv(os, d.h, s.u);
        auto ss = open_out(states_path(p));
        write_state_csv(ss, d.h, simulate(d, s.u));
      }
    }
    print_summary(to_string(methods[i]), s, certs[i]);
  }
  if (methods.size() > 1) {
    std::cout << "density";
    for (std::size_t i = 0; i < specs.size(); ++i) {
      std::cout << ' ' << to_string(methods[i]) << '='
                << format_number(sparsity_density(sols[i].u).density);
    }
    std::cout << '\n';
  }
  return infeasible ? kExitInfeasible : kExitOk;
}

int cmd_sweep(const RunConfig &rc) {
  const auto rp = resolve_plant(rc);
  const auto d = discretize(rp.plant, rc.N);
  const auto cfg = solver_config(rc);
  double step = rc.step;
  if (!(step > 0.0)) step = rp.theta_range ? rp.theta_range->step : 0.5;

  SweepOptions opt;
  opt.solver = cfg;
  opt.theta_floor = rc.theta_floor;
  double start = 0.0;
  if (rc.theta) {
    start = *rc.theta;
  } else {
    std::array<Solution, 3> free;
    double top = 0.0;
    for (std::size_t m = 0; m < 3; ++m) {
      free[m] = solve(make_problem(d, kAllMethods[m], rp.lambda), cfg);
      if (free[m].status == Status::Infeasible) {
        std::cout << "status=infeasible (unconstrained problem)\n";
        return kExitInfeasible;
      }
      top = std::max(top, l_max(free[m]));
    }
    start = std::max(step, std::floor(top / step) * step);
    opt.warm = free;
    std::cout << "l_max=" << format_number(top) << " start=" << format_number(start) << '\n';
  }
  const ThetaRange r = theta_sweep(d, rp.lambda, start, step, opt);

  if (!rc.out.empty()) {
    auto os = open_out(rc.out);
    if (rc.format == "json") {
      os << sweep_to_json(r).dump(2) << '\n';
    } else {
      write_sweep_csv(os, r);
    }
  } else {
    write_sweep_csv(std::cout, r);
  }
  int flagged = 0;
  for (const auto &p : r.per_theta) flagged += p.label() == "max_iters";
  std::cout << "theta_max=" << format_number(r.theta_max) << " theta_min="
            << (std::isnan(r.theta_min) ? std::string("none") : format_number(r.theta_min))
            << " points=" << r.per_theta.size() << " max_iters_points=" << flagged
            << " reached_infeasible=" << (r.reached_infeasible ? "yes" : "no") << '\n';
  return std::isnan(r.theta_min) ? kExitInfeasible : kExitOk;
}

std::vector<double> parse_h_list(const std::string &s, double T) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      if (tok.rfind("T/", 0) == 0) {
        out.push_back(T / parse_number(std::string_view(tok).substr(2)));
      } else {
        out.push_back(parse_number(tok));
      }
    } catch (const std::invalid_argument &) {
      throw UsageError("bad --h-list entry '" + tok + "'");
    }
  }
  return out;
}

int cmd_continuity(const RunConfig &rc) {
  const auto rp = resolve_plant(rc);
  const auto methods = methods_of(rc.method);
  if (methods.size() != 1) throw UsageError("continuity takes a single --method");
  const auto h = rc.h_list.empty() ? default_h_values(rp.plant.T)
                                   : parse_h_list(rc.h_list, rp.plant.T);
  if (h.size() < 3) throw UsageError("--h-list needs at least three values");
  ContinuityStudy c;
  try {
    c = continuity_study(rp.plant, rp.lambda, h, methods[0], solver_config(rc));
  } catch (const std::runtime_error &e) {
    std::cout << "status=infeasible " << e.what() << '\n';
    return kExitInfeasible;
  }
  if (!rc.out.empty()) {
    auto os = open_out(rc.out);
    if (rc.format == "json") {
      os << continuity_to_json(c).dump(2) << '\n';
    } else {
      write_continuity_csv(os, c);
    }
  } else {
    write_continuity_csv(std::cout, c);
  }
  std::cout << "method=" << to_string(c.method) << " fitted_exponent="
            << (std::isnan(c.fitted_exponent) ? std::string("nan")
                                              : format_number(c.fitted_exponent))
            << '\n';
  return kExitOk;
}

void write_rows_csv(std::ostream &os, const std::vector<RowResult> &rows) {
  os << "id,N,lambda,method,density,reference,status,iterations,certified\n";
  for (const auto &r : rows) {
    for (std::size_t m = 0; m < 3; ++m) {
      const auto &c = r.cells[m];
      os << r.id << ',' << r.N << ',' << format_number(r.lambda) << ','
         << to_string(kAllMethods[m]) << ',' << format_number(c.density) << ','
         << (r.reference ? format_number((*r.reference)[m]) : std::string()) << ','
         << (c.error.empty() ? std::string(to_string(c.status)) : std::string("error"))
         << ',' << c.iterations << ',' << (c.certified ? 1 : 0) << '\n';
    }
  }
}

void print_rows(std::string_view title, const std::vector<RowResult> &rows) {
  std::cout << title << '\n';
  for (const auto &r : rows) {
    std::cout << "  " << r.id << " N=" << r.N;
    for (std::size_t m = 0; m < 3; ++m) {
      std::cout << ' ' << to_string(kAllMethods[m]) << '=' << format_number(r.cells[m].density);
      if (r.reference) std::cout << " (" << format_number((*r.reference)[m]) << ')';
    }
    std::cout << '\n';
  }
}

int cmd_reproduce(const RunConfig &rc) {
  const auto cfg = solver_config(rc);
  const fs::path dir(rc.out_dir);
  const bool all = rc.table == "all";
  if (!all && rc.table != "2" && rc.table != "3" && rc.table != "4") {
    throw UsageError("--table must be 2, 3, 4 or all");
  }
  if (all || rc.table == "2") {
    const auto rows = run_table2(rc.N, cfg);
    auto os = open_out(dir / "table2.csv");
    write_rows_csv(os, rows);
    print_rows("table2", rows);
  }
  if (all || rc.table == "3") {
    for (int N : {rc.N, 2 * rc.N}) {
      const auto rows = run_table3(N, cfg);
      auto os = open_out(dir / ("table3_N" + std::to_string(N) + ".csv"));
      write_rows_csv(os, rows);
      print_rows("table3 N=" + std::to_string(N), rows);
    }
  }
  if (all || rc.table == "4") {
    for (const auto &s : run_table4_sweeps(rc.N, rc.step, cfg)) {
      auto os = open_out(dir / (s.id + ".csv"));
      write_sweep_csv(os, s.range);
      std::cout << s.id << " l_max=" << format_number(s.unconstrained_l_max[0]) << '/'
                << format_number(s.unconstrained_l_max[1]) << '/'
                << format_number(s.unconstrained_l_max[2])
                << " theta_max=" << format_number(s.range.theta_max) << " theta_min="
                << (std::isnan(s.range.theta_min) ? std::string("none")
                                                  : format_number(s.range.theta_min))
                << '\n';
    }
  }
  return kExitOk;
}

Solution solution_from_json(const json &j, const DiscreteProblem &d) {
  Solution s;
  s.u = detail::vector_from_json(j.at("u"), "u");
  const auto &du = j.at("duals");
  s.duals.terminal = detail::vector_from_json(du.at("terminal"), "terminal");
  s.duals.box = detail::vector_from_json(du.at("box"), "box");
  const auto &st = du.at("state");
  if (!st.empty()) s.duals.state = detail::matrix_from_json(st);
  s.status = Status::Optimal;
  if (s.u.size() != d.N) throw std::invalid_argument("solution length does not match --N");
  return s;
}

int cmd_certify(const RunConfig &rc) {
  const auto rp = resolve_plant(rc);
  const auto methods = methods_of(rc.method);
  if (methods.size() != 1) throw UsageError("certify takes a single --method");
  const auto d = discretize(rp.plant, rc.N);
  const auto spec = make_problem(d, methods[0], rp.lambda, rc.theta);
  Solution s;
  if (!rc.input.empty()) {
    s = solution_from_json(read_json_file(rc.input), d);
  } else {
    s = solve(spec, solver_config(rc));
    if (s.status == Status::Infeasible) {
      std::cout << "status=infeasible\n";
      return kExitInfeasible;
    }
  }
  const Certificate c = certify(spec, s);
  const json out = certificate_to_json(c);
  if (!rc.out.empty()) {
    auto os = open_out(rc.out);
    os << out.dump(2) << '\n';
  }
  std::cout << out.dump() << '\n';
  return c.passed ? kExitOk : kExitError;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sparse minimum-fuel control: LASSO, elastic net and CLOT"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--plant", rc.plant, "catalog:<id> or a plant JSON file")->required();
    sub->add_option("--lambda", rc.lambda, "weight of the second norm");
    sub->add_option("--N", rc.N, "number of samples")->check(CLI::PositiveNumber);
    sub->add_option("--out", rc.out, "output file");
    sub->add_option("--format", rc.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--max-iters", rc.max_iters, "iteration limit")
        ->check(CLI::PositiveNumber);
  };
  const auto method_check = CLI::IsMember({"lasso", "en", "elastic-net", "clot", "all"});

  auto *solve_cmd = app.add_subcommand("solve", "solve one or all formulations");
  add_common(solve_cmd);
  solve_cmd->add_option("--method", rc.method, "lasso, en, clot or all")->check(method_check);
  solve_cmd->add_option("--theta", rc.theta, "bound on the state norm")
      ->check(CLI::PositiveNumber);

  auto *sweep_cmd = app.add_subcommand("sweep-theta", "decrease theta until infeasible");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--theta", rc.theta, "first theta (default: from l_max)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--step", rc.step, "theta decrement")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--theta-floor", rc.theta_floor, "lowest theta to try");

  auto *cont_cmd = app.add_subcommand("continuity", "max adjacent jump against h");
  add_common(cont_cmd);
  cont_cmd->add_option("--method", rc.method, "lasso, en or clot")->check(method_check);
  cont_cmd->add_option("--h-list", rc.h_list, "comma list, e.g. T/250,T/500,T/1000");

  auto *repro_cmd = app.add_subcommand("reproduce", "regenerate the density tables");
  repro_cmd->add_option("--table", rc.table, "2, 3, 4 or all");
  repro_cmd->add_option("--N", rc.N, "base number of samples")->check(CLI::PositiveNumber);
  repro_cmd->add_option("--step", rc.step, "override the theta step of the sweeps")
      ->check(CLI::PositiveNumber);
  repro_cmd->add_option("--out-dir", rc.out_dir, "directory for CSV files");
  repro_cmd->add_option("--max-iters", rc.max_iters, "iteration limit")
      ->check(CLI::PositiveNumber);

  auto *cert_cmd = app.add_subcommand("certify", "check first-order optimality");
  add_common(cert_cmd);
  cert_cmd->add_option("--method", rc.method, "lasso, en or clot")->check(method_check);
  cert_cmd->add_option("--theta", rc.theta, "bound on the state norm")
      ->check(CLI::PositiveNumber);
  cert_cmd->add_option("--input", rc.input, "solution JSON written by solve --format json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(rc);
    if (*sweep_cmd) return cmd_sweep(rc);
    if (*cont_cmd) return cmd_continuity(rc);
    if (*repro_cmd) return cmd_reproduce(rc);
    if (*cert_cmd) return cmd_certify(rc);
  } catch (const UsageError &e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
