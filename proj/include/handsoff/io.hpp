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
#ifndef HANDSOFF_IO_HPP
#define HANDSOFF_IO_HPP

#include "handsoff/analysis.hpp"
#include "handsoff/certify.hpp"
#include "handsoff/lti.hpp"
#include "handsoff/solver.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <charconv>
#include <complex>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace handsoff {

using json = nlohmann::json;

// =============================================================================
// Number formatting
// =============================================================================

/// Locale-independent, 10 significant digits, shortest form.
inline std::string format_number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 10);
  if (r.ec != std::errc{}) throw std::runtime_error("format_number: overflow");
  return std::string(buf, r.ptr);
}

/// x rounded to the value printed by format_number.
inline double round_significant(double x) {
  const std::string s = format_number(x);
  double y = x;
  std::from_chars(s.data(), s.data() + s.size(), y);
  return y;
}

inline double parse_number(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

// =============================================================================
// Plant descriptions
// =============================================================================

inline std::string_view to_string(RealizationConvention c) {
  return c == RealizationConvention::Balanced ? "balanced" : "companion";
}

inline RealizationConvention parse_convention(std::string_view s) {
  if (s == "balanced") return RealizationConvention::Balanced;
  if (s == "companion") return RealizationConvention::Companion;
  throw std::invalid_argument("unknown realization convention '" + std::string(s) + "'");
}

/**
 * @brief A plant as it appears in a file: either poles/zeros/gain or raw
 *        (A, B), plus horizon, initial state and input bound.
 */
struct PlantDescription {
  TransferFunctionSpec tf;
  std::optional<MatrixXd> A; ///< raw form when set; tf is then ignored
  std::optional<VectorXd> B;
  RealizationConvention convention = RealizationConvention::Balanced;
  double T = 1.0;
  VectorXd x0;
  double u_max = 1.0;

  bool raw() const { return A.has_value(); }

  Plant to_plant() const {
    Plant p;
    if (raw()) {
      p.A = *A;
      p.B = *B;
    } else {
      const auto r = realize(tf, convention);
      p.A = r.A;
      p.B = r.B;
    }
    p.xi = x0;
    p.T = T;
    p.u_max = u_max;
    p.validate();
    return p;
  }
};

namespace detail {

inline std::complex<double> root_from_json(const json &j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw std::invalid_argument("root must be a number or a [re, im] pair");
}

inline std::vector<std::complex<double>> roots_from_json(const json &j) {
  std::vector<std::complex<double>> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw std::invalid_argument("roots must be an array");
  for (const auto &r : j) out.push_back(root_from_json(r));
  return out;
}

inline json roots_to_json(const std::vector<std::complex<double>> &roots) {
  json j = json::array();
  for (const auto &r : roots) j.push_back({r.real(), r.imag()});
  return j;
}

inline VectorXd vector_from_json(const json &j, std::string_view what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline json vector_to_json(const Eigen::Ref<const VectorXd> &v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline MatrixXd matrix_from_json(const json &j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("A must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto &row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument("A has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return M;
}

inline json matrix_to_json(const MatrixXd &M) {
  json j = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    j.push_back(row);
  }
  return j;
}

} // namespace detail

/// Accepts {"poles", "zeros"?, "gain"?} or {"A", "B"}, with "T", "x0",
/// "u_max"? and "convention"? ("balanced" by default).
inline PlantDescription plant_from_json(const json &j) {
  try {
    PlantDescription p;
    if (j.contains("A")) {
      p.A = detail::matrix_from_json(j.at("A"));
      p.B = detail::vector_from_json(j.at("B"), "B");
    } else if (j.contains("poles")) {
      p.tf.poles = detail::roots_from_json(j.at("poles"));
      p.tf.zeros = detail::roots_from_json(j.value("zeros", json::array()));
      p.tf.gain = j.value("gain", 1.0);
    } else {
      throw std::invalid_argument("needs either poles or A/B");
    }
    p.convention = parse_convention(j.value("convention", std::string("balanced")));
    p.T = j.at("T").get<double>();
    p.x0 = detail::vector_from_json(j.at("x0"), "x0");
    p.u_max = j.value("u_max", 1.0);
    return p;
  } catch (const json::exception &e) {
    throw std::invalid_argument(std::string("plant: ") + e.what());
  }
}

inline json plant_to_json(const PlantDescription &p) {
  json j;
  if (p.raw()) {
    j["A"] = detail::matrix_to_json(*p.A);
    j["B"] = detail::vector_to_json(*p.B);
  } else {
    j["poles"] = detail::roots_to_json(p.tf.poles);
    j["zeros"] = detail::roots_to_json(p.tf.zeros);
    if (p.tf.gain != 1.0) j["gain"] = p.tf.gain;
  }
  j["convention"] = to_string(p.convention);
  j["T"] = p.T;
  j["x0"] = detail::vector_to_json(p.x0);
  if (p.u_max != 1.0) j["u_max"] = p.u_max;
  return j;
}

inline bool operator==(const PlantDescription &a, const PlantDescription &b) {
  const auto same_opt = [](const auto &x, const auto &y) {
    return x.has_value() == y.has_value() && (!x || *x == *y);
  };
  return a.tf.poles == b.tf.poles && a.tf.zeros == b.tf.zeros &&
         a.tf.gain == b.tf.gain && same_opt(a.A, b.A) && same_opt(a.B, b.B) &&
         a.convention == b.convention && a.T == b.T && a.x0 == b.x0 &&
         a.u_max == b.u_max;
}

inline json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw std::invalid_argument("'" + path + "': " + e.what());
  }
}

// =============================================================================
// CSV and JSON reports
// =============================================================================

/// Header `k,t,u`.
inline void write_control_csv(std::ostream &os, double h,
                              const Eigen::Ref<const VectorXd> &u) {
  os << "k,t,u\n";
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    os << k << ',' << format_number(k * h) << ',' << format_number(u(k)) << '\n';
  }
}

/// Header `k,t,state_norm`; X holds x_0..x_N as columns.
inline void write_state_csv(std::ostream &os, double h, const MatrixXd &X) {
  os << "k,t,state_norm\n";
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    os << k << ',' << format_number(k * h) << ',' << format_number(X.col(k).norm())
       << '\n';
  }
}

/// Header `theta,density_lasso,density_en,density_clot,status`.
inline void write_sweep_csv(std::ostream &os, const ThetaRange &r) {
  os << "theta,density_lasso,density_en,density_clot,status\n";
  for (const auto &p : r.per_theta) {
    os << format_number(p.theta);
    for (double v : p.density) os << ',' << format_number(v);
    os << ',' << p.label() << '\n';
  }
}

/// Header `h,max_adjacent_diff`.
inline void write_continuity_csv(std::ostream &os, const ContinuityStudy &c) {
  os << "h,max_adjacent_diff\n";
  for (std::size_t i = 0; i < c.h_values.size(); ++i) {
    os << format_number(c.h_values[i]) << ',' << format_number(c.max_diffs[i]) << '\n';
  }
}

inline json certificate_to_json(const Certificate &c) {
  return {{"passed", c.passed},
          {"tolerance", round_significant(c.tolerance)},
          {"stationarity_residual", round_significant(c.stationarity_residual)},
          {"eq_violation", round_significant(c.eq_violation)},
          {"box_violation", round_significant(c.box_violation)},
          {"state_violation", round_significant(c.state_violation)},
          {"slackness_residual", round_significant(c.slackness_residual)},
          {"dual_negativity", round_significant(c.dual_negativity)}};
}

inline json sweep_to_json(const ThetaRange &r) {
  json pts = json::array();
  for (const auto &p : r.per_theta) {
    json row = {{"theta", round_significant(p.theta)}, {"status", p.label()}};
    for (std::size_t m = 0; m < 3; ++m) {
      const std::string name(to_string(kAllMethods[m]));
      row["density_" + name] = round_significant(p.density[m]);
      row["status_" + name] = to_string(p.status[m]);
    }
    pts.push_back(row);
  }
  json j = {{"theta_max", round_significant(r.theta_max)},
            {"step", round_significant(r.step)},
            {"reached_infeasible", r.reached_infeasible},
            {"points", pts}};
  j["theta_min"] = std::isnan(r.theta_min) ? json(nullptr) : json(round_significant(r.theta_min));
  return j;
}

inline json continuity_to_json(const ContinuityStudy &c) {
  json rows = json::array();
  for (std::size_t i = 0; i < c.h_values.size(); ++i) {
    rows.push_back({{"h", round_significant(c.h_values[i])},
                    {"N", c.N_values[i]},
                    {"max_adjacent_diff", round_significant(c.max_diffs[i])}});
  }
  json j = {{"method", to_string(c.method)}, {"points", rows}};
  j["fitted_exponent"] = std::isnan(c.fitted_exponent)
                             ? json(nullptr)
                             : json(round_significant(c.fitted_exponent));
  return j;
}

} // namespace handsoff

#endif // HANDSOFF_IO_HPP
