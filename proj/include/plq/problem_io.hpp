#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plq/errors.hpp"
#include "plq/problem.hpp"

namespace plq {

namespace detail {

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ConfigError(where + ": expected a non-empty array");
  // A flat list of numbers is accepted as a column vector.
  if (j[0].is_number()) {
    Eigen::MatrixXd m(j.size(), 1);
    for (size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw ConfigError(where + ": mixed row/scalar entries");
      m(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
    }
    return m;
  }
  size_t rows = j.size(), cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError(where + ": ragged matrix rows");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// Coefficient spec from its JSON form:
///   {"constant": [[...]]}
///   {"fourier": {"const": [[...]], "terms": [{"freq": int, "cos": [[...]], "sin": [[...]]}]}}
///   {"builtin": "name"}
inline CoefficientSpec spec_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": coefficient spec must be an object");
  if (j.contains("constant")) return CoefficientSpec::constant(detail::matrix_from_json(j["constant"], where));
  if (j.contains("builtin")) {
    if (!j["builtin"].is_string()) throw ConfigError(where + ": builtin name must be a string");
    return CoefficientSpec::builtin(j["builtin"].get<std::string>());
  }
  if (j.contains("fourier")) {
    const auto& f = j["fourier"];
    Eigen::MatrixXd const_term = detail::matrix_from_json(f.at("const"), where + ".const");
    std::vector<FourierTerm> terms;
    if (f.contains("terms")) {
      for (const auto& tj : f["terms"]) {
        if (!tj.contains("freq") || !tj["freq"].is_number_integer())
          throw ConfigError(where + ": Fourier freq must be an integer multiple of 2*pi/theta");
        FourierTerm term;
        term.freq = tj["freq"].get<int>();
        term.cos_coef = tj.contains("cos") ? detail::matrix_from_json(tj["cos"], where + ".cos")
                                           : Eigen::MatrixXd::Zero(const_term.rows(), const_term.cols()).eval();
        term.sin_coef = tj.contains("sin") ? detail::matrix_from_json(tj["sin"], where + ".sin")
                                           : Eigen::MatrixXd::Zero(const_term.rows(), const_term.cols()).eval();
        terms.push_back(std::move(term));
      }
    }
    return CoefficientSpec::fourier(std::move(const_term), std::move(terms));
  }
  throw ConfigError(where + ": spec must contain 'constant', 'fourier', or 'builtin'");
}

inline nlohmann::json spec_to_json(const CoefficientSpec& s) {
  switch (s.kind()) {
    case CoefficientSpec::Kind::Constant:
      return {{"constant", detail::matrix_to_json(s.constant_value())}};
    case CoefficientSpec::Kind::Builtin:
      return {{"builtin", s.builtin_name()}};
    case CoefficientSpec::Kind::Fourier: {
      nlohmann::json terms = nlohmann::json::array();
      for (const auto& t : s.fourier_terms())
        terms.push_back({{"freq", t.freq},
                         {"cos", detail::matrix_to_json(t.cos_coef)},
                         {"sin", detail::matrix_to_json(t.sin_coef)}});
      return {{"fourier", {{"const", detail::matrix_to_json(s.fourier_const())}, {"terms", terms}}}};
    }
  }
  throw ConfigError("spec_to_json: invalid kind");
}

inline PeriodicProblem problem_from_json(const nlohmann::json& j) {
  try {
    return PeriodicProblem(j.at("n").get<int>(), j.at("m").get<int>(), j.at("k").get<int>(),
                           j.at("theta").get<double>(), spec_from_json(j.at("A"), "A"),
                           spec_from_json(j.at("B"), "B"), spec_from_json(j.at("C"), "C"),
                           spec_from_json(j.at("Q"), "Q"), spec_from_json(j.at("y_d"), "y_d"),
                           spec_from_json(j.at("u_d"), "u_d"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("problem file: ") + e.what());
  }
}

inline nlohmann::json problem_to_json(const PeriodicProblem& p) {
  return {{"theta", p.theta()}, {"n", p.n()}, {"m", p.m()}, {"k", p.k()},
          {"A", spec_to_json(p.A_spec())}, {"B", spec_to_json(p.B_spec())},
          {"C", spec_to_json(p.C_spec())}, {"Q", spec_to_json(p.Q_spec())},
          {"y_d", spec_to_json(p.y_d_spec())}, {"u_d", spec_to_json(p.u_d_spec())}};
}

inline PeriodicProblem load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("problem file '" + path + "': " + e.what());
  }
  return problem_from_json(j);
}

/// Resolves a CLI/scenario problem reference: an existing file path is
/// loaded as JSON, otherwise the name must be a builtin.
inline PeriodicProblem resolve_problem(const std::string& ref) {
  if (std::filesystem::exists(ref)) return load_problem_file(ref);
  return builtin_problem(ref);
}

}  // namespace plq
