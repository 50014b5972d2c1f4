#pragma once

// Plain CSV matrices (no header, '.' decimal, one row per line) and JSON
// views of solver and diagnostic results.

#include "lqframes/error.hpp"
#include "lqframes/qrip.hpp"
#include "lqframes/separation.hpp"
#include "lqframes/solvers.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lqframes {

namespace detail {

inline double parse_double(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw Error(ErrorKind::ParseError,
                "line " + std::to_string(line) + ": not a number: '" + std::string(field) + "'");
  return value;
}

}  // namespace detail

inline MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.push_back(detail::parse_double(
          std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                          : comma - start),
          lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": ragged row (" +
                                             std::to_string(row.size()) + " fields, expected " +
                                             std::to_string(rows.front().size()) + ")");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::ParseError, "empty matrix file");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  return read_matrix_csv(in);
}

/// A vector file is either one column or one row.
inline VectorXd read_vector_csv(const std::string& path) {
  const MatrixXd m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw Error(ErrorKind::ParseError, path + " is not a vector");
}

inline void write_matrix_csv(std::ostream& out, const MatrixXd& m) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

inline void write_matrix_csv(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path);
  write_matrix_csv(out, m);
}

inline std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline nlohmann::json to_json(const SolverResult& r) {
  return {
      {"f_hat", to_std(r.f_hat)},
      {"iterations", r.iterations},
      {"converged", r.converged},
      {"objective_trace", r.objective_trace},
      {"residual_trace", r.residual_trace},
  };
}

inline nlohmann::json to_json(const RecoveryConditionVerdict& v) {
  return {{"lhs", v.lhs}, {"rhs", v.rhs}, {"holds", v.holds}, {"theta", v.theta}, {"Delta", v.Delta}};
}

/// {order, q, delta, method, trials[, condition]}
inline nlohmann::json to_json(const QRipReport& r,
                              const std::optional<RecoveryConditionVerdict>& condition = {}) {
  nlohmann::json j = {
      {"order", r.order},
      {"q", r.q},
      {"delta", r.delta},
      {"method", to_string(r.method)},
      {"trials", r.trials},
  };
  if (r.at_least_one()) j["delta_flag"] = ">=1";
  if (condition) j["condition"] = to_json(*condition);
  return j;
}

inline nlohmann::json to_json(const SeparationVerdict& v) {
  return {
      {"mu1", v.mu1},
      {"U", v.U},
      {"theta_tilde", v.theta_tilde ? nlohmann::json(*v.theta_tilde) : nlohmann::json(nullptr)},
      {"thm3_holds", v.thm3_holds},
      {"thm4_holds", v.thm4_condition_holds},
  };
}

}  // namespace lqframes
