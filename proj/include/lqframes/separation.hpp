#pragma once

// Compressed data separation: y = A(f_1 + ... + f_iota) with each f_k
// analysis-sparse in its own tight frame D_k.

#include "lqframes/error.hpp"
#include "lqframes/frames.hpp"
#include "lqframes/qrip.hpp"
#include "lqframes/solvers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lqframes {

struct StackedOperators {
  MatrixXd dbar;  // [D_1 | ... | D_iota], n x sum d_k
  MatrixXd psi;   // blockdiag(D_1, ..., D_iota), iota n x sum d_k
};

inline StackedOperators build_stacked(std::span<const MatrixXd> dicts) {
  if (dicts.empty()) throw Error(ErrorKind::InvalidParameters, "no dictionaries");
  const Index n = dicts.front().rows();
  Index total = 0;
  for (const auto& d : dicts) {
    if (d.rows() != n)
      throw Error(ErrorKind::InvalidDimensions, "dictionaries live in different ambient spaces");
    total += d.cols();
  }
  const Index iota = static_cast<Index>(dicts.size());
  StackedOperators out{MatrixXd(n, total), MatrixXd::Zero(iota * n, total)};
  Index col = 0;
  for (Index k = 0; k < iota; ++k) {
    const auto& d = dicts[static_cast<std::size_t>(k)];
    out.dbar.middleCols(col, d.cols()) = d;
    out.psi.block(k * n, col, n, d.cols()) = d;
    col += d.cols();
  }
  return out;
}

inline StackedOperators build_stacked(std::span<const Frame> dicts) {
  std::vector<MatrixXd> mats;
  for (const auto& f : dicts) mats.push_back(f.matrix());
  return build_stacked(std::span<const MatrixXd>(mats));
}

/// [A | A | ... | A], so that stacked_measurement(A) * [f_1; ...; f_iota] = A sum_k f_k.
inline MatrixXd stacked_measurement(const MatrixXd& a, Index iota) {
  MatrixXd out(a.rows(), a.cols() * iota);
  for (Index k = 0; k < iota; ++k) out.middleCols(k * a.cols(), a.cols()) = a;
  return out;
}

struct SeparationProblem {
  std::vector<Frame> dicts;  // each tight with bound 1
  MatrixXd A;
  VectorXd y;
  double q = 1.0;
  double epsilon = 0.0;
  NormIndex r = NormIndex::Two;
};

struct SeparationResult {
  std::vector<VectorXd> components;
  SolverResult solver;
};

inline void require_unit_tight(std::span<const Frame> dicts, double tol = 1e-8) {
  for (std::size_t k = 0; k < dicts.size(); ++k) {
    const auto& f = dicts[k];
    if (std::abs(f.lower_bound() - 1.0) > tol || std::abs(f.upper_bound() - 1.0) > tol)
      throw Error(ErrorKind::InvalidParameters,
                  "dictionary " + std::to_string(k) + " is not a tight frame with bound 1");
  }
}

/// min sum_k ||D_k* f_k||_q^q  s.t.  A sum_k f_k = y, through IRLS on the
/// stacked problem (dictionary Psi, measurement [A|...|A]).
inline SeparationResult solve_split_analysis(const SeparationProblem& problem,
                                             const SolverConfig& config = {}) {
  if (problem.dicts.empty()) throw Error(ErrorKind::InvalidParameters, "no dictionaries");
  require_unit_tight(problem.dicts);
  const Index n = problem.dicts.front().ambient_dim();
  const Index iota = static_cast<Index>(problem.dicts.size());
  if (problem.A.cols() != n)
    throw Error(ErrorKind::InvalidDimensions, "A does not act on the dictionaries' space");

  LqProblem stacked{
      iota == 1 ? problem.A : stacked_measurement(problem.A, iota),
      problem.y,
      iota == 1 ? problem.dicts.front() : Frame(build_stacked(problem.dicts).psi),
      problem.q,
      problem.epsilon,
      problem.r,
  };
  SeparationResult out;
  out.solver = irls_analysis(stacked, config);
  for (Index k = 0; k < iota; ++k) out.components.push_back(out.solver.f_hat.segment(k * n, n));
  return out;
}

struct SeparationVerdict {
  double mu1 = 0.0;
  double U = 0.0;
  double Delta = 0.0;
  double rho = 0.0;
  std::optional<double> theta_tilde;  // empty when U >= 1
  double thm3_lhs = 0.0;
  bool thm3_holds = false;
  bool mipc_holds = false;             // mu1 (s+a)(rho^{2/q-1}+1) < 1
  bool rip_condition_holds = false;    // Delta rho^{1-q/2}(rho^{2/q-1}+1)^{q/2} < (2 iota)^{-q/2}
  bool thm4_condition_holds = false;   // both of the above
  bool combined_condition_holds = false;  // iota Delta^{2/q}(p+1)p + U(1+p) < 1, p = rho^{2/q-1}
};

/// theta_tilde = ((U + x + sqrt((U - x)^2 + 4x)) / (2(1-U)))^{q/2} rho^{1-q/2}, x = iota Delta^{2/q}.
inline std::optional<double> separation_theta(double U, double Delta, double rho, double q,
                                              Index iota) {
  if (U >= 1.0) return std::nullopt;
  const double x = static_cast<double>(iota) * std::pow(Delta, 2.0 / q);
  const double inner = (U + x + std::sqrt((U - x) * (U - x) + 4.0 * x)) / (2.0 * (1.0 - U));
  return std::pow(inner, q / 2.0) * std::pow(rho, 1.0 - q / 2.0);
}

inline bool separation_combined_condition(double U, double Delta, double rho, double q,
                                          Index iota) {
  const double p = std::pow(rho, 2.0 / q - 1.0);
  return static_cast<double>(iota) * std::pow(Delta, 2.0 / q) * (p + 1.0) * p + U * (1.0 + p) < 1.0;
}

/// Coherence factor of the two-dictionary condition:
/// (ceil((2^{3q/2} 5)^{2/(2-q)}) + 1)(1/(8 5^{2/q}) + 1).
inline double separation_coherence_factor(double q) {
  const double t = ceil_exact(std::pow(std::pow(2.0, 1.5 * q) * 5.0, 2.0 / (2.0 - q)));
  return (t + 1.0) * (1.0 / (8.0 * std::pow(5.0, 2.0 / q)) + 1.0);
}

inline SeparationVerdict check_separation_conditions(double mu1, std::span<const Index> sparsities,
                                                     Index a, double delta_a, double delta_sa,
                                                     double q, Index iota) {
  const Index s = std::accumulate(sparsities.begin(), sparsities.end(), Index{0});
  if (mu1 < 0.0 || s <= 0 || a <= s || iota < 1 || !(q > 0.0 && q <= 1.0))
    throw Error(ErrorKind::InvalidParameters, "separation conditions: need mu1>=0, 0<s<a, 0<q<=1");
  if (delta_a < 0.0 || delta_a >= 1.0 || delta_sa < 0.0 || delta_sa >= 1.0)
    throw Error(ErrorKind::InvalidParameters, "RIP constants must lie in [0,1)");

  SeparationVerdict v;
  v.mu1 = mu1;
  v.rho = static_cast<double>(s) / static_cast<double>(a);
  v.Delta = (1.0 + delta_a) / (1.0 - delta_sa);
  v.U = mu1 * static_cast<double>(s + a) / 2.0;
  const double p = std::pow(v.rho, 2.0 / q - 1.0);

  v.thm3_lhs = mu1 * static_cast<double>(s) * separation_coherence_factor(q);
  v.thm3_holds = v.thm3_lhs < 1.0;
  v.mipc_holds = mu1 * static_cast<double>(s + a) * (p + 1.0) < 1.0;
  v.rip_condition_holds = v.Delta * std::pow(v.rho, 1.0 - q / 2.0) * std::pow(p + 1.0, q / 2.0) <
                          std::pow(2.0 * static_cast<double>(iota), -q / 2.0);
  v.thm4_condition_holds = v.mipc_holds && v.rip_condition_holds;
  v.combined_condition_holds = separation_combined_condition(v.U, v.Delta, v.rho, q, iota);
  v.theta_tilde = separation_theta(v.U, v.Delta, v.rho, q, iota);
  return v;
}

/// Measurement bound for the two-dictionary case: the single-frame formula with
/// the kappa-dependent base replaced by 5 * 2^{3q/2}.
inline MeasurementBound separation_measurement_bound_terms(double q, double s, double d_total) {
  return measurement_bound_from_base(q, s, d_total, 5.0 * std::pow(2.0, 1.5 * q));
}

inline double separation_measurement_bound(double q, double s, double d_total) {
  return separation_measurement_bound_terms(q, s, d_total).value;
}

}  // namespace lqframes
