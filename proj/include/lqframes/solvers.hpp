#pragma once

// Reweighted solvers for
//     min ||D* f||_q^q   subject to   ||A f - y||_r <= eps
// IRLS replaces the objective by sum_i w_i <d_i,f>^2, IRL1 by sum_i w_i |<d_i,f>|.

#include "lqframes/error.hpp"
#include "lqframes/frames.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace lqframes {

enum class NormIndex { Two, Infinity };

struct LqProblem {
  MatrixXd A;
  VectorXd y;
  Frame dict;
  double q = 1.0;
  double epsilon = 0.0;
  NormIndex r = NormIndex::Two;
};

/// Smoothing sequence sigma_j = max(initial * decay^j, floor).
struct SigmaSchedule {
  double initial = 1.0;
  double decay = 0.9;
  double floor = 1e-10;

  double at(int j) const { return std::max(initial * std::pow(decay, j), floor); }
};

struct InnerConfig {
  int max_iters = 5000;
  double tol = 1e-8;     // primal residual, or duality gap of the polished vertex
  double penalty = 1.0;  // ADMM penalty
};

struct SolverConfig {
  int max_outer_iters = 500;
  double tol = 1e-8;
  SigmaSchedule sigma;
  InnerConfig inner;
  // IRL1 stops only once sigma has dropped below this; its iterates sit on
  // vertices and can repeat exactly while sigma is still large
  double irl1_sigma_stop = 1e-4;
};

struct SolverResult {
  VectorXd f_hat;
  int iterations = 0;
  std::vector<double> objective_trace;  // ||D* f^j||_q^q
  std::vector<double> residual_trace;   // ||A f^j - y||_r
  bool converged = false;
  // smoothed surrogate sum_i (<d_i,f>^2 + sigma_j)^{q/2} at f^j and f^{j+1}, same sigma_j (IRLS only)
  std::vector<double> surrogate_before;
  std::vector<double> surrogate_after;
};

/// ||D* f||_q^q (the q-th power, not the quasi-norm).
inline double objective(const VectorXd& f, const MatrixXd& d, double q) {
  return lq_pow(d.transpose() * f, q);
}

inline double residual_norm(const VectorXd& v, NormIndex r) {
  return r == NormIndex::Two ? v.norm() : (v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
}

inline double smoothed_surrogate(const VectorXd& coeffs, double sigma, double q) {
  return (coeffs.array().square() + sigma).pow(q / 2.0).sum();
}

namespace detail {

/// Parametrization of {f : Af = y} as f0 + N z with f0 the least-norm solution
/// and N an orthonormal basis of ker A. Every iterate built from it is feasible
/// to rounding error.
struct AffineFeasibleSet {
  VectorXd f0;
  MatrixXd kernel;

  AffineFeasibleSet(const MatrixXd& a, const VectorXd& y) {
    if (a.rows() > a.cols())
      throw Error(ErrorKind::InfeasibleOrDegenerate, "more measurements than unknowns");
    Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Index m = a.rows();
    if (m > 0 && !(sv(m - 1) > 1e-12 * sv(0)))
      throw Error(ErrorKind::InfeasibleOrDegenerate, "A is row-rank deficient");
    const MatrixXd v = svd.matrixV();
    f0 = v.leftCols(m) * (sv.cwiseInverse().asDiagonal() * (svd.matrixU().transpose() * y));
    kernel = v.rightCols(a.cols() - m);
  }
};

inline void check_problem(const LqProblem& p) {
  if (p.A.cols() != p.dict.ambient_dim() || p.A.rows() != p.y.size())
    throw Error(ErrorKind::InvalidDimensions, "A, y and D have inconsistent shapes");
  if (!(p.q > 0.0 && p.q <= 1.0)) throw Error(ErrorKind::InvalidParameters, "q must lie in (0,1]");
  if (p.epsilon < 0.0) throw Error(ErrorKind::InvalidParameters, "epsilon must be >= 0");
}

/// min sum_i w_i <d_i,f>^2 + lambda ||Af - y||^2, lambda raised until the
/// residual meets epsilon; falls back to the equality-constrained point.
inline VectorXd penalized_weighted_ls(const LqProblem& p, const VectorXd& w,
                                      const VectorXd& fallback) {
  const MatrixXd& d = p.dict.matrix();
  const MatrixXd m = d * w.asDiagonal() * d.transpose();
  const MatrixXd ata = p.A.transpose() * p.A;
  const VectorXd aty = p.A.transpose() * p.y;
  const double scale = m.diagonal().mean() / std::max(ata.diagonal().mean(), 1e-300);
  for (double lambda = scale; lambda <= scale * 1e16; lambda *= 10.0) {
    Eigen::LDLT<MatrixXd> ldlt(m + lambda * ata);
    VectorXd f = ldlt.solve(lambda * aty);
    if (residual_norm(p.A * f - p.y, p.r) <= p.epsilon) return f;
  }
  return fallback;
}

inline void record(SolverResult& res, const LqProblem& p, const VectorXd& f) {
  res.objective_trace.push_back(objective(f, p.dict.matrix(), p.q));
  res.residual_trace.push_back(residual_norm(p.A * f - p.y, p.r));
}

inline double relative_change(const VectorXd& next, const VectorXd& prev) {
  return (next - prev).norm() / std::max(prev.norm(), 1.0);
}

}  // namespace detail

/// Iteratively reweighted least squares with w_i = (<d_i,f>^2 + sigma_j)^{q/2-1}.
inline SolverResult irls_analysis(const LqProblem& problem, const SolverConfig& config = {}) {
  detail::check_problem(problem);
  const MatrixXd& d = problem.dict.matrix();
  const detail::AffineFeasibleSet feasible(problem.A, problem.y);
  const MatrixXd b = d.transpose() * feasible.kernel;  // D* N
  const VectorXd c0 = d.transpose() * feasible.f0;     // D* f0
  const bool noisy = problem.epsilon > 0.0;

  SolverResult res;
  VectorXd f = feasible.f0;
  VectorXd coeffs = c0;
  for (int j = 0; j < config.max_outer_iters; ++j) {
    const double sigma = config.sigma.at(j);
    const VectorXd w = (coeffs.array().square() + sigma).pow(problem.q / 2.0 - 1.0);

    VectorXd next = feasible.f0;
    if (b.cols() > 0) {
      const MatrixXd h = b.transpose() * w.asDiagonal() * b;
      const VectorXd g = b.transpose() * w.cwiseProduct(c0);
      next.noalias() -= feasible.kernel * h.ldlt().solve(g);
    }
    if (noisy) next = detail::penalized_weighted_ls(problem, w, next);

    const VectorXd next_coeffs = d.transpose() * next;
    res.surrogate_before.push_back(smoothed_surrogate(coeffs, sigma, problem.q));
    res.surrogate_after.push_back(smoothed_surrogate(next_coeffs, sigma, problem.q));
    detail::record(res, problem, next);
    ++res.iterations;

    const double change = detail::relative_change(next, f);
    f = std::move(next);
    coeffs = next_coeffs;
    if (change < config.tol) {
      res.converged = true;
      break;
    }
  }
  res.f_hat = std::move(f);
  return res;
}

namespace detail {

struct AdmmState {
  VectorXd z;       // kernel coordinates, f = f0 + N z
  VectorXd u;       // split variable, u ~ D* f
  VectorXd dual;    // scaled dual
  double penalty = 1.0;
};

inline double weighted_l1(const VectorXd& x, const VectorXd& w) { return w.dot(x.cwiseAbs()); }

/// Lower bound on min_z sum_i w_i |c0_i + (B z)_i| from any lambda: project onto
/// ker B^T, scale into the box |lambda_i| <= w_i, and return c0^T lambda.
inline double dual_bound(const MatrixXd& b, const VectorXd& c0, const Eigen::LLT<MatrixXd>& btb,
                         const VectorXd& w, VectorXd lambda) {
  if (b.cols() > 0) lambda -= b * btb.solve(b.transpose() * lambda);
  double scale = 1.0;
  for (Index i = 0; i < lambda.size(); ++i)
    if (std::abs(lambda(i)) > w(i)) scale = std::min(scale, w(i) / std::abs(lambda(i)));
  return scale * c0.dot(lambda);
}

/// Candidate vertex from an approximate iterate x = c0 + B z: the `count`
/// entries of x closest to zero are forced to zero by least squares.
inline VectorXd vertex_candidate(const MatrixXd& b, const VectorXd& c0,
                                 const std::vector<Index>& order, Index count,
                                 std::vector<Index>& zero) {
  zero.assign(order.begin(), order.begin() + count);
  MatrixXd bz(count, b.cols());
  VectorXd cz(count);
  for (Index r = 0; r < count; ++r) {
    bz.row(r) = b.row(zero[static_cast<std::size_t>(r)]);
    cz(r) = c0(zero[static_cast<std::size_t>(r)]);
  }
  return bz.colPivHouseholderQr().solve(-cz);
}

/// Dual candidate for a vertex with zero set Z: lambda = w o sign(x) off Z, and
/// on Z the point closest to `guess` with B^T lambda = 0.
inline VectorXd vertex_dual(const MatrixXd& b, const VectorXd& x, const VectorXd& w,
                            const std::vector<Index>& zero, const VectorXd& guess) {
  VectorXd lambda = (w.array() * x.array().sign()).matrix();
  const Index nz = static_cast<Index>(zero.size());
  MatrixXd bz(nz, b.cols());
  VectorXd gz(nz);
  for (Index r = 0; r < nz; ++r) {
    const Index i = zero[static_cast<std::size_t>(r)];
    bz.row(r) = b.row(i);
    gz(r) = guess(i);
    lambda(i) = 0.0;
  }
  const VectorXd target = -(b.transpose() * lambda);
  VectorXd wz(nz);
  for (Index r = 0; r < nz; ++r) wz(r) = w(zero[static_cast<std::size_t>(r)]);
  // alternate between {bz^T l = target} and the box |l| <= w_Z
  const Eigen::LDLT<MatrixXd> gram(bz.transpose() * bz);
  VectorXd lz = gz;
  for (int pass = 0; pass < 50; ++pass) {
    lz += bz * gram.solve(target - bz.transpose() * lz);
    if ((lz.array().abs() <= wz.array()).all()) break;
    if (pass + 1 < 50) lz = lz.cwiseMax(-wz).cwiseMin(wz);
  }
  for (Index r = 0; r < nz; ++r) lambda(zero[static_cast<std::size_t>(r)]) = lz(r);
  return lambda;
}

/// min sum_i w_i |u_i| s.t. u = D*(f0 + N z), by over-relaxed ADMM. Stops when
/// a polished vertex has relative duality gap below tol, or when the primal
/// and dual residuals do.
inline bool weighted_l1_admm(const MatrixXd& b, const VectorXd& c0, const Eigen::LLT<MatrixXd>& btb,
                             const VectorXd& w, const InnerConfig& cfg, AdmmState& st) {
  constexpr double relax = 1.6;
  constexpr int check_every = 10;
  const Index dim = c0.size();
  const bool has_kernel = b.cols() > 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (has_kernel) st.z = btb.solve(b.transpose() * (st.u - st.dual - c0));
    const VectorXd x = c0 + b * st.z;
    const VectorXd xr = relax * x + (1.0 - relax) * st.u;
    const VectorXd v = xr + st.dual;
    const VectorXd u_prev = st.u;
    for (Index i = 0; i < dim; ++i) {
      const double a = std::abs(v(i)) - w(i) / st.penalty;
      st.u(i) = a > 0.0 ? std::copysign(a, v(i)) : 0.0;
    }
    st.dual += xr - st.u;

    if (it % check_every != check_every - 1) continue;
    if (!has_kernel) return true;
    // two zero sets: exactly k entries (simple vertex) and every entry that is
    // numerically zero (degenerate vertex)
    std::vector<Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return std::abs(x(i)) < std::abs(x(j)); });
    // the wide set ends at the largest relative jump in |x| past the k-th entry
    const auto mag = [&](Index r) { return std::abs(x(order[static_cast<std::size_t>(r)])); };
    Index wide = b.cols();
    double best_jump = 0.0;
    for (Index r = b.cols(); r < dim; ++r) {
      const double jump = mag(r) / std::max(mag(r - 1), 1e-300);
      if (jump > best_jump) {
        best_jump = jump;
        wide = r;
      }
    }
    std::vector<Index> counts{b.cols()};
    if (wide > b.cols()) counts.push_back(wide);
    for (Index count : counts) {
      std::vector<Index> zero;
      const VectorXd z = vertex_candidate(b, c0, order, count, zero);
      const VectorXd xv = c0 + b * z;
      const double primal = weighted_l1(xv, w);
      const double lower =
          dual_bound(b, c0, btb, w, vertex_dual(b, xv, w, zero, st.penalty * st.dual));
      if (primal - lower <= cfg.tol * std::max(primal, 1e-300)) {
        st.z = z;
        return true;
      }
    }
    const double rn = (x - st.u).norm() / std::max({x.norm(), st.u.norm(), 1e-12});
    const double sn = (b.transpose() * (st.u - u_prev)).norm() /
                      std::max((b.transpose() * st.dual).norm(), 1e-12);
    if (rn <= cfg.tol && sn <= cfg.tol) return true;
  }
  return false;
}

}  // namespace detail

/// Iteratively reweighted l1 with w_i = (|<d_i,f>| + sigma_j)^{q-1}; each
/// weighted l1-analysis subproblem is solved by ADMM on the split u = D* f.
/// The first subproblem is unweighted, so q = 1 gives plain l1-analysis.
inline SolverResult irl1_analysis(const LqProblem& problem, const SolverConfig& config = {}) {
  detail::check_problem(problem);
  if (problem.epsilon > 0.0)
    throw Error(ErrorKind::InvalidParameters, "irl1_analysis supports the equality path only");
  const MatrixXd& d = problem.dict.matrix();
  const detail::AffineFeasibleSet feasible(problem.A, problem.y);
  const MatrixXd b = d.transpose() * feasible.kernel;
  const VectorXd c0 = d.transpose() * feasible.f0;
  const Eigen::LLT<MatrixXd> btb(b.transpose() * b);

  SolverResult res;
  res.converged = true;
  detail::AdmmState st;
  st.z = VectorXd::Zero(b.cols());
  st.u = c0;
  st.dual = VectorXd::Zero(c0.size());
  st.penalty = config.inner.penalty;

  VectorXd f = feasible.f0;
  VectorXd coeffs = c0;
  bool inner_ok = true;
  for (int j = 0; j < config.max_outer_iters; ++j) {
    const double sigma = config.sigma.at(j);
    VectorXd w = VectorXd::Ones(coeffs.size());
    if (j > 0) {
      w = (coeffs.array().abs() + sigma).pow(problem.q - 1.0);
      w /= w.mean();  // the minimizer is invariant to scaling w
    }

    inner_ok = detail::weighted_l1_admm(b, c0, btb, w, config.inner, st) && inner_ok;
    VectorXd next = feasible.f0 + feasible.kernel * st.z;
    detail::record(res, problem, next);
    ++res.iterations;

    const double change = detail::relative_change(next, f);
    f = std::move(next);
    coeffs = d.transpose() * f;
    const bool singleton = b.cols() == 0;
    if (singleton || problem.q == 1.0 || (change < config.tol && sigma <= config.irl1_sigma_stop))
      break;
    if (j + 1 == config.max_outer_iters) res.converged = false;
  }
  res.converged = res.converged && inner_ok;
  res.f_hat = std::move(f);
  return res;
}

}  // namespace lqframes
