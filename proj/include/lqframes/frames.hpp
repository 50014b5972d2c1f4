#pragma once

// Frame-theoretic linear algebra: bounds, canonical duals, coherence,
// hard thresholding and cosparse test signals.

#include "lqframes/error.hpp"
#include "lqframes/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace lqframes {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// sum_i |x_i|^q, i.e. the q-th power of the l_q quasi-norm.
inline double lq_pow(const Eigen::Ref<const VectorXd>& x, double q) {
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x(i)), q);
  return acc;
}

inline double lq_norm(const Eigen::Ref<const VectorXd>& x, double q) {
  return std::pow(lq_pow(x, q), 1.0 / q);
}

struct FrameBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Relative eigenvalue floor below which DD* is treated as singular.
inline constexpr double kRankTolerance = 1e-12;

/// Optimal frame bounds: the extreme eigenvalues of DD* (n x n).
inline FrameBounds frame_bounds(const MatrixXd& matrix) {
  const Index n = matrix.rows();
  if (n == 0 || matrix.cols() < n)
    throw Error(ErrorKind::NotAFrame, "need at least as many atoms as the ambient dimension (" +
                                          std::to_string(matrix.cols()) + " < " +
                                          std::to_string(n) + ")");
  const MatrixXd gram = matrix * matrix.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(n - 1);
  if (!(hi > 0.0) || lo <= kRankTolerance * hi)
    throw Error(ErrorKind::NotAFrame, "matrix does not have full row rank");
  return {lo, hi};
}

/// A dictionary whose columns span R^n, with its optimal bounds cached.
class Frame {
 public:
  explicit Frame(MatrixXd matrix) : matrix_(std::move(matrix)), bounds_(frame_bounds(matrix_)) {}

  const MatrixXd& matrix() const noexcept { return matrix_; }
  Index ambient_dim() const noexcept { return matrix_.rows(); }
  Index size() const noexcept { return matrix_.cols(); }

  double lower_bound() const noexcept { return bounds_.lower; }
  double upper_bound() const noexcept { return bounds_.upper; }
  double condition() const noexcept { return bounds_.upper / bounds_.lower; }

  /// Analysis coefficients D* f.
  VectorXd analyze(const Eigen::Ref<const VectorXd>& f) const { return matrix_.transpose() * f; }

  bool is_tight(double tol = 1e-8) const {
    return std::abs(bounds_.upper - bounds_.lower) <= tol * bounds_.upper;
  }

 private:
  MatrixXd matrix_;
  FrameBounds bounds_;
};

/// D^dagger = (DD*)^{-1} D. Its bounds are (1/U, 1/L).
inline Frame canonical_dual(const Frame& frame, double condition_cap = 1e12) {
  if (frame.condition() > condition_cap)
    throw Error(ErrorKind::IllConditioned,
                "DD* condition number " + std::to_string(frame.condition()) + " exceeds cap");
  const MatrixXd& d = frame.matrix();
  const MatrixXd gram = d * d.transpose();
  return Frame(gram.llt().solve(d));
}

/// Gaussian n x d matrix with orthonormalized rows, so DD* = I.
inline Frame random_tight_frame(Index n, Index d, std::uint64_t seed) {
  if (n <= 0 || n > d)
    throw Error(ErrorKind::InvalidDimensions,
                "random_tight_frame needs 0 < n <= d, got n=" + std::to_string(n) +
                    " d=" + std::to_string(d));
  Rng rng(seed);
  const MatrixXd g = gaussian_matrix(d, n, rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, n);
  // fix the sign ambiguity of QR so the result is a function of g alone
  const MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return Frame(q.transpose());
}

inline Frame identity_frame(Index n) { return Frame(MatrixXd::Identity(n, n)); }

/// Sylvester Hadamard matrix scaled by 1/sqrt(n); n must be a power of two.
inline Frame hadamard_frame(Index n) {
  if (n <= 0 || (n & (n - 1)) != 0)
    throw Error(ErrorKind::InvalidDimensions,
                "Hadamard dictionary needs n a power of two, got " + std::to_string(n));
  MatrixXd h = MatrixXd::Ones(1, 1);
  while (h.rows() < n) {
    const Index k = h.rows();
    MatrixXd next(2 * k, 2 * k);
    next << h, h, h, -h;
    h = std::move(next);
  }
  return Frame(h / std::sqrt(static_cast<double>(n)));
}

/// max over distinct dictionary pairs of the largest |<d_ki, d_lj>|.
inline double mutual_coherence(std::span<const MatrixXd> dicts) {
  if (dicts.size() < 2)
    throw Error(ErrorKind::InvalidParameters, "mutual coherence needs at least two dictionaries");
  const Index n = dicts.front().rows();
  for (const auto& d : dicts)
    if (d.rows() != n)
      throw Error(ErrorKind::InvalidDimensions, "dictionaries live in different ambient spaces");
  double mu = 0.0;
  for (std::size_t k = 0; k < dicts.size(); ++k)
    for (std::size_t l = k + 1; l < dicts.size(); ++l)
      mu = std::max(mu, (dicts[k].transpose() * dicts[l]).cwiseAbs().maxCoeff());
  return mu;
}

inline double mutual_coherence(std::span<const Frame> dicts) {
  std::vector<MatrixXd> mats;
  mats.reserve(dicts.size());
  for (const auto& f : dicts) mats.push_back(f.matrix());
  return mutual_coherence(std::span<const MatrixXd>(mats));
}

/// Best s-term approximation x_[s].
struct SparseApproximation {
  std::vector<Index> support;  // ascending
  VectorXd values;             // x restricted to support, same order
  double residual_q_norm = 0.0;

  VectorXd dense(Index size) const {
    VectorXd out = VectorXd::Zero(size);
    for (std::size_t i = 0; i < support.size(); ++i)
      out(support[i]) = values(static_cast<Index>(i));
    return out;
  }
};

/// Keeps the s largest-magnitude entries; ties go to the lower index.
/// residual_q_norm = ||x - x_[s]||_q.
inline SparseApproximation hard_threshold(const VectorXd& x, Index s, double q = 1.0) {
  const Index d = x.size();
  if (s < 0 || s > d)
    throw Error(ErrorKind::InvalidParameters, "hard_threshold needs 0 <= s <= d");
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(x(a)) > std::abs(x(b)); });

  SparseApproximation out;
  out.support.assign(order.begin(), order.begin() + s);
  std::sort(out.support.begin(), out.support.end());
  out.values.resize(s);
  for (Index i = 0; i < s; ++i) out.values(i) = x(out.support[static_cast<std::size_t>(i)]);

  double tail = 0.0;
  for (Index i = s; i < d; ++i) tail += std::pow(std::abs(x(order[static_cast<std::size_t>(i)])), q);
  out.residual_q_norm = std::pow(tail, 1.0 / q);
  return out;
}

struct CosparseSignal {
  VectorXd signal;                // unit l2 norm
  VectorXd coefficients;          // D* signal
  std::vector<Index> cosupport;   // rows of D* forced to zero
};

/// Orthonormal basis of the null space of `rows` (as columns), via SVD.
inline MatrixXd null_space(const MatrixXd& rows, double rel_tol = 1e-10) {
  const Index n = rows.cols();
  if (rows.rows() == 0) return MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<MatrixXd> svd(rows, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = rel_tol * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

/// Random signal with at most s nonzero analysis coefficients: a Gaussian vector
/// projected onto null(D_Lambda*) for a random cosupport |Lambda| = d - s.
inline CosparseSignal cosparse_signal(const Frame& frame, Index s, std::uint64_t seed,
                                      int max_attempts = 32) {
  const Index n = frame.ambient_dim();
  const Index d = frame.size();
  if (s < 0 || s > d) throw Error(ErrorKind::InvalidParameters, "cosparse_signal needs 0 <= s <= d");
  Rng rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Index> cosupport = random_subset(d, d - s, rng);
    MatrixXd rows(static_cast<Index>(cosupport.size()), n);
    for (std::size_t i = 0; i < cosupport.size(); ++i)
      rows.row(static_cast<Index>(i)) = frame.matrix().col(cosupport[i]).transpose();
    const MatrixXd basis = null_space(rows);
    VectorXd g = gaussian_vector(n, rng);
    if (basis.cols() == 0) continue;
    VectorXd f = basis * (basis.transpose() * g);
    const double norm = f.norm();
    if (norm < 1e-12) continue;
    f /= norm;
    CosparseSignal out;
    out.coefficients = frame.analyze(f);
    out.signal = std::move(f);
    out.cosupport = std::move(cosupport);
    return out;
  }
  throw Error(ErrorKind::GenerationFailed,
              "null(D_Lambda*) trivial in every attempt (s=" + std::to_string(s) +
                  ", d-n=" + std::to_string(d - n) + "); generic frames need s > d - n");
}

struct PlantedInstance {
  Frame frame;
  CosparseSignal signal;
};

/// Random tight frame rotated so that a random unit signal has exactly s nonzero
/// analysis coefficients. Covers s <= d - n, where generic frames admit no
/// cosparse signals at all.
inline PlantedInstance planted_cosparse_instance(Index n, Index d, Index s, std::uint64_t seed) {
  if (s <= 0 || s > d) throw Error(ErrorKind::InvalidParameters, "planted instance needs 0 < s <= d");
  Rng rng(derive_seed(seed, {0x706c616eULL}));
  const Frame base = random_tight_frame(n, d, derive_seed(seed, {1}));
  VectorXd f = gaussian_vector(n, rng);
  f.normalize();
  const VectorXd u = base.analyze(f);  // unit, since DD* = I

  const std::vector<Index> support = random_subset(d, s, rng);
  VectorXd c = VectorXd::Zero(d);
  for (Index i : support) c(i) = std::normal_distribution<double>(0.0, 1.0)(rng);
  c.normalize();

  // Householder reflection G with G u = c; D := D0 G keeps DD* = I.
  VectorXd w = u - c;
  MatrixXd rotated = base.matrix();
  if (w.norm() > 1e-14) {
    w.normalize();
    rotated -= 2.0 * (rotated * w) * w.transpose();
  }
  Frame frame(std::move(rotated));

  CosparseSignal sig;
  sig.coefficients = frame.analyze(f);
  sig.signal = std::move(f);
  for (Index i = 0; i < d; ++i)
    if (c(i) == 0.0) sig.cosupport.push_back(i);
  return {std::move(frame), std::move(sig)};
}

}  // namespace lqframes
