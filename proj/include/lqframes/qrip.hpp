#pragma once

// Quantities around the restricted q-isometry property of A relative to a
// dictionary D:  (1-delta)||Dv||_2^q <= ||ADv||_q^q <= (1+delta)||Dv||_2^q
// for all s-sparse v. Estimators here return certified lower bounds on delta.

#include "lqframes/error.hpp"
#include "lqframes/frames.hpp"
#include "lqframes/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace lqframes {

// ---------------------------------------------------------------------------
// Gaussian moment constants

/// q-th absolute moment of N(0, sigma^2).
inline double varrho(double q, double sigma = 1.0) {
  return std::pow(sigma, q) * std::pow(2.0, q / 2.0) * std::tgamma((q + 1.0) / 2.0) /
         std::sqrt(std::numbers::pi);
}

/// Concentration constant for ||Ax||_q^q with Gaussian A.
inline double beta(double q) {
  const double g = std::tgamma((q + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
  return std::pow(31.0 / 40.0, 0.25) * (1.13 + std::sqrt(q) * std::pow(g, -1.0 / q));
}

// ---------------------------------------------------------------------------
// RIP estimation

enum class EstimationMode { Exhaustive, Sampled };

inline const char* to_string(EstimationMode m) {
  return m == EstimationMode::Exhaustive ? "exhaustive" : "sampled";
}

struct QRipOptions {
  EstimationMode mode = EstimationMode::Sampled;
  /// Exhaustive: random directions per support. Sampled: number of supports.
  std::size_t budget = 1000;
  std::uint64_t seed = 0;
  /// Random directions per support in sampled mode.
  std::size_t sampled_directions = 4;
  /// Upper limit on support-direction evaluations in exhaustive mode.
  double exhaustive_cap = 1e6;
};

struct QRipReport {
  Index order = 0;
  double q = 1.0;
  double delta = 0.0;  // lower bound on the true constant
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  EstimationMode method = EstimationMode::Sampled;
  std::size_t trials = 0;      // evaluated (support, direction) pairs
  std::size_t degenerate = 0;  // skipped pairs with Dv = 0

  /// The RIP-based theory needs delta < 1.
  bool at_least_one() const noexcept { return delta >= 1.0; }
};

namespace detail {

inline double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline std::uint64_t support_key(const std::vector<Index>& support) {
  std::uint64_t h = 0x5157524950ULL;
  for (Index i : support) h = splitmix64(h ^ static_cast<std::uint64_t>(i));
  return h;
}

/// Directions evaluated on one support: coordinate axes, the flat sign
/// pattern (1,...,1)/sqrt(s), and `random` Gaussian directions drawn from a
/// stream keyed on the support alone, so the set does not depend on the mode.
inline std::vector<VectorXd> support_directions(const std::vector<Index>& support,
                                                std::size_t random, std::uint64_t seed) {
  const Index s = static_cast<Index>(support.size());
  std::vector<VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(s) + 1 + random);
  for (Index i = 0; i < s; ++i) dirs.push_back(VectorXd::Unit(s, i));
  if (s > 1) dirs.push_back(VectorXd::Ones(s) / std::sqrt(static_cast<double>(s)));
  Rng rng(derive_seed(seed, {support_key(support)}));
  for (std::size_t k = 0; k < random; ++k) {
    VectorXd v = gaussian_vector(s, rng);
    const double nv = v.norm();
    if (nv > 0.0) dirs.push_back(v / nv);
  }
  return dirs;
}

struct RatioAccumulator {
  const MatrixXd& ad;  // A D
  const MatrixXd& d;
  double q;
  QRipReport& report;

  void evaluate(const std::vector<Index>& support, const std::vector<VectorXd>& dirs) {
    const Index n = d.rows();
    const Index m = ad.rows();
    for (const auto& v : dirs) {
      VectorXd dv = VectorXd::Zero(n);
      VectorXd adv = VectorXd::Zero(m);
      for (std::size_t k = 0; k < support.size(); ++k) {
        dv.noalias() += v(static_cast<Index>(k)) * d.col(support[k]);
        adv.noalias() += v(static_cast<Index>(k)) * ad.col(support[k]);
      }
      const double dn = dv.norm();
      if (dn <= 1e-13 * d.norm()) {
        ++report.degenerate;
        continue;
      }
      const double ratio = lq_pow(adv, q) / std::pow(dn, q);
      ++report.trials;
      report.min_ratio = std::min(report.min_ratio, ratio);
      report.max_ratio = std::max(report.max_ratio, ratio);
      report.delta = std::max(report.delta, std::abs(ratio - 1.0));
    }
  }
};

/// Advances `idx` to the next k-combination of {0..n-1}; false after the last.
inline bool next_combination(std::vector<Index>& idx, Index n) {
  const Index k = static_cast<Index>(idx.size());
  Index i = k - 1;
  while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++idx[static_cast<std::size_t>(i)];
  for (Index j = i + 1; j < k; ++j)
    idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

}  // namespace detail

/// Lower bound on the order-s (D,q)-RIP constant of A.
inline QRipReport estimate_qrip(const MatrixXd& a, const MatrixXd& d, double q, Index s,
                                const QRipOptions& opt = {}) {
  if (a.cols() != d.rows())
    throw Error(ErrorKind::InvalidDimensions, "A has " + std::to_string(a.cols()) +
                                                  " columns but D has " +
                                                  std::to_string(d.rows()) + " rows");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidParameters, "q must lie in (0,1]");
  const Index dim = d.cols();
  if (s <= 0 || s > dim) throw Error(ErrorKind::InvalidParameters, "order must satisfy 0 < s <= d");

  QRipReport report;
  report.order = s;
  report.q = q;
  report.method = opt.mode;
  const MatrixXd ad = a * d;
  detail::RatioAccumulator acc{ad, d, q, report};

  if (opt.mode == EstimationMode::Exhaustive) {
    const double per_support = static_cast<double>(s + (s > 1 ? 1 : 0)) +
                               static_cast<double>(opt.budget);
    const double log_work =
        detail::log_binomial(static_cast<double>(dim), static_cast<double>(s)) +
        std::log(per_support);
    if (log_work > std::log(opt.exhaustive_cap))
      throw Error(ErrorKind::InvalidParameters,
                  "exhaustive enumeration needs ~" + std::to_string(std::exp(log_work)) +
                      " evaluations, above the cap");
    std::vector<Index> support(static_cast<std::size_t>(s));
    for (Index i = 0; i < s; ++i) support[static_cast<std::size_t>(i)] = i;
    do {
      acc.evaluate(support, detail::support_directions(support, opt.budget, opt.seed));
    } while (detail::next_combination(support, dim));
  } else {
    Rng rng(derive_seed(opt.seed, {0x737570ULL}));
    for (std::size_t t = 0; t < opt.budget; ++t) {
      const auto support = random_subset(dim, s, rng);
      acc.evaluate(support, detail::support_directions(support, opt.sampled_directions, opt.seed));
    }
  }
  if (report.trials == 0)
    throw Error(ErrorKind::DegenerateDictionary, "every sampled Dv vanished");
  return report;
}

// ---------------------------------------------------------------------------
// Recovery condition for l_q analysis with a general frame

struct RecoveryConditionVerdict {
  double rho = 0.0;
  double kappa = 1.0;
  double Delta = 0.0;
  double theta = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// lhs = rho^{1-q/2} (rho^{2/q-1}+1)^{q/2} kappa^q (1+delta_a) against rhs = 1-delta_{s+a};
/// theta is the robust null-space constant implied by the same RIP data.
inline RecoveryConditionVerdict check_recovery_condition(double delta_a, double delta_sa, Index s,
                                                         Index a, double kappa, double q) {
  if (!(s > 0 && s < a)) throw Error(ErrorKind::InvalidParameters, "need 0 < s < a");
  if (!(q > 0.0 && q <= 1.0)) throw Error(ErrorKind::InvalidParameters, "q must lie in (0,1]");
  if (kappa < 1.0) throw Error(ErrorKind::InvalidParameters, "kappa must be >= 1");
  if (delta_a < 0.0 || delta_sa < 0.0)
    throw Error(ErrorKind::InvalidParameters, "RIP constants are nonnegative");
  if (delta_sa >= 1.0)
    throw Error(ErrorKind::ConditionUnevaluable, "delta_{s+a} >= 1");

  RecoveryConditionVerdict v;
  v.rho = static_cast<double>(s) / static_cast<double>(a);
  v.kappa = kappa;
  v.Delta = (1.0 + delta_a) / (1.0 - delta_sa);
  const double p = std::pow(v.rho, 2.0 / q - 1.0);
  v.lhs = std::pow(v.rho, 1.0 - q / 2.0) * std::pow(p + 1.0, q / 2.0) * std::pow(kappa, q) *
          (1.0 + delta_a);
  v.rhs = 1.0 - delta_sa;
  v.holds = v.lhs < v.rhs;
  const double inner = 1.0 + std::sqrt(1.0 + 4.0 / (kappa * kappa) * std::pow(v.Delta, -2.0 / q));
  v.theta = std::pow(2.0, -q / 2.0) * std::pow(inner, q / 2.0) * std::pow(kappa, q) * v.Delta *
            std::pow(v.rho, 1.0 - q / 2.0);
  return v;
}

struct ErrorConstants {
  double c1 = 0.0;  // multiplies the best s-term tail
  double c2 = 0.0;  // multiplies m^{1/q-1/r} epsilon
};

inline ErrorConstants error_constants(double theta, double rho, double q, double lower_bound,
                                      double delta_a) {
  if (!(theta < 1.0)) throw Error(ErrorKind::ConditionUnevaluable, "theta >= 1");
  if (theta < 0.0 || rho <= 0.0 || lower_bound <= 0.0 || !(q > 0.0 && q <= 1.0))
    throw Error(ErrorKind::InvalidParameters, "error_constants: parameters out of range");
  const double denom = std::pow(1.0 - theta, 1.0 / q);
  ErrorConstants c;
  c.c1 = std::pow(2.0 * theta + 2.0 * std::pow(rho, 1.0 - q / 2.0), 1.0 / q) /
         (std::sqrt(lower_bound) * denom);
  c.c2 = std::pow(2.0 * theta + 2.0 * theta * std::pow(rho, q / 2.0 - 1.0), 1.0 / q) /
         (denom * std::pow(1.0 + delta_a, 1.0 / q));
  return c;
}

// ---------------------------------------------------------------------------
// Gaussian measurement bounds

struct GaussianTail {
  double q = 1.0;
  double sigma = 1.0;
  double eta = 0.0;
  double eps_cover = 0.0;
  double m = 0.0;
  double k = 0.0;
  double d = 0.0;
  double varrho = 0.0;
  double beta = 0.0;
  double log_failure_probability = 0.0;  // unclamped
  double failure_probability = 0.0;      // clamped to [0,1]
  double implied_delta = 0.0;            // (eta + eps^q) / (1 - eps^q)
};

/// Union bound over an eps-net of the k-sparse unit sphere, in log space.
inline GaussianTail gaussian_failure_probability(double q, double eta, double eps_cover, double m,
                                                 double k, double d, double sigma = 1.0) {
  if (!(q > 0.0 && q <= 1.0) || eta <= 0.0 || eps_cover <= 0.0 || m <= 0.0 || k <= 0.0 ||
      d <= 0.0 || sigma <= 0.0 || k > d)
    throw Error(ErrorKind::InvalidParameters, "gaussian_failure_probability: bad parameters");
  const double eq = std::pow(eps_cover, q);
  if (eq >= 1.0) throw Error(ErrorKind::InvalidParameters, "eps_cover^q must be < 1");
  GaussianTail t{q, sigma, eta, eps_cover, m, k, d};
  t.varrho = varrho(q, sigma);
  t.beta = beta(q);
  t.log_failure_probability = std::log(2.0) +
                              k * std::log(3.0 * std::numbers::e * d / (eps_cover * k)) -
                              eta * eta * m / (2.0 * q * t.beta * t.beta);
  t.failure_probability = t.log_failure_probability >= 0.0 ? 1.0 : std::exp(t.log_failure_probability);
  t.implied_delta = (eta + eq) / (1.0 - eq);
  return t;
}

/// ceil() that forgives representation error on values that are integers in
/// exact arithmetic, e.g. (5*sqrt(2))^2 = 50.000000000000007.
inline double ceil_exact(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
  return std::ceil(x);
}

/// Decomposition of the closed-form measurement bound
///   m >= 6.25 q beta^2 [ (t+1)(ln3 - ln(t+1)) s + ln2 + (t+2) s ln(ed/s) ] + 17.6 beta^2 (t+1) s
/// with t = ceil(base^{2/(2-q)}).
struct MeasurementBound {
  double t = 0.0;
  double log_coefficient = 0.0;  // multiplies ln(ed/s)
  double value = 0.0;
};

inline MeasurementBound measurement_bound_from_base(double q, double s, double d, double base) {
  if (!(q > 0.0 && q <= 1.0) || s <= 0.0 || d < s)
    throw Error(ErrorKind::InvalidParameters, "measurement bound needs 0<q<=1 and 0<s<=d");
  const double b2 = beta(q) * beta(q);
  MeasurementBound mb;
  mb.t = ceil_exact(std::pow(base, 2.0 / (2.0 - q)));
  mb.log_coefficient = 6.25 * q * b2 * (mb.t + 2.0) * s;
  mb.value = 6.25 * q * b2 *
                 ((mb.t + 1.0) * (std::log(3.0) - std::log(mb.t + 1.0)) * s + std::log(2.0)) +
             mb.log_coefficient * std::log(std::numbers::e * d / s) +
             17.6 * b2 * (mb.t + 1.0) * s;
  return mb;
}

/// Gaussian measurements sufficient for the recovery condition with kappa; callers ceil.
inline MeasurementBound measurement_bound_terms(double q, double s, double d, double kappa) {
  if (kappa < 1.0) throw Error(ErrorKind::InvalidParameters, "kappa must be >= 1");
  return measurement_bound_from_base(q, s, d, 5.0 * std::pow(2.0, q / 2.0) * std::pow(kappa, q));
}

inline double measurement_bound(double q, double s, double d, double kappa) {
  return measurement_bound_terms(q, s, d, kappa).value;
}

// ---------------------------------------------------------------------------
// Null-space property

struct DnspEstimate {
  double theta = 0.0;  // +inf when some kernel vector has D_{T^c}^* h = 0
  std::size_t samples = 0;
  Index kernel_dim = 0;
};

/// Lower bound on the D-NSP_q constant: for each sampled h in ker A the worst
/// T (|T| = s) is the set of s largest |<d_i,h>|, so only h is sampled.
inline DnspEstimate estimate_dnsp_theta(const MatrixXd& a, const MatrixXd& d, double q, Index s,
                                        std::size_t budget, std::uint64_t seed) {
  if (a.cols() != d.rows()) throw Error(ErrorKind::InvalidDimensions, "A and D disagree on n");
  if (s <= 0 || s > d.cols()) throw Error(ErrorKind::InvalidParameters, "need 0 < s <= d");
  const MatrixXd kernel = null_space(a);
  if (kernel.cols() == 0) throw Error(ErrorKind::EmptyKernel, "A has a trivial kernel");

  DnspEstimate est;
  est.kernel_dim = kernel.cols();
  Rng rng(seed);
  // the kernel basis directions themselves come first
  const std::size_t total = budget + static_cast<std::size_t>(kernel.cols());
  for (std::size_t t = 0; t < total; ++t) {
    VectorXd h = t < static_cast<std::size_t>(kernel.cols())
                     ? VectorXd(kernel.col(static_cast<Index>(t)))
                     : VectorXd(kernel * gaussian_vector(kernel.cols(), rng));
    const VectorXd x = d.transpose() * h;
    const auto best = hard_threshold(x, s, q);
    const double head = lq_pow(best.values, q);
    const double tail = std::pow(best.residual_q_norm, q);
    ++est.samples;
    if (tail <= 1e-14 * std::max(head, 1e-300)) {
      est.theta = std::numeric_limits<double>::infinity();
      continue;
    }
    est.theta = std::max(est.theta, head / tail);
  }
  return est;
}

}  // namespace lqframes
