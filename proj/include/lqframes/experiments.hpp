#pragma once

// Seeded experiment harness: single-configuration reproductions, phase
// transition sweeps, separation sweeps and measurement-bound tables.

#include "lqframes/error.hpp"
#include "lqframes/frames.hpp"
#include "lqframes/io.hpp"
#include "lqframes/qrip.hpp"
#include "lqframes/random.hpp"
#include "lqframes/separation.hpp"
#include "lqframes/solvers.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace lqframes {

enum class ExperimentKind { Figure1, PhaseTransition, SeparationSweep, BoundsTable };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Figure1: return "figure1";
    case ExperimentKind::PhaseTransition: return "phase_transition";
    case ExperimentKind::SeparationSweep: return "separation_sweep";
    case ExperimentKind::BoundsTable: return "bounds_table";
  }
  return "unknown";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::Figure1, ExperimentKind::PhaseTransition,
                 ExperimentKind::SeparationSweep, ExperimentKind::BoundsTable})
    if (s == to_string(k)) return k;
  throw Error(ErrorKind::InvalidSpec, "unknown experiment kind '" + s + "'");
}

/// One grid point. Recovery cells use (n, d, m, q, s); separation cells use
/// (n, m, q, s1, s2) with d = 2n implied by spikes + Hadamard.
struct Cell {
  Index n = 0;
  Index d = 0;
  Index m = 0;
  double q = 1.0;
  Index s = 0;
  Index s1 = 0;
  Index s2 = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Seeds depend on the cell's parameters, not its position in the grid.
inline std::uint64_t cell_key(const Cell& c) {
  return derive_seed(0x63656c6cULL,
                     {static_cast<std::uint64_t>(c.n), static_cast<std::uint64_t>(c.d),
                      static_cast<std::uint64_t>(c.m), std::bit_cast<std::uint64_t>(c.q),
                      static_cast<std::uint64_t>(c.s), static_cast<std::uint64_t>(c.s1),
                      static_cast<std::uint64_t>(c.s2)});
}

inline std::uint64_t trial_seed(std::uint64_t master, const Cell& c, int trial) {
  return derive_seed(master, {cell_key(c), static_cast<std::uint64_t>(trial)});
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::PhaseTransition;
  std::vector<Cell> grid;
  int trials_per_cell = 20;
  double success_threshold = 1e-4;
  std::uint64_t master_seed = 0;
  double sigma = 1.0;  // std-dev of the Gaussian measurement entries
  SolverConfig solver;
};

struct CellResult {
  Cell cell;
  double mu1 = std::numeric_limits<double>::quiet_NaN();  // separation cells only
  int trials = 0;
  int errors = 0;  // trials that threw; counted as failures
  double success_rate = 0.0;
  double median_relative_error = std::numeric_limits<double>::quiet_NaN();
  double median_iterations = std::numeric_limits<double>::quiet_NaN();
  double wall_time_ms = 0.0;
};

struct TrialOutcome {
  double relative_error = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

template <class TrialFn>
CellResult run_cell(const Cell& cell, int trials, double threshold, std::uint64_t master,
                    TrialFn&& trial) {
  const auto start = std::chrono::steady_clock::now();
  CellResult out;
  out.cell = cell;
  out.trials = trials;
  std::vector<double> errs, iters;
  int successes = 0;
  for (int t = 0; t < trials; ++t) {
    try {
      const TrialOutcome o = trial(trial_seed(master, cell, t));
      errs.push_back(o.relative_error);
      iters.push_back(static_cast<double>(o.iterations));
      if (o.relative_error <= threshold) ++successes;
    } catch (const Error&) {
      ++out.errors;
    }
  }
  out.success_rate = trials > 0 ? static_cast<double>(successes) / trials : 0.0;
  out.median_relative_error = median(errs);
  out.median_iterations = median(iters);
  out.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline void validate(const ExperimentSpec& spec) {
  if (spec.grid.empty()) throw Error(ErrorKind::InvalidSpec, "grid is empty");
  if (spec.trials_per_cell < 1) throw Error(ErrorKind::InvalidSpec, "trials_per_cell must be >= 1");
  if (!(spec.success_threshold > 0.0))
    throw Error(ErrorKind::InvalidSpec, "success_threshold must be positive");
}

}  // namespace detail

/// A recovery instance: Gaussian A, tight frame D and an s-cosparse unit f.
struct RecoveryInstance {
  MatrixXd A;
  Frame dict;
  VectorXd f;
  VectorXd y;
};

/// Generic random tight frame + cosparse signal when s > d - n; otherwise the
/// signal is planted into a rotated tight frame (generic frames have no
/// s-cosparse signals there).
inline RecoveryInstance make_recovery_instance(const Cell& c, std::uint64_t seed,
                                               double sigma = 1.0) {
  if (c.m <= 0 || c.m > c.n || c.n > c.d || c.s <= 0 || c.s > c.d)
    throw Error(ErrorKind::InvalidSpec, "cell needs 0 < m <= n <= d and 0 < s <= d");
  std::optional<Frame> frame;
  VectorXd f;
  if (c.s > c.d - c.n) {
    frame.emplace(random_tight_frame(c.n, c.d, derive_seed(seed, {1})));
    f = cosparse_signal(*frame, c.s, derive_seed(seed, {2})).signal;
  } else {
    auto planted = planted_cosparse_instance(c.n, c.d, c.s, derive_seed(seed, {2}));
    frame.emplace(std::move(planted.frame));
    f = std::move(planted.signal.signal);
  }
  Rng rng(derive_seed(seed, {3}));
  MatrixXd a = gaussian_matrix(c.m, c.n, rng, sigma);
  VectorXd y = a * f;
  return {std::move(a), std::move(*frame), std::move(f), std::move(y)};
}

inline TrialOutcome recovery_trial(const Cell& c, std::uint64_t seed, const SolverConfig& cfg,
                                   double sigma = 1.0) {
  const RecoveryInstance inst = make_recovery_instance(c, seed, sigma);
  const SolverResult r = irls_analysis(LqProblem{inst.A, inst.y, inst.dict, c.q}, cfg);
  return {(r.f_hat - inst.f).norm() / inst.f.norm(), r.iterations};
}

/// The small-sample analysis-IRLS setup: n=100, d=110, m=50, q=0.7, s=25.
inline Cell figure1_cell(Index m = 50) { return Cell{100, 110, m, 0.7, 25}; }

inline CellResult run_figure1(std::uint64_t seed, int trials = 20, Index m = 50,
                              double threshold = 1e-4, const SolverConfig& cfg = {}) {
  const Cell cell = figure1_cell(m);
  return detail::run_cell(cell, trials, threshold, seed,
                          [&](std::uint64_t s) { return recovery_trial(cell, s, cfg); });
}

/// Per-cell success rates, sorted by (q, s, m).
inline std::vector<CellResult> run_phase_transition(const ExperimentSpec& spec) {
  detail::validate(spec);
  std::vector<CellResult> out;
  for (const auto& cell : spec.grid)
    out.push_back(detail::run_cell(cell, spec.trials_per_cell, spec.success_threshold,
                                   spec.master_seed, [&](std::uint64_t s) {
                                     return recovery_trial(cell, s, spec.solver, spec.sigma);
                                   }));
  std::stable_sort(out.begin(), out.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.cell.q, a.cell.s, a.cell.m) < std::tie(b.cell.q, b.cell.s, b.cell.m);
  });
  return out;
}

/// Smallest m in the q-slice reaching `rate`, or -1 if none does.
inline Index minimal_measurements(const std::vector<CellResult>& results, double q, Index s,
                                  double rate) {
  Index best = -1;
  for (const auto& r : results)
    if (r.cell.q == q && r.cell.s == s && r.success_rate >= rate && (best < 0 || r.cell.m < best))
      best = r.cell.m;
  return best;
}

struct SeparationInstance {
  Frame spikes;
  Frame hadamard;
  MatrixXd A;
  VectorXd f1;
  VectorXd f2;
  VectorXd y;
};

/// f1 s1-sparse in the standard basis, f2 s2-sparse in the Hadamard basis.
inline SeparationInstance make_separation_instance(const Cell& c, std::uint64_t seed,
                                                   double sigma = 1.0) {
  if (c.m <= 0 || c.m > 2 * c.n || c.s1 < 0 || c.s2 < 0 || c.s1 > c.n || c.s2 > c.n)
    throw Error(ErrorKind::InvalidSpec, "separation cell out of range");
  Frame spikes = identity_frame(c.n);
  Frame had = hadamard_frame(c.n);
  Rng rng(derive_seed(seed, {4}));
  auto sparse = [&](Index k) {
    VectorXd v = VectorXd::Zero(c.n);
    for (Index i : random_subset(c.n, k, rng)) v(i) = std::normal_distribution<double>(0.0, 1.0)(rng);
    return v;
  };
  VectorXd f1 = sparse(c.s1);
  VectorXd f2 = had.matrix() * sparse(c.s2);
  Rng arng(derive_seed(seed, {3}));
  MatrixXd a = gaussian_matrix(c.m, c.n, arng, sigma);
  VectorXd y = a * (f1 + f2);
  return {std::move(spikes), std::move(had), std::move(a), std::move(f1), std::move(f2), std::move(y)};
}

inline double relative_error(const VectorXd& est, const VectorXd& truth) {
  const double tn = truth.norm();
  return tn > 0.0 ? (est - truth).norm() / tn : est.norm();
}

/// Joint error: the worse of the two component relative errors.
inline TrialOutcome separation_trial(const Cell& c, std::uint64_t seed, const SolverConfig& cfg,
                                     double sigma = 1.0) {
  const SeparationInstance inst = make_separation_instance(c, seed, sigma);
  const SeparationProblem problem{{inst.spikes, inst.hadamard}, inst.A, inst.y, c.q};
  const SeparationResult r = solve_split_analysis(problem, cfg);
  const double e = std::max(relative_error(r.components[0], inst.f1),
                            relative_error(r.components[1], inst.f2));
  return {e, r.solver.iterations};
}

inline std::vector<CellResult> run_separation_sweep(const ExperimentSpec& spec) {
  detail::validate(spec);
  std::vector<CellResult> out;
  for (const auto& cell : spec.grid) {
    CellResult r = detail::run_cell(cell, spec.trials_per_cell, spec.success_threshold,
                                    spec.master_seed, [&](std::uint64_t s) {
                                      return separation_trial(cell, s, spec.solver, spec.sigma);
                                    });
    const std::vector<Frame> dicts{identity_frame(cell.n), hadamard_frame(cell.n)};
    r.mu1 = mutual_coherence(std::span<const Frame>(dicts));
    out.push_back(r);
  }
  return out;
}

struct BoundsRow {
  double q = 0.0;
  double m_min = 0.0;
  double m_min_separation = 0.0;
};

inline std::vector<BoundsRow> run_bounds_table(const std::vector<double>& qs, double s, double d,
                                               double kappa) {
  std::vector<BoundsRow> rows;
  for (double q : qs)
    rows.push_back({q, measurement_bound(q, s, d, kappa), separation_measurement_bound(q, s, d)});
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const Cell& c) {
  return {{"n", c.n}, {"d", c.d}, {"m", c.m}, {"q", c.q}, {"s", c.s}, {"s1", c.s1}, {"s2", c.s2}};
}

inline Cell cell_from_json(const nlohmann::json& j) {
  Cell c;
  c.n = j.value("n", Index{0});
  c.m = j.value("m", Index{0});
  c.q = j.value("q", 1.0);
  c.s = j.value("s", Index{0});
  c.s1 = j.value("s1", Index{0});
  c.s2 = j.value("s2", Index{0});
  c.d = j.value("d", c.s1 + c.s2 > 0 ? 2 * c.n : Index{0});
  return c;
}

inline nlohmann::json to_json(const CellResult& r, bool with_timing = true) {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  nlohmann::json j = {
      {"cell", to_json(r.cell)},
      {"mu1", num(r.mu1)},
      {"trials", r.trials},
      {"errors", r.errors},
      {"success_rate", r.success_rate},
      {"median_relative_error", num(r.median_relative_error)},
      {"median_iterations", num(r.median_iterations)},
  };
  if (with_timing) j["wall_time_ms"] = r.wall_time_ms;
  return j;
}

inline CellResult cell_result_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  CellResult r;
  r.cell = cell_from_json(j.at("cell"));
  r.mu1 = num(j.at("mu1"));
  r.trials = j.at("trials").get<int>();
  r.errors = j.at("errors").get<int>();
  r.success_rate = j.at("success_rate").get<double>();
  r.median_relative_error = num(j.at("median_relative_error"));
  r.median_iterations = num(j.at("median_iterations"));
  r.wall_time_ms = j.value("wall_time_ms", 0.0);
  return r;
}

/// Accepts either an explicit "grid" list of cells or a "sweep" object whose
/// array-valued keys are expanded as a cartesian product.
inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
  ExperimentSpec spec;
  try {
    spec.kind = experiment_kind_from_string(j.value("kind", std::string("phase_transition")));
    spec.trials_per_cell = j.value("trials_per_cell", 20);
    spec.success_threshold = j.value("success_threshold", 1e-4);
    spec.master_seed = j.value("master_seed", std::uint64_t{0});
    spec.sigma = j.value("sigma", 1.0);
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      spec.solver.max_outer_iters = s.value("max_outer_iters", spec.solver.max_outer_iters);
      spec.solver.tol = s.value("tol", spec.solver.tol);
    }
    if (j.contains("grid"))
      for (const auto& c : j.at("grid")) spec.grid.push_back(cell_from_json(c));
    if (j.contains("sweep")) {
      std::vector<nlohmann::json> cells{nlohmann::json::object()};
      for (const auto& [key, values] : j.at("sweep").items()) {
        std::vector<nlohmann::json> next;
        const auto list = values.is_array() ? values : nlohmann::json::array({values});
        for (const auto& base : cells)
          for (const auto& v : list) {
            auto c = base;
            c[key] = v;
            next.push_back(std::move(c));
          }
        cells = std::move(next);
      }
      for (const auto& c : cells) spec.grid.push_back(cell_from_json(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidSpec, e.what());
  }
  return spec;
}

inline constexpr const char* kCellCsvHeader =
    "n,d,m,q,s,s1,s2,mu1,trials,errors,success_rate,median_relative_error,median_iterations,"
    "wall_time_ms";

inline void write_results_csv(std::ostream& out, const std::vector<CellResult>& rows) {
  out << kCellCsvHeader << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows)
    out << r.cell.n << ',' << r.cell.d << ',' << r.cell.m << ',' << r.cell.q << ',' << r.cell.s
        << ',' << r.cell.s1 << ',' << r.cell.s2 << ',' << r.mu1 << ',' << r.trials << ','
        << r.errors << ',' << r.success_rate << ',' << r.median_relative_error << ','
        << r.median_iterations << ',' << r.wall_time_ms << '\n';
}

inline std::vector<CellResult> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCellCsvHeader)
    throw Error(ErrorKind::ParseError, "unexpected results header");
  std::vector<CellResult> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(detail::parse_double(field, lineno));
    if (f.size() != 14) throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected 14 fields");
    CellResult r;
    r.cell = Cell{static_cast<Index>(f[0]), static_cast<Index>(f[1]), static_cast<Index>(f[2]),
                  f[3], static_cast<Index>(f[4]), static_cast<Index>(f[5]), static_cast<Index>(f[6])};
    r.mu1 = f[7];
    r.trials = static_cast<int>(f[8]);
    r.errors = static_cast<int>(f[9]);
    r.success_rate = f[10];
    r.median_relative_error = f[11];
    r.median_iterations = f[12];
    r.wall_time_ms = f[13];
    rows.push_back(r);
  }
  return rows;
}

inline void write_bounds_csv(std::ostream& out, const std::vector<BoundsRow>& rows) {
  out << "q,m_min,m_min_separation\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) out << r.q << ',' << r.m_min << ',' << r.m_min_separation << '\n';
}

}  // namespace lqframes
