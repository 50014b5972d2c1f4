// Acceptance checks. Usage: lqframes_acceptance [criterion...]; no argument runs all.
#include "lqframes/lqframes.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace lqframes;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

Outcome figure1_reproduction() {
  const Cell cell = figure1_cell();
  int ok = 0;
  double worst_ms = 0.0;
  std::ostringstream errs;
  for (int t = 0; t < 20; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = recovery_trial(cell, trial_seed(0, cell, t), {});
    worst_ms = std::max(worst_ms, ms_since(t0));
    ok += out.relative_error <= 1e-4;
    errs << (t ? "," : "") << fmt("%.1e", out.relative_error);
  }
  return {ok >= 18 && worst_ms < 10000.0,
          fmt("%d/20 trials at rel err <= 1e-4, slowest %.0f ms; errors [", ok, worst_ms) +
              errs.str() + "]"};
}

Outcome beta_constants() {
  const double b1 = beta(1.0), b0 = beta(1e-6);
  return {std::abs(b1 - 3.8407) <= 1e-3 && std::abs(b0 - 1.0602) <= 1e-3,
          fmt("beta(1)=%.6f (target 3.8407), beta(1e-6)=%.6f (target 1.0602)", b1, b0)};
}

Outcome moment_oracle() {
  Rng rng(20240601);
  std::normal_distribution<double> n01;
  std::vector<double> g(1000000);
  for (auto& x : g) x = n01(rng);
  bool pass = true;
  std::string detail;
  for (double q : {0.25, 0.5, 0.7, 1.0}) {
    double sum = 0.0, sq = 0.0;
    for (double x : g) {
      const double v = std::pow(std::abs(x), q);
      sum += v;
      sq += v * v;
    }
    const double n = static_cast<double>(g.size());
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    const double z = (mean - varrho(q)) / se;
    pass = pass && std::abs(z) <= 3.0;
    detail += fmt("q=%.2f varrho=%.6f mc=%.6f z=%+.2f; ", q, varrho(q), mean, z);
  }
  return {pass, detail};
}

Outcome exact_delta_oracle() {
  const MatrixXd id = MatrixXd::Identity(6, 6);
  QRipOptions opt;
  opt.mode = EstimationMode::Exhaustive;
  opt.budget = 0;
  bool pass = true;
  std::string detail;
  for (Index s = 1; s <= 3; ++s) {
    const double delta = estimate_qrip(id, id, 1.0, s, opt).delta;
    const double expected = std::sqrt(double(s)) - 1.0;
    pass = pass && std::abs(delta - expected) <= 1e-6;
    detail += fmt("s=%ld delta=%.9f expected=%.9f; ", static_cast<long>(s), delta, expected);
  }
  return {pass, detail};
}

Outcome condition_equivalence() {
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int agree = 0, holds = 0, agree_sep = 0, holds_sep = 0, applicable = 0;
  for (int i = 0; i < 100; ++i) {
    const double q = 0.05 + 0.95 * u(rng);
    const Index a = 2 + static_cast<Index>(40 * u(rng));
    const Index s = 1 + static_cast<Index>(static_cast<double>(a - 1) * u(rng));
    const double kappa = 1.0 + u(rng);
    const double da = 0.5 * u(rng), dsa = 0.5 * u(rng);
    const auto v = check_recovery_condition(da, dsa, s, a, kappa, q);
    agree += (v.theta < 1.0) == v.holds;
    holds += v.holds;

    const double mu1 = 0.02 * u(rng);
    const std::vector<Index> sp{std::max<Index>(1, s / 2), std::max<Index>(1, s - s / 2)};
    const Index sa = sp[0] + sp[1];
    const auto w = check_separation_conditions(mu1, sp, sa + a, da, dsa, q, 2);
    if (w.theta_tilde) {
      ++applicable;
      agree_sep += (*w.theta_tilde < 1.0) == w.combined_condition_holds;
      holds_sep += w.combined_condition_holds;
    } else {
      agree_sep += !w.combined_condition_holds;
    }
  }
  return {agree == 100 && agree_sep == 100 && holds > 0 && holds < 100 && holds_sep > 0 &&
              holds_sep < applicable,
          fmt("theta: %d/100 agree (%d hold); theta_tilde: %d/100 agree (%d of %d applicable hold)",
              agree, holds, agree_sep, holds_sep, applicable)};
}

Outcome measurement_bound_trend() {
  const std::vector<double> qs{1.0, 0.5, 0.1, 1e-3};
  const double s = 10, d1 = 1000, d2 = 1e6;
  const auto lo = run_bounds_table(qs, s, d1, 1.0);
  const auto hi = run_bounds_table(qs, s, d2, 1.0);
  // slope of m_min in ln d is the log(d/s) coefficient
  std::vector<double> slope;
  std::string detail;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    slope.push_back((hi[i].m_min - lo[i].m_min) / std::log(d2 / d1));
    detail += fmt("q=%g m_min(d=1e3)=%.0f slope=%.4g; ", qs[i], lo[i].m_min, slope.back());
  }
  bool pass = slope.back() < 0.01 * slope.front();
  for (std::size_t i = 1; i < slope.size(); ++i) pass = pass && slope[i] < slope[i - 1];
  return {pass, detail};
}

Outcome fewer_measurements() {
  ExperimentSpec spec;
  spec.trials_per_cell = 20;
  spec.master_seed = 7;
  for (double q : {0.5, 1.0})
    for (Index m = 12; m <= 64; m += 4) spec.grid.push_back(Cell{64, 80, m, q, 8});
  const auto res = run_phase_transition(spec);
  const Index m_half = minimal_measurements(res, 0.5, 8, 0.9);
  const Index m_one = minimal_measurements(res, 1.0, 8, 0.9);
  std::string detail = fmt("minimal m at 90%%: q=0.5 -> %ld, q=1 -> %ld; rates", static_cast<long>(m_half),
                           static_cast<long>(m_one));
  for (const auto& r : res) detail += fmt(" (q=%.1f,m=%ld):%.2f", r.cell.q, static_cast<long>(r.cell.m), r.success_rate);
  return {m_half > 0 && m_one > 0 && m_half <= m_one, detail};
}

Outcome separation_desk() {
  Cell cell;
  cell.n = 32;
  cell.d = 64;
  cell.m = 24;
  cell.q = 0.7;
  cell.s1 = 2;
  cell.s2 = 2;
  int ok = 0;
  for (int t = 0; t < 20; ++t)
    ok += separation_trial(cell, trial_seed(0, cell, t), {}).relative_error <= 1e-3;

  bool identical = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = make_recovery_instance(Cell{32, 40, 16, 0.7, 6}, seed);
    const auto single = irls_analysis({inst.A, inst.y, inst.dict, 0.7});
    const auto split = solve_split_analysis({{inst.dict}, inst.A, inst.y, 0.7});
    identical = identical && split.solver.objective_trace == single.objective_trace &&
                split.solver.residual_trace == single.residual_trace &&
                split.components[0] == single.f_hat;
  }
  return {ok >= 18 && identical,
          fmt("%d/20 joint recoveries at <= 1e-3; single-dictionary trace identical: %s", ok,
              identical ? "yes" : "no")};
}

Outcome invariant_suites() {
  int bound_fail = 0, iso_fail = 0, surrogate_fail = 0, feas_fail = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Frame general(gaussian_matrix(6, 9, rng));
    const Frame tight = random_tight_frame(6, 10, seed);
    for (const Frame* f : {&general, &tight})
      for (int i = 0; i < 200; ++i) {
        const VectorXd x = gaussian_vector(6, rng).normalized();
        const double e = f->analyze(x).squaredNorm();
        bound_fail += e < f->lower_bound() * (1 - 1e-10) || e > f->upper_bound() * (1 + 1e-10);
      }

    const std::vector<Frame> dicts{random_tight_frame(8, 8, seed), random_tight_frame(8, 12, seed + 1000),
                                   hadamard_frame(8)};
    const auto st = build_stacked(std::span<const Frame>(dicts));
    for (int i = 0; i < 20; ++i) {
      const VectorXd f = gaussian_vector(24, rng);
      iso_fail += std::abs((st.psi.transpose() * f).norm() - f.norm()) > 1e-10 * f.norm();
    }

    const Cell cell{40, 48, 20, 0.3 + 0.7 * static_cast<double>(seed % 8) / 7.0, 12};
    const auto inst = make_recovery_instance(cell, seed);
    const auto r = irls_analysis({inst.A, inst.y, inst.dict, cell.q});
    for (std::size_t j = 0; j < r.surrogate_after.size(); ++j)
      surrogate_fail += r.surrogate_after[j] > r.surrogate_before[j] + 1e-10;
    for (double res : r.residual_trace) feas_fail += res > 1e-8 * inst.y.norm();
  }
  return {bound_fail + iso_fail + surrogate_fail + feas_fail == 0,
          fmt("violations over 50 seeds: frame bounds %d, psi isometry %d, surrogate increase %d, "
              "infeasible iterates %d",
              bound_fail, iso_fail, surrogate_fail, feas_fail)};
}

Outcome error_bound_tiny_instance() {
  const Index n = 4, d = 5, m = 3, s = 1, a = 2;
  int holds = 0, violations = 0, total = 0;
  double worst = 0.0;
  for (double q : {0.5, 0.7, 1.0})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      ++total;
      auto inst = make_recovery_instance(Cell{n, d, m, q, s}, seed);
      // q-RIP normalization: E ||Ax||_q^q = m varrho(q) ||x||_2^q
      const MatrixXd A = inst.A / std::pow(static_cast<double>(m) * varrho(q), 1.0 / q);
      Rng rng(derive_seed(seed, {77}));
      const VectorXd f = inst.f + 0.01 * gaussian_vector(n, rng);
      const VectorXd y = A * f;
      const Frame dual = canonical_dual(inst.dict);
      QRipOptions opt;
      opt.mode = EstimationMode::Exhaustive;
      opt.budget = 2000;
      opt.seed = seed;
      const double da = estimate_qrip(A, dual.matrix(), q, a, opt).delta;
      const double dsa = estimate_qrip(A, dual.matrix(), q, s + a, opt).delta;
      if (dsa >= 1.0) continue;
      const double kappa = inst.dict.condition();
      const auto v = check_recovery_condition(da, dsa, s, a, kappa, q);
      if (!v.holds) continue;
      ++holds;
      const auto c = error_constants(v.theta, v.rho, q, inst.dict.lower_bound(), da);
      const double tail = hard_threshold(inst.dict.analyze(f), s, q).residual_q_norm;
      const double rhs = c.c1 * tail / std::pow(static_cast<double>(s), 1.0 / q - 0.5);
      const double err = (irls_analysis({A, y, inst.dict, q}).f_hat - f).norm();
      worst = std::max(worst, err / rhs);
      violations += err > rhs + 1e-8;
    }
  return {violations == 0,
          fmt("condition held in %d/%d instances (vacuous otherwise); bound violated %d times; "
              "worst err/bound %.3g",
              holds, total, violations, worst)};
}

const std::map<std::string, std::function<Outcome()>>& criteria() {
  static const std::map<std::string, std::function<Outcome()>> table{
      {"figure1_reproduction", figure1_reproduction},
      {"beta_constants", beta_constants},
      {"moment_oracle", moment_oracle},
      {"exact_delta_oracle", exact_delta_oracle},
      {"condition_equivalence", condition_equivalence},
      {"measurement_bound_trend", measurement_bound_trend},
      {"fewer_measurements", fewer_measurements},
      {"separation_desk", separation_desk},
      {"invariant_suites", invariant_suites},
      {"error_bound_tiny_instance", error_bound_tiny_instance},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> names;
  for (int i = 1; i < argc; ++i) names.emplace_back(argv[i]);
  if (names.empty())
    for (const auto& [name, fn] : criteria()) names.push_back(name);
  int failed = 0;
  for (const auto& name : names) {
    const auto it = criteria().find(name);
    if (it == criteria().end()) {
      std::printf("FAIL %s: unknown criterion\n", name.c_str());
      ++failed;
      continue;
    }
    Outcome out;
    try {
      out = it->second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str());
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
