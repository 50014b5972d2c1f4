#include "lqframes/lqframes.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace lqframes;

namespace {

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path + ": " + e.what());
  }
}

std::vector<CellResult> run_spec(const std::string& path, ExperimentKind expected) {
  ExperimentSpec spec = experiment_spec_from_json(read_json(path));
  if (spec.kind != expected)
    throw Error(ErrorKind::InvalidSpec, path + ": experiment kind does not match the subcommand");
  return expected == ExperimentKind::SeparationSweep ? run_separation_sweep(spec)
                                                     : run_phase_transition(spec);
}

void emit_results(const std::vector<CellResult>& rows, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    write_results_csv(std::cout, rows);
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorKind::ParseError, "cannot write " + out_path);
  write_results_csv(out, rows);
}

Index count_nonzero(const VectorXd& x, double rel) {
  const double scale = x.cwiseAbs().maxCoeff();
  return scale > 0.0 ? (x.array().abs() > rel * scale).count() : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"l_q analysis recovery, data separation and RIP calculators"};
  app.require_subcommand(1);

  // solve
  std::string matrix, dict, obs, out, method = "irls";
  double q = 0.7, eps = 0.0;
  auto* solve = app.add_subcommand("solve", "recover f from y = Af with D*f sparse");
  solve->add_option("--matrix", matrix, "measurement matrix A (CSV)")->required();
  solve->add_option("--dict", dict, "frame D, atoms as columns (CSV)")->required();
  solve->add_option("--obs", obs, "observations y (CSV)")->required();
  solve->add_option("--q", q, "exponent in (0,1]");
  solve->add_option("--eps", eps, "noise level; 0 means equality constraints");
  solve->add_option("--method", method)->check(CLI::IsMember({"irls", "irl1"}));
  solve->add_option("--out", out, "result JSON (default stdout)");

  // separate
  std::vector<std::string> dicts;
  std::vector<Index> sparsities;
  Index order_a = 0;
  std::size_t sep_budget = 200;
  auto* separate = app.add_subcommand("separate", "split y = A(f1+...+fk) by dictionary");
  separate->add_option("--dicts", dicts, "tight frames, comma separated")->delimiter(',')->required();
  separate->add_option("--matrix", matrix)->required();
  separate->add_option("--obs", obs)->required();
  separate->add_option("--q", q);
  separate->add_option("--s", sparsities, "per-component sparsities for the verdict (default: measured)")
      ->delimiter(',');
  separate->add_option("--a", order_a, "RIP order a for the verdict (default 2s)");
  separate->add_option("--budget", sep_budget, "sampled supports for the delta estimates");
  separate->add_option("--out", out);

  // rip-estimate
  Index order_s = 1;
  std::string mode = "sampled";
  std::size_t budget = 1000, directions = 4;
  std::uint64_t seed = 0;
  double kappa = 0.0;
  auto* rip = app.add_subcommand("rip-estimate", "lower bound on the (D,q)-RIP constant");
  rip->add_option("--matrix", matrix)->required();
  rip->add_option("--dict", dict)->required();
  rip->add_option("--q", q);
  rip->add_option("--s", order_s, "sparsity s");
  rip->add_option("--a", order_a, "also check the recovery condition with orders a and s+a");
  rip->add_option("--kappa", kappa, "frame condition (default: from --dict)");
  rip->add_option("--mode", mode)->check(CLI::IsMember({"sampled", "exhaustive"}));
  rip->add_option("--budget", budget, "supports (sampled) or extra directions per support (exhaustive)");
  rip->add_option("--directions", directions, "directions per support in sampled mode");
  rip->add_option("--seed", seed);
  rip->add_option("--out", out);

  // bounds
  std::vector<double> qs{0.3, 0.5, 0.7, 1.0};
  double bound_s = 25, bound_d = 110, bound_kappa = 1.0;
  auto* bounds = app.add_subcommand("bounds", "Gaussian measurement bounds as CSV");
  bounds->add_option("--q", qs)->delimiter(',');
  bounds->add_option("--s", bound_s);
  bounds->add_option("--d", bound_d);
  bounds->add_option("--kappa", bound_kappa);

  // figure1
  int trials = 20;
  auto* figure1 = app.add_subcommand("figure1", "n=100, d=110, m=50, q=0.7, s=25 recovery rate");
  figure1->add_option("--seed", seed);
  figure1->add_option("--trials", trials);

  // phase / separate-sweep
  std::string spec_path;
  auto* phase = app.add_subcommand("phase", "phase-transition sweep from a JSON spec");
  phase->add_option("--spec", spec_path)->required();
  phase->add_option("--out", out, "results CSV (default stdout)");
  auto* sweep = app.add_subcommand("separate-sweep", "separation sweep from a JSON spec");
  sweep->add_option("--spec", spec_path)->required();
  sweep->add_option("--out", out, "results CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      const LqProblem p{read_matrix_csv(matrix), read_vector_csv(obs), Frame(read_matrix_csv(dict)), q,
                        eps};
      write_json(to_json(method == "irl1" ? irl1_analysis(p) : irls_analysis(p)), out);
    } else if (*separate) {
      std::vector<Frame> frames;
      for (const auto& path : dicts) frames.emplace_back(read_matrix_csv(path));
      const MatrixXd a = read_matrix_csv(matrix);
      const auto r = solve_split_analysis({frames, a, read_vector_csv(obs), q});
      if (sparsities.empty())
        for (std::size_t k = 0; k < frames.size(); ++k)
          sparsities.push_back(std::max<Index>(1, count_nonzero(frames[k].analyze(r.components[k]), 1e-6)));
      Index s = 0;
      for (Index sk : sparsities) s += sk;
      if (order_a <= 0) order_a = 2 * s;
      const auto st = build_stacked(std::span<const Frame>(frames));
      QRipOptions opt;
      opt.budget = sep_budget;
      const double da = estimate_qrip(a, st.dbar, q, order_a, opt).delta;
      const double dsa = estimate_qrip(a, st.dbar, q, std::min(s + order_a, st.dbar.cols()), opt).delta;
      // a delta >= 1 is clamped just below 1, which fails every condition
      const auto verdict = check_separation_conditions(
          mutual_coherence(std::span<const Frame>(frames)), sparsities, order_a, std::min(da, 0.999999),
          std::min(dsa, 0.999999), q, static_cast<Index>(frames.size()));
      nlohmann::json comps = nlohmann::json::array();
      for (const auto& c : r.components) comps.push_back(to_std(c));
      write_json({{"components", comps}, {"verdict", to_json(verdict)}}, out);
    } else if (*rip) {
      const MatrixXd a = read_matrix_csv(matrix);
      const Frame d(read_matrix_csv(dict));
      QRipOptions opt;
      opt.mode = mode == "exhaustive" ? EstimationMode::Exhaustive : EstimationMode::Sampled;
      opt.budget = budget;
      opt.sampled_directions = directions;
      opt.seed = seed;
      if (order_a <= 0) {
        write_json(to_json(estimate_qrip(a, d.matrix(), q, order_s, opt)), out);
      } else {
        const auto ra = estimate_qrip(a, d.matrix(), q, order_a, opt);
        const auto rsa = estimate_qrip(a, d.matrix(), q, order_s + order_a, opt);
        std::optional<RecoveryConditionVerdict> cond;
        if (!rsa.at_least_one())
          cond = check_recovery_condition(ra.delta, rsa.delta, order_s, order_a,
                                          kappa > 0.0 ? kappa : d.condition(), q);
        write_json(to_json(rsa, cond), out);
      }
    } else if (*bounds) {
      write_bounds_csv(std::cout, run_bounds_table(qs, bound_s, bound_d, bound_kappa));
    } else if (*figure1) {
      std::cout << to_json(run_figure1(seed, trials)).dump(2) << '\n';
    } else if (*phase) {
      emit_results(run_spec(spec_path, ExperimentKind::PhaseTransition), out);
    } else if (*sweep) {
      emit_results(run_spec(spec_path, ExperimentKind::SeparationSweep), out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
