// Recover a cosparse signal with l_q analysis, then split spikes from sinusoids.
#include "lqframes/lqframes.hpp"

#include <cstdio>

using namespace lqframes;

int main() {
  const Cell cell = figure1_cell();
  const auto inst = make_recovery_instance(cell, trial_seed(0, cell, 0));
  for (double q : {0.5, 0.7, 1.0}) {
    const auto r = irls_analysis({inst.A, inst.y, inst.dict, q});
    std::printf("q=%.1f  iterations=%3d  relative error=%.2e\n", q, r.iterations,
                relative_error(r.f_hat, inst.f));
  }

  Cell sep;
  sep.n = 32;
  sep.d = 64;
  sep.m = 24;
  sep.q = 0.7;
  sep.s1 = 2;
  sep.s2 = 2;
  const auto s = make_separation_instance(sep, 1);
  const auto r = solve_split_analysis({{s.spikes, s.hadamard}, s.A, s.y, sep.q});
  std::printf("separation: spikes error=%.2e  hadamard error=%.2e\n",
              relative_error(r.components[0], s.f1), relative_error(r.components[1], s.f2));

  const auto rows = run_bounds_table({1.0, 0.5, 0.1}, 25, 110, 1.0);
  for (const auto& row : rows) std::printf("q=%.1f  m_min=%.0f\n", row.q, row.m_min);
}
