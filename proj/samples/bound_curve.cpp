// Library usage demo: sweep the crossover probability of a runlength
// constrained channel, print the solver bound alongside the closed form,
// and verify the solution against the optimality equation.

#include <cstdio>

#include "fscb/channel.hpp"
#include "fscb/closed_form.hpp"
#include "fscb/dp.hpp"

int main() {
  using namespace fscb;

  std::printf("%6s  %12s  %12s  %9s\n", "p", "dp", "closed", "residual");
  for (int i = 0; i <= 10; ++i) {
    double p = 0.05 * i;
    Fsc channel = make_rll_dmc({.d = 1, .k = RllSpec::kInfinity}, DmcKind::bsc(p));
    DpSolution sol = solve_average_reward(channel);
    BoundResult closed = bsc_dinf_bound(1, p);
    std::printf("%6.3f  %12.9f  %12.9f  %9.2e\n", p, sol.rho, closed.value,
                sol.bellman_residual);
  }
  return 0;
}
