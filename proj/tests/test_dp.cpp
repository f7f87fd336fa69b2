#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fscb/channel.hpp"
#include "fscb/closed_form.hpp"
#include "fscb/dp.hpp"
#include "fscb/entropy.hpp"
#include "fscb/oracle.hpp"

using namespace fscb;

namespace {

Fsc bsc_channel(int d, int k, double p) { return make_rll_dmc({d, k}, DmcKind::bsc(p)); }

Policy binary_policy(const Fsc& fsc, const std::vector<double>& one_mass) {
  Policy pol;
  pol.rows.assign(fsc.num_states, std::vector<double>(fsc.num_inputs, 0.0));
  for (int s = 0; s < fsc.num_states; ++s) {
    if (fsc.is_allowed(s, 1)) {
      pol.rows[s][1] = one_mass[s];
      pol.rows[s][0] = 1.0 - one_mass[s];
    } else {
      pol.rows[s][0] = 1.0;
    }
  }
  return pol;
}

}  // namespace

TEST_CASE("per-state reward closed cases") {
  SECTION("symmetric noise kills every row") {
    Fsc fsc = bsc_channel(1, RllSpec::kInfinity, 0.5);
    CHECK(reward(fsc, 1, {0.3, 0.7}) == Catch::Approx(0.0).margin(1e-14));
    CHECK(reward(fsc, 0, {1.0, 0.0}) == Catch::Approx(0.0).margin(1e-14));
  }
  SECTION("crossover row gives the binary mixture gain") {
    for (double p : {0.05, 0.1, 0.3}) {
      Fsc fsc = bsc_channel(1, RllSpec::kInfinity, p);
      for (double a : {0.0, 0.2, 0.5, 0.9}) {
        double mix = a * (1.0 - p) + (1.0 - a) * p;
        double expect = binary_entropy(mix) - binary_entropy(p);
        CHECK(reward(fsc, 1, {1.0 - a, a}) == Catch::Approx(expect).margin(1e-13));
      }
    }
  }
  SECTION("erasure row is the scaled input entropy") {
    for (double eps : {0.0, 0.25, 0.6}) {
      Fsc fsc = make_rll_dmc({1, RllSpec::kInfinity}, DmcKind::bec(eps));
      for (double a : {0.1, 0.5, 0.8}) {
        double expect = (1.0 - eps) * binary_entropy(a);
        CHECK(reward(fsc, 1, {1.0 - a, a}) == Catch::Approx(expect).margin(1e-13));
      }
    }
  }
  SECTION("mass on a forbidden input is rejected") {
    Fsc fsc = bsc_channel(1, RllSpec::kInfinity, 0.1);
    CHECK_THROWS_AS(reward(fsc, 0, {0.5, 0.5}), std::invalid_argument);
  }
}

TEST_CASE("belief updates collapse to point masses on deterministic dynamics") {
  Fsc fsc = bsc_channel(1, RllSpec::kInfinity, 0.1);
  DpState z1 = point_mass_state(1, fsc.num_states);

  DpState hit = next_dp_state(fsc, z1, 1);
  CHECK(hit.point_mass_index == 0);
  CHECK(hit.belief == std::vector<double>{1.0, 0.0});

  DpState stay = next_dp_state(fsc, z1, 0);
  CHECK(stay.point_mass_index == 1);

  DpState mixed;
  mixed.belief = {0.5, 0.5};
  DpState after = next_dp_state(fsc, mixed, 0);  // both states map to 1 on input 0
  CHECK(after.point_mass_index == 1);
  CHECK(after.belief == std::vector<double>{0.0, 1.0});
}

TEST_CASE("disturbance law mixes policy rows by belief") {
  Fsc fsc = bsc_channel(1, RllSpec::kInfinity, 0.1);
  Policy pol = binary_policy(fsc, {0.0, 0.4});

  DpState z0 = point_mass_state(0, fsc.num_states);
  CHECK(disturbance_law(fsc, z0, pol) == std::vector<double>{1.0, 0.0});

  DpState z1 = point_mass_state(1, fsc.num_states);
  auto law = disturbance_law(fsc, z1, pol);
  CHECK(law[0] == Catch::Approx(0.6));
  CHECK(law[1] == Catch::Approx(0.4));

  DpState mixed;
  mixed.belief = {0.25, 0.75};
  auto blend = disturbance_law(fsc, mixed, pol);
  CHECK(blend[0] == Catch::Approx(0.25 * 1.0 + 0.75 * 0.6));
  CHECK(blend[1] == Catch::Approx(0.75 * 0.4));
}

TEST_CASE("solver matches the unbounded-run crossover bound") {
  for (double p : {0.02, 0.1, 0.2, 0.35, 0.48}) {
    DpSolution sol = solve_average_reward(bsc_channel(1, RllSpec::kInfinity, p));
    BoundResult cf = bsc_dinf_bound(1, p);
    INFO("p=" << p);
    CHECK(sol.converged);
    CHECK(sol.rho == Catch::Approx(cf.value).margin(1e-6));
  }
}

TEST_CASE("solver on a single-output channel returns zero") {
  // Two states, one output: nothing can be conveyed.
  std::vector<std::vector<int>> next = {{1, 0}, {0, 1}};
  std::vector<std::vector<std::vector<double>>> em = {{{1.0}, {1.0}}, {{1.0}, {1.0}}};
  std::vector<std::vector<char>> allowed = {{1, 1}, {1, 1}};
  Fsc fsc = make_fsc(next, em, allowed, 0);
  DpSolution sol = solve_average_reward(fsc);
  CHECK(sol.rho == 0.0);
  CHECK(sol.bellman_residual <= 1e-10);
}

TEST_CASE("solver rejects channels with unreachable states") {
  // State 2 has no incoming edge from the reachable part.
  std::vector<std::vector<int>> next = {{0, 1}, {0, 1}, {2, 2}};
  std::vector<std::vector<std::vector<double>>> em(
      3, {{0.9, 0.1}, {0.1, 0.9}});
  std::vector<std::vector<char>> allowed(3, {1, 1});
  Fsc fsc = make_fsc(next, em, allowed, 0);
  CHECK_THROWS_AS(solve_average_reward(fsc), std::domain_error);
}

TEST_CASE("rate is monotone in the gap requirement") {
  double prev = 2.0;
  for (int d : {0, 1, 2, 3}) {
    DpSolution sol = solve_average_reward(bsc_channel(d, RllSpec::kInfinity, 0.1));
    CHECK(sol.rho <= prev + 1e-12);
    prev = sol.rho;
  }
}

TEST_CASE("erasure rate is affine in the erasure probability") {
  Fsc a = make_rll_dmc({1, RllSpec::kInfinity}, DmcKind::bec(0.2));
  Fsc b = make_rll_dmc({1, RllSpec::kInfinity}, DmcKind::bec(0.4));
  Fsc c = make_rll_dmc({1, RllSpec::kInfinity}, DmcKind::bec(0.6));
  double ra = solve_average_reward(a).rho;
  double rb = solve_average_reward(b).rho;
  double rc = solve_average_reward(c).rho;
  CHECK(rb == Catch::Approx((ra + rc) / 2.0).margin(1e-8));
}

TEST_CASE("residual verifier accepts analytic pairs and flags perturbations") {
  for (double p : {0.1, 0.2, 0.3}) {
    Fsc fsc = bsc_channel(1, RllSpec::kInfinity, p);
    DpSolution sol = solve_average_reward(fsc);
    // For the two-state gap-1 chain the relative values satisfy
    // h(i) = i * rho with h normalized at the initial state.
    std::vector<double> h = {0.0, sol.rho};
    double res = bellman_residual(fsc, sol.rho, h);
    INFO("p=" << p << " residual=" << res);
    CHECK(res <= 1e-8);
    CHECK(bellman_residual(fsc, sol.rho + 0.01, h) >= 0.009);
  }
}

TEST_CASE("solver solution certifies itself") {
  for (double p : {0.1, 0.3}) {
    DpSolution sol = solve_average_reward(bsc_channel(2, 5, p));
    CHECK(sol.converged);
    CHECK(sol.bellman_residual <= 1e-10);
    CHECK(sol.rho >= sol.rho_lo - 1e-15);
    CHECK(sol.rho <= sol.rho_hi + 1e-15);
    CHECK(sol.rho_hi - sol.rho_lo <= 2e-10);
    REQUIRE_FALSE(sol.span_history.empty());
    CHECK(sol.span_history.back() <= 1e-10);
    CHECK(sol.h[0] == 0.0);  // normalized at the initial state
    validate_policy(bsc_channel(2, 5, p), sol.policy);
  }
}

TEST_CASE("monte carlo agrees with the solved rate") {
  Fsc fsc = bsc_channel(1, RllSpec::kInfinity, 0.1);
  DpSolution sol = solve_average_reward(fsc);
  PolicyChainStats stats = simulate_policy(fsc, sol.policy, 1000000, 12345);
  REQUIRE(stats.single_closed_class);
  CHECK(stats.exact_average_reward == Catch::Approx(sol.rho).margin(1e-9));
  CHECK(std::abs(stats.mc_estimate - sol.rho) <= 3.0 * stats.mc_stderr);
}

TEST_CASE("degenerate policy with an absorbing state is analyzed exactly") {
  Fsc fsc = bsc_channel(1, RllSpec::kInfinity, 0.1);
  Policy pol = binary_policy(fsc, {0.0, 0.0});  // never emits a 1
  PolicyChainStats stats = simulate_policy(fsc, pol, 10000, 7);
  REQUIRE(stats.single_closed_class);
  REQUIRE(stats.classes.size() == 1);
  CHECK(stats.classes[0].members == std::vector<int>{1});
  CHECK(stats.exact_average_reward == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("three-input identity channel reaches log2(3)") {
  // Exercises the simplex search used when a state has three feasible inputs.
  std::vector<std::vector<int>> next = {{0, 0, 0}};
  std::vector<std::vector<std::vector<double>>> em = {
      {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  std::vector<std::vector<char>> allowed = {{1, 1, 1}};
  Fsc fsc = make_fsc(next, em, allowed, 0);
  DpSolution sol = solve_average_reward(fsc);
  CHECK(sol.rho == Catch::Approx(std::log2(3.0)).margin(1e-6));
}

TEST_CASE("solver options defaults pin the contract") {
  SolverOptions opts;
  CHECK(opts.tolerance == 1e-10);
  CHECK(opts.max_iterations == 100000);
  CHECK(opts.grid_points == 64);
  CHECK(opts.restarts == 8);
  CHECK(opts.seed == 0);
}
