#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

#include "fscb/channel.hpp"
#include "fscb/closed_form.hpp"
#include "fscb/dp.hpp"
#include "fscb/entropy.hpp"
#include "fscb/vgraph.hpp"
#include "fscb/vgraph_io.hpp"

using namespace fscb;

namespace {

constexpr int kInf = RllSpec::kInfinity;

std::vector<std::vector<std::vector<double>>> bsc_emissions(int states, double p) {
  return std::vector<std::vector<std::vector<double>>>(
      states, {{1.0 - p, p}, {p, 1.0 - p}});
}

// Single state, two inputs, both allowed; the only structure is the noise.
Fsc free_bsc(double p) {
  return make_fsc({{0, 0}}, bsc_emissions(1, p), {{1, 1}}, 0);
}

// Two states swapped by every input; strongly connected but period 2.
Fsc swap_bsc(double p) {
  return make_fsc({{1, 1}, {0, 0}}, bsc_emissions(2, p), {{1, 1}, {1, 1}}, 0);
}

// Two absorbing states: the state graph is not strongly connected.
Fsc frozen_bsc(double p) {
  return make_fsc({{0, 0}, {1, 1}}, bsc_emissions(2, p), {{1, 1}, {1, 1}}, 0);
}

// V-graph on two vertices that swaps on every input.
VGraph swap_vgraph() {
  VGraph vg;
  vg.num_vertices = 2;
  vg.phi = {{1, 1}, {0, 0}};
  vg.vertex_names = {"even", "odd"};
  return vg;
}

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

TEST_CASE("vgraph validation") {
  CHECK_NOTHROW(validate_vgraph(trivial_vgraph(2), 2));
  CHECK_NOTHROW(validate_vgraph(memory_vgraph(2, 2), 2));
  CHECK_NOTHROW(validate_vgraph(swap_vgraph(), 2));

  SECTION("one-way graph is not irreducible") {
    VGraph vg;
    vg.num_vertices = 2;
    vg.phi = {{1, 1}, {1, 1}};
    CHECK_THROWS_AS(validate_vgraph(vg, 2), std::invalid_argument);
  }
  SECTION("phi out of range") {
    VGraph vg;
    vg.num_vertices = 2;
    vg.phi = {{1, 5}, {0, 0}};
    CHECK_THROWS_AS(validate_vgraph(vg, 2), std::invalid_argument);
  }
  SECTION("bad start vertex") {
    VGraph vg = trivial_vgraph(2);
    vg.v0 = 3;
    CHECK_THROWS_AS(validate_vgraph(vg, 2), std::invalid_argument);
  }
}

TEST_CASE("memory vgraph shifts input histories") {
  VGraph vg = memory_vgraph(2, 2);
  REQUIRE(vg.num_vertices == 4);
  CHECK(vg.phi[0b01][0] == 0b10);
  CHECK(vg.phi[0b01][1] == 0b11);
  CHECK(vg.phi[0b11][1] == 0b11);
  CHECK(vg.vertex_names[0b10] == "10");
  CHECK_THROWS_AS(memory_vgraph(2, 0), std::invalid_argument);
}

TEST_CASE("product graph shape") {
  SECTION("trivial vgraph copies the state structure") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.1));
    ProductGraph pg = build_product(fsc, trivial_vgraph(fsc.num_inputs));
    REQUIRE(pg.size() == 2);
    CHECK(pg.edges[pg.pack(0, 0)].size() == 2);  // one forced input, two outputs
    CHECK(pg.edges[pg.pack(1, 0)].size() == 4);
    CHECK(pg.feasible_inputs[pg.pack(0, 0)] == std::vector<int>{0});
    CHECK(pg.feasible_inputs[pg.pack(1, 0)] == std::vector<int>{0, 1});
  }
  SECTION("memory-1 product tracks both factors") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.2));
    ProductGraph pg = build_product(fsc, memory_vgraph(2, 1));
    REQUIRE(pg.size() == 4);
    size_t total = 0;
    for (int u = 0; u < pg.size(); ++u) total += pg.edges[u].size();
    CHECK(total == 12);
    // The forbidden input never leaves state 0 regardless of the vertex.
    for (int v = 0; v < 2; ++v) {
      for (const auto& e : pg.edges[pg.pack(0, v)]) CHECK(e.x == 0);
    }
    // Transitions advance both coordinates.
    for (const auto& e : pg.edges[pg.pack(1, 0)]) {
      if (e.x == 1) CHECK(e.to == pg.pack(0, 1));
    }
  }
  SECTION("zero-probability outputs produce no edges") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bec(0.0));
    ProductGraph pg = build_product(fsc, trivial_vgraph(fsc.num_inputs));
    for (int u = 0; u < pg.size(); ++u) {
      for (const auto& e : pg.edges[u]) CHECK(e.y != 2);
    }
  }
}

TEST_CASE("chain classification") {
  SECTION("interior q gives a single aperiodic class") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.1));
    ProductGraph pg = build_product(fsc, memory_vgraph(2, 1));
    ClassifyResult cls = classify(pg, uniform_qdist(fsc, memory_vgraph(2, 1), pg));
    CHECK(cls.single_class);
    CHECK(cls.aperiodic);
  }
  SECTION("swap vgraph on a one-state channel is periodic") {
    Fsc fsc = free_bsc(0.1);
    VGraph vg = swap_vgraph();
    ProductGraph pg = build_product(fsc, vg);
    ClassifyResult cls = classify(pg, uniform_qdist(fsc, vg, pg));
    CHECK(cls.single_class);
    CHECK_FALSE(cls.aperiodic);
  }
  SECTION("swap channel times swap vgraph splits into two classes") {
    Fsc fsc = swap_bsc(0.1);
    VGraph vg = swap_vgraph();
    ProductGraph pg = build_product(fsc, vg);
    ClassifyResult cls = classify(pg, uniform_qdist(fsc, vg, pg));
    CHECK_FALSE(cls.single_class);
    CHECK(cls.closed.size() == 2);
  }
}

TEST_CASE("stationary law of the lifted chain") {
  Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.1));
  VGraph vg = constraint_copy_vgraph(fsc);
  ProductGraph pg = build_product(fsc, vg);

  double a = 0.3;
  QDist q = from_policy(fsc, vg, binary_policy(fsc, {0.0, a}));
  StationaryDist stat = stationary(pg, q, fsc);
  // Diagonal two-vertex chain: pi(0,0) = a / (1 + a).
  CHECK(stat.pi[pg.pack(0, 0)] == Catch::Approx(a / (1 + a)).margin(1e-12));
  CHECK(stat.pi[pg.pack(1, 1)] == Catch::Approx(1.0 / (1 + a)).margin(1e-12));
  CHECK(stat.pi[pg.pack(0, 1)] == 0.0);
  CHECK(stat.balance_residual <= 1e-12);

  QDist uq = uniform_qdist(fsc, vg, pg);
  CHECK(stationary(pg, uq, fsc).balance_residual <= 1e-12);
}

TEST_CASE("single-letter bound equals the noise-free rate at the optimal chain") {
  Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.0));
  VGraph vg = constraint_copy_vgraph(fsc);
  double a_star = noiseless_capacity({1, kInf}).argmax.a;
  QDist q = from_policy(fsc, vg, binary_policy(fsc, {0.0, a_star}));
  double bound = single_letter_bound(fsc, vg, q);
  CHECK(bound == Catch::Approx(noiseless_capacity({1, kInf}).value).margin(1e-8));
}

TEST_CASE("single-letter bound never exceeds the dynamic program") {
  for (double p : {0.1, 0.25}) {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(p));
    VGraph vg = constraint_copy_vgraph(fsc);
    ProductGraph pg = build_product(fsc, vg);
    DpSolution sol = solve_average_reward(fsc);

    double from_uniform = single_letter_bound(fsc, vg, uniform_qdist(fsc, vg, pg));
    double from_optimal = single_letter_bound(fsc, vg, from_policy(fsc, vg, sol.policy));
    INFO("p=" << p);
    CHECK(from_uniform <= sol.rho + 1e-8);
    CHECK(from_optimal <= sol.rho + 1e-8);
    CHECK(from_optimal == Catch::Approx(sol.rho).margin(1e-8));
  }
}

TEST_CASE("symmetric noise erases the bound") {
  Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.5));
  VGraph vg = constraint_copy_vgraph(fsc);
  ProductGraph pg = build_product(fsc, vg);
  CHECK(std::abs(single_letter_bound(fsc, vg, uniform_qdist(fsc, vg, pg))) <= 1e-12);
  CHECK(std::abs(optimize_q(fsc, vg).value) <= 1e-9);
}

TEST_CASE("failure modes carry distinct types") {
  VGraph vg = swap_vgraph();
  SECTION("disconnected channel") {
    Fsc fsc = frozen_bsc(0.1);
    ProductGraph pg = build_product(fsc, trivial_vgraph(2));
    QDist q = uniform_qdist(fsc, trivial_vgraph(2), pg);
    CHECK_THROWS_AS(single_letter_bound(fsc, trivial_vgraph(2), q), NotConnectedError);
    CHECK_THROWS_AS(optimize_q(fsc, trivial_vgraph(2)), NotConnectedError);
  }
  SECTION("periodic product") {
    Fsc fsc = free_bsc(0.1);
    ProductGraph pg = build_product(fsc, vg);
    QDist q = uniform_qdist(fsc, vg, pg);
    CHECK_THROWS_AS(single_letter_bound(fsc, vg, q), PeriodicChainError);
    CHECK_THROWS_AS(optimize_q(fsc, vg), NoFeasibleQError);
  }
  SECTION("multiple closed classes") {
    Fsc fsc = swap_bsc(0.1);
    ProductGraph pg = build_product(fsc, vg);
    QDist q = uniform_qdist(fsc, vg, pg);
    CHECK_THROWS_AS(single_letter_bound(fsc, vg, q), NotSingleClassError);
    CHECK_THROWS_AS(optimize_q(fsc, vg), NoFeasibleQError);
  }
  SECTION("deterministic alternating policy is periodic") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.1));
    VGraph cc = constraint_copy_vgraph(fsc);
    QDist q = from_policy(fsc, cc, binary_policy(fsc, {0.0, 1.0}));
    CHECK_THROWS_AS(single_letter_bound(fsc, cc, q), PeriodicChainError);
  }
}

TEST_CASE("q search results") {
  SECTION("free channel recovers the memoryless capacity") {
    for (double p : {0.1, 0.3}) {
      Fsc fsc = free_bsc(p);
      OptimizedQ opt = optimize_q(fsc, trivial_vgraph(2));
      INFO("p=" << p);
      CHECK(opt.value == Catch::Approx(1.0 - binary_entropy(p)).margin(1e-6));
    }
  }
  SECTION("constraint copy matches the closed form") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.1));
    OptimizedQ opt = optimize_q(fsc, constraint_copy_vgraph(fsc));
    CHECK(opt.value == Catch::Approx(bsc_dinf_bound(1, 0.1).value).margin(1e-6));
  }
  SECTION("erasure constraint scales the noise-free rate") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bec(0.25));
    OptimizedQ opt = optimize_q(fsc, constraint_copy_vgraph(fsc));
    CHECK(opt.value == Catch::Approx(bec_bound({1, kInf}, 0.25).value).margin(1e-6));
  }
  SECTION("optimized value dominates the uniform start") {
    Fsc fsc = make_rll_dmc({2, 5}, DmcKind::bsc(0.15));
    VGraph vg = constraint_copy_vgraph(fsc);
    ProductGraph pg = build_product(fsc, vg);
    double uniform_value = single_letter_bound(fsc, vg, uniform_qdist(fsc, vg, pg));
    OptimizedQ opt = optimize_q(fsc, vg);
    CHECK(opt.value >= uniform_value - 1e-12);
  }
  SECTION("longer memory never hurts") {
    Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.1));
    double m1 = optimize_q(fsc, memory_vgraph(2, 1)).value;
    double m2 = optimize_q(fsc, memory_vgraph(2, 2)).value;
    CHECK(m2 >= m1 - 1e-6);
  }
}

TEST_CASE("bundle reports the classification it used") {
  Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.2));
  VGraph vg = constraint_copy_vgraph(fsc);
  ProductGraph pg = build_product(fsc, vg);
  VGraphBundle b = make_bundle(fsc, vg, uniform_qdist(fsc, vg, pg));
  CHECK(b.classification.single_class);
  CHECK(b.classification.aperiodic);
  CHECK(b.q.in_class_q);
  CHECK(b.q.aperiodic);
  CHECK(b.stat.balance_residual <= 1e-12);
  CHECK(b.v0 >= 0);
}

TEST_CASE("vgraph files round-trip") {
  Fsc fsc = make_rll_dmc({1, kInf}, DmcKind::bsc(0.1));
  VGraph vg = memory_vgraph(2, 2);
  auto path = std::filesystem::temp_directory_path() / "fscb_vgraph.json";
  {
    nlohmann::json j = write_vgraph_json(vg, fsc);
    std::ofstream out(path);
    out << j.dump(2);
  }
  VGraph loaded = read_vgraph_file(path.string(), fsc);
  std::filesystem::remove(path);
  CHECK(loaded.num_vertices == vg.num_vertices);
  CHECK(loaded.phi == vg.phi);
  CHECK(loaded.v0 == vg.v0);
}
