#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fscb/channel.hpp"
#include "fscb/channel_io.hpp"
#include "fscb/closed_form.hpp"
#include "fscb/dp.hpp"
#include "fscb/oracle.hpp"
#include "fscb/vgraph.hpp"
#include "fscb/vgraph_io.hpp"

namespace fscb::cli {

inline std::string fmt9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::string join9(const std::vector<double>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) out += ';';
    out += fmt9(values[i]);
  }
  return out;
}

/// Free parameters of a policy: for every state offering a choice, the mass
/// on each allowed input past the first. For binary channels this is the
/// per-state scalar the closed forms also report.
inline std::vector<double> policy_free_params(const Fsc& fsc, const Policy& policy) {
  std::vector<double> params;
  for (int s = 0; s < fsc.num_states; ++s) {
    auto xs = fsc.allowed_inputs(s);
    for (size_t i = 1; i < xs.size(); ++i) params.push_back(policy.rows[s][xs[i]]);
  }
  return params;
}

inline std::vector<double> closed_form_params(const BoundResult& r) {
  if (!r.argmax.a_vec.empty()) return r.argmax.a_vec;
  return {r.argmax.a};
}

struct ChannelSource {
  std::string family;  // "bsc" | "bec"; empty means a channel file
  int d = 0;
  std::string k = "inf";
  double param = 0.0;  // p or eps
  std::string channel_file;

  bool builtin() const { return !family.empty(); }
};

struct ResolvedChannel {
  Fsc fsc;
  bool builtin = false;
  RllSpec spec;
  DmcKind dmc;
  std::string family;  // "bsc" | "bec" | "file"
  std::string describe;
};

struct ChannelValidationError : std::runtime_error {
  ValidationReport report;
  explicit ChannelValidationError(ValidationReport rep)
      : std::runtime_error("channel failed validation"), report(std::move(rep)) {}
};

inline ResolvedChannel resolve_channel(const ChannelSource& src) {
  ResolvedChannel rc;
  if (src.builtin()) {
    if (src.family != "bsc" && src.family != "bec") {
      throw std::invalid_argument("unknown family '" + src.family + "' (want bsc or bec)");
    }
    rc.spec.d = src.d;
    rc.spec.k = RllSpec::parse_k(src.k);
    if (!rc.spec.valid()) throw std::invalid_argument("family requires 0 <= d < k");
    rc.dmc = src.family == "bsc" ? DmcKind::bsc(src.param) : DmcKind::bec(src.param);
    rc.fsc = make_rll_dmc(rc.spec, rc.dmc);
    rc.builtin = true;
    rc.family = src.family;
    rc.describe = src.family + " d=" + std::to_string(src.d) + " k=" + rc.spec.k_string() +
                  (src.family == "bsc" ? " p=" : " eps=") + fmt9(src.param);
  } else {
    if (src.channel_file.empty()) {
      throw std::invalid_argument("no channel given: use --family or --channel FILE");
    }
    rc.fsc = read_channel_file(src.channel_file);
    ValidationReport rep = validate(rc.fsc);
    if (!rep.ok()) throw ChannelValidationError(std::move(rep));
    rc.family = "file";
    rc.describe = "file " + src.channel_file + " (" + std::to_string(rc.fsc.num_states) +
                  " states, " + std::to_string(rc.fsc.num_inputs) + " inputs, " +
                  std::to_string(rc.fsc.num_outputs) + " outputs)";
  }
  return rc;
}

inline BoundResult closed_form_for(const ResolvedChannel& rc) {
  if (rc.family == "bsc") {
    return rc.spec.k_infinite() ? bsc_dinf_bound(rc.spec.d, rc.dmc.param)
                                : bsc_dk_bound(rc.spec.d, rc.spec.k, rc.dmc.param);
  }
  return bec_bound(rc.spec, rc.dmc.param);
}

struct VGraphChoice {
  std::string file;
  std::string family = "constraint";  // trivial | constraint | memory
  int memory = 1;
};

inline VGraph resolve_vgraph(const VGraphChoice& choice, const Fsc& fsc) {
  if (!choice.file.empty()) return read_vgraph_file(choice.file, fsc);
  if (choice.family == "trivial") return trivial_vgraph(fsc.num_inputs);
  if (choice.family == "memory") return memory_vgraph(fsc.num_inputs, choice.memory);
  if (choice.family == "constraint") return constraint_copy_vgraph(fsc);
  throw std::invalid_argument("unknown V-graph family '" + choice.family +
                              "' (want trivial, constraint, or memory)");
}

/// Free parameters of a Q distribution, ordered by packed product vertex.
inline std::vector<double> q_free_params(const Fsc& fsc, const VGraph& vg, const QDist& q) {
  ProductGraph pg = build_product(fsc, vg);
  std::vector<double> params;
  for (int u = 0; u < pg.size(); ++u) {
    const auto& xs = pg.feasible_inputs[u];
    for (size_t i = 1; i < xs.size(); ++i) {
      params.push_back(q(pg.state_of(u), pg.vertex_of(u), xs[i]));
    }
  }
  return params;
}

struct BoundArgs {
  ChannelSource src;
  std::string method = "dp";  // dp | closed | vgraph | all
  VGraphChoice vgraph;
  SolverOptions solver;
};

inline int run_bound(const BoundArgs& args, std::ostream& out, std::ostream& err) {
  ResolvedChannel rc;
  try {
    rc = resolve_channel(args.src);
  } catch (const ChannelValidationError& e) {
    err << "error: channel failed validation\n" << e.report.to_string();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  bool want_dp = args.method == "dp" || args.method == "all";
  bool want_closed = args.method == "closed" || args.method == "closed_form" ||
                     (args.method == "all" && rc.builtin);
  bool want_vgraph = args.method == "vgraph";
  if (!want_dp && !want_closed && !want_vgraph) {
    err << "error: unknown method '" << args.method << "' (want dp, closed, vgraph, all)\n";
    return 2;
  }
  if (want_closed && !rc.builtin) {
    err << "error: closed forms exist only for builtin families\n";
    return 2;
  }

  out << "channel: " << rc.describe << "\n";
  bool ok = true;
  double dp_value = 0.0;

  if (want_dp) {
    DpSolution sol;
    try {
      sol = solve_average_reward(rc.fsc, args.solver);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
    dp_value = sol.rho;
    out << "method: dp\n";
    out << "rho: " << fmt9(sol.rho) << "\n";
    out << "argmax: " << join9(policy_free_params(rc.fsc, sol.policy)) << "\n";
    out << "residual: " << fmt9(sol.bellman_residual) << "\n";
    out << "iterations: " << sol.iterations << "\n";
    if (!sol.converged) {
      out << "converged: no\n";
      ok = false;
    }
    if (sol.bellman_residual > args.solver.tolerance) ok = false;
  }

  if (want_closed) {
    BoundResult cf = closed_form_for(rc);
    out << "method: closed_form\n";
    out << "value: " << fmt9(cf.value) << "\n";
    out << "argmax: " << join9(closed_form_params(cf)) << "\n";
    if (want_dp) {
      double diff = std::abs(dp_value - cf.value);
      out << "abs_diff: " << fmt9(diff) << "\n";
      if (diff > 1e-6) ok = false;
    }
  }

  if (want_vgraph) {
    try {
      VGraph vg = resolve_vgraph(args.vgraph, rc.fsc);
      OptimizedQ best = optimize_q(rc.fsc, vg, QOptions{16, args.solver.seed});
      VGraphBundle bundle = make_bundle(rc.fsc, vg, best.q);
      out << "method: vgraph\n";
      out << "vertices: " << vg.num_vertices << "\n";
      out << "value: " << fmt9(best.value) << "\n";
      out << "argmax: " << join9(q_free_params(rc.fsc, vg, best.q)) << "\n";
      out << "single_class: " << (bundle.classification.single_class ? "yes" : "no") << "\n";
      out << "aperiodic: " << (bundle.classification.aperiodic ? "yes" : "no") << "\n";
      out << "balance_residual: " << fmt9(bundle.stat.balance_residual) << "\n";
      if (bundle.v0 >= 0) out << "v0: " << vg.vertex_names[bundle.v0] << "\n";
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
  }

  out << "status: " << (ok ? "OK" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

struct SweepArgs {
  ChannelSource src;  // family part only; the param field is ignored
  std::string param = "p";
  double from = 0.0;
  double to = 0.5;
  int points = 0;
  std::vector<std::string> methods = {"dp"};
  std::string out_file;
  VGraphChoice vgraph;
  SolverOptions solver;
};

struct SweepRow {
  std::string family;
  int d = 0;
  std::string k;
  double param = 0.0;
  double value = 0.0;
  std::string method;
  double residual = 0.0;
  std::string argmax;
};

inline int sweep_thread_count(int points) {
  int n = 0;
  if (const char* env = std::getenv("FSC_BOUNDS_THREADS")) {
    n = std::atoi(env);
  }
  if (n < 1) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  return std::min(n, points);
}

inline int run_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  if (!args.src.builtin()) {
    err << "error: sweep needs a builtin family (--family bsc|bec)\n";
    return 2;
  }
  if (args.points < 1 || args.to < args.from) {
    err << "error: empty parameter range\n";
    return 2;
  }
  for (const auto& m : args.methods) {
    if (m != "dp" && m != "closed_form" && m != "vgraph") {
      err << "error: unknown sweep method '" << m << "'\n";
      return 2;
    }
  }

  std::vector<double> grid(args.points);
  for (int i = 0; i < args.points; ++i) {
    grid[i] = args.points == 1
                  ? args.from
                  : args.from + (args.to - args.from) * i / (args.points - 1);
  }

  std::vector<std::vector<SweepRow>> rows(args.points);
  std::atomic<int> cursor{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    for (;;) {
      int i = cursor.fetch_add(1);
      if (i >= args.points || failed.load()) break;
      ChannelSource src = args.src;
      src.param = grid[i];
      try {
        ResolvedChannel rc = resolve_channel(src);
        for (const auto& method : args.methods) {
          SweepRow row;
          row.family = rc.family;
          row.d = rc.spec.d;
          row.k = rc.spec.k_string();
          row.param = grid[i];
          row.method = method;
          if (method == "dp") {
            DpSolution sol = solve_average_reward(rc.fsc, args.solver);
            row.value = sol.rho;
            row.residual = sol.bellman_residual;
            row.argmax = join9(policy_free_params(rc.fsc, sol.policy));
          } else if (method == "closed_form") {
            BoundResult cf = closed_form_for(rc);
            row.value = cf.value;
            row.residual = 0.0;
            row.argmax = join9(closed_form_params(cf));
          } else {
            VGraph vg = resolve_vgraph(args.vgraph, rc.fsc);
            OptimizedQ best = optimize_q(rc.fsc, vg, QOptions{16, args.solver.seed});
            ProductGraph pg = build_product(rc.fsc, vg);
            row.value = best.value;
            row.residual = stationary(pg, best.q, rc.fsc).balance_residual;
            row.argmax = join9(q_free_params(rc.fsc, vg, best.q));
          }
          rows[i].push_back(std::move(row));
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
        break;
      }
    }
  };

  int threads = sweep_thread_count(args.points);
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  if (failed.load()) {
    err << "error: " << first_error << "\n";
    return 2;
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (!args.out_file.empty()) {
    file.open(args.out_file);
    if (!file) {
      err << "error: cannot open " << args.out_file << " for writing\n";
      return 2;
    }
    sink = &file;
  }
  *sink << "family,d,k,param,value,method,residual,argmax\n";
  for (const auto& point : rows) {
    for (const auto& row : point) {
      *sink << row.family << ',' << row.d << ',' << row.k << ',' << fmt9(row.param) << ','
            << fmt9(row.value) << ',' << row.method << ',' << fmt9(row.residual) << ','
            << row.argmax << "\n";
    }
  }
  return 0;
}

struct VerifyArgs {
  ChannelSource src;
  std::string solution_file;
  double rho_offset = 0.0;
  bool oracle = false;
  SolverOptions solver;
};

inline int run_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  bool have_channel = args.src.builtin() || !args.src.channel_file.empty();
  if (!have_channel && !args.oracle) {
    err << "error: nothing to verify: give a channel and/or --oracle\n";
    return 2;
  }
  bool all_ok = true;

  if (have_channel) {
    ResolvedChannel rc;
    try {
      rc = resolve_channel(args.src);
    } catch (const ChannelValidationError& e) {
      err << "error: channel failed validation\n" << e.report.to_string();
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
    out << "channel: " << rc.describe << "\n";

    double rho = 0.0;
    std::vector<double> h;
    if (!args.solution_file.empty()) {
      try {
        std::ifstream in(args.solution_file);
        if (!in) throw ParseError("cannot open solution file: " + args.solution_file);
        nlohmann::json j;
        in >> j;
        rho = j.at("rho").get<double>();
        h = j.at("h").get<std::vector<double>>();
      } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
      }
      if (static_cast<int>(h.size()) != rc.fsc.num_states) {
        err << "error: h has " << h.size() << " entries but the channel has "
            << rc.fsc.num_states << " states\n";
        return 2;
      }
    } else {
      DpSolution sol = solve_average_reward(rc.fsc, args.solver);
      rho = sol.rho;
      h = sol.h;
      out << "solved: rho " << fmt9(rho) << ", " << sol.iterations << " iterations\n";
    }
    rho += args.rho_offset;
    if (args.rho_offset != 0.0) out << "rho offset: " << fmt9(args.rho_offset) << "\n";

    std::vector<double> gaps = bellman_gaps(rc.fsc, rho, h, args.solver);
    double worst = 0.0;
    for (int s = 0; s < rc.fsc.num_states; ++s) {
      out << "state " << rc.fsc.state_names[s] << ": residual " << fmt9(std::abs(gaps[s]))
          << "\n";
      worst = std::max(worst, std::abs(gaps[s]));
    }
    out << "max residual: " << fmt9(worst) << "\n";
    out << "tolerance: " << fmt9(args.solver.tolerance) << "\n";
    bool pass = worst <= args.solver.tolerance;
    out << (pass ? "PASS" : "FAIL") << "\n";
    all_ok = all_ok && pass;
  }

  if (args.oracle) {
    int passed = 0;
    for (std::uint64_t seed : kConservationSeeds) {
      Fsc fsc = make_random_small_fsc(seed);
      int n = conservation_horizon(seed);
      HistoryLaw law = random_history_law(fsc.num_inputs, n,
                                          seed * 1000003ULL + args.solver.seed);
      SequenceStats stats = exact_sequence_stats(fsc, law, n);
      double gap = std::abs(stats.mutual_info -
                            (stats.reverse_di + stats.forward_lagged_di));
      bool ok = gap <= 1e-10 && stats.mutual_info >= stats.reverse_di - 1e-10 &&
                stats.reverse_di >= stats.reward_sum - 1e-10;
      out << "seed " << seed << " N=" << n << ": conservation "
          << (ok ? "PASS" : "FAIL") << " (gap " << fmt9(gap) << ")\n";
      if (ok) ++passed;
    }
    out << passed << "/" << kConservationSeeds.size() << " PASS\n";
    all_ok = all_ok && passed == static_cast<int>(kConservationSeeds.size());
  }
  return all_ok ? 0 : 1;
}

}  // namespace fscb::cli
