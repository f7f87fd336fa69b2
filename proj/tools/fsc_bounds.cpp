// Command-line front end: capacity lower bounds for input-driven
// finite-state channels. See README.md for the file formats.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fscb/commands.hpp"

namespace {

void add_solver_flags(CLI::App* cmd, fscb::SolverOptions* solver) {
  cmd->add_option("--tol", solver->tolerance, "Bellman residual tolerance");
  cmd->add_option("--max-iters", solver->max_iterations, "value-iteration cap");
  cmd->add_option("--grid", solver->grid_points, "coarse grid points for the inner maximizer");
  cmd->add_option("--restarts", solver->restarts, "optimizer restarts");
  cmd->add_option("--seed", solver->seed, "random seed");
}

void add_channel_flags(CLI::App* cmd, fscb::cli::ChannelSource* src) {
  cmd->add_option("--family", src->family, "builtin family: bsc or bec");
  cmd->add_option("--d", src->d, "minimum run of 0s between 1s");
  cmd->add_option("--k", src->k, "maximum run of 0s, or 'inf'");
  cmd->add_option("--p", src->param, "BSC crossover probability");
  cmd->add_option("--eps", src->param, "BEC erasure probability");
  cmd->add_option("--channel", src->channel_file, "channel spec file (JSON)");
}

void add_vgraph_flags(CLI::App* cmd, fscb::cli::VGraphChoice* choice) {
  cmd->add_option("--vgraph", choice->file, "V-graph file (JSON)");
  cmd->add_option("--vgraph-family", choice->family,
                  "builtin V-graph: trivial, constraint, or memory");
  cmd->add_option("--vgraph-memory", choice->memory, "memory depth for --vgraph-family memory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capacity lower bounds for input-driven finite-state channels"};
  app.require_subcommand(1);

  fscb::cli::BoundArgs bound;
  CLI::App* cmd_bound = app.add_subcommand("bound", "compute a bound for one channel");
  add_channel_flags(cmd_bound, &bound.src);
  cmd_bound->add_option("--method", bound.method, "dp, closed, vgraph, or all");
  add_vgraph_flags(cmd_bound, &bound.vgraph);
  add_solver_flags(cmd_bound, &bound.solver);

  fscb::cli::SweepArgs sweep;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "sweep a parameter range, emit CSV");
  add_channel_flags(cmd_sweep, &sweep.src);
  cmd_sweep->add_option("--param", sweep.param, "parameter name (p or eps)");
  cmd_sweep->add_option("--from", sweep.from, "range start");
  cmd_sweep->add_option("--to", sweep.to, "range end");
  cmd_sweep->add_option("--points", sweep.points, "grid size")->required();
  cmd_sweep->add_option("--method", sweep.methods,
                        "methods to run: dp, closed_form, vgraph (repeatable)");
  cmd_sweep->add_option("--out", sweep.out_file, "output file (default stdout)");
  add_vgraph_flags(cmd_sweep, &sweep.vgraph);
  add_solver_flags(cmd_sweep, &sweep.solver);

  fscb::cli::VerifyArgs verify;
  CLI::App* cmd_verify = app.add_subcommand("verify", "check a solution against the optimality equation");
  add_channel_flags(cmd_verify, &verify.src);
  cmd_verify->add_option("--solution", verify.solution_file,
                         "JSON file with rho and h to check instead of solving");
  cmd_verify->add_option("--rho-offset", verify.rho_offset, "perturb rho before checking");
  cmd_verify->add_flag("--oracle", verify.oracle, "run the conservation-law suite");
  add_solver_flags(cmd_verify, &verify.solver);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_bound->parsed()) return fscb::cli::run_bound(bound, std::cout, std::cerr);
    if (cmd_sweep->parsed()) return fscb::cli::run_sweep(sweep, std::cout, std::cerr);
    return fscb::cli::run_verify(verify, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
