#pragma once

#include <optional>
#include <string>
#include <vector>

namespace flexprice::cli {

// Resolved invocation; the binary fills this from flags/env, tests fill it
// directly. Every run echoes the resolved form into out/manifest.json, and
// any subcommand can be replayed from a manifest.
struct RunConfig {
  std::string subcommand;  // validate | dayahead | mpc | rt | full | rho-sweep | compare
  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool no_coordination = false;
  std::optional<double> rho0;
  std::optional<int> max_iter;      // day-ahead coordination cap
  std::optional<int> budget_iters;  // per-cycle MPC budget
  std::optional<double> tol_abs, tol_rel;
  std::vector<double> rho_grid;  // rho-sweep only; empty = default grid
  bool serial = false;           // disable the OpenMP fan-out
  std::string manifest_path;     // replay source, optional
};

// Executes the subcommand, writes artifacts under out_dir, returns the
// process exit code. Validation problems produce a machine-readable report
// and a nonzero code instead of an exception.
int run_cli(const RunConfig& cfg);

}  // namespace flexprice::cli
