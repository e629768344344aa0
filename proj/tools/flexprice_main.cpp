#include <CLI11.hpp>

#include "flexprice/cli.hpp"

using flexprice::cli::RunConfig;

int main(int argc, char** argv) {
  CLI::App app{"grid-aware dynamic tariff coordination"};
  app.require_subcommand(1);

  RunConfig cfg;
  double rho0 = 0.0, tol_abs = 0.0, tol_rel = 0.0;
  int max_iter = 0, budget = 0;
  std::uint64_t seed = 0;
  std::string rho_grid;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--scenario", cfg.scenario_path, "scenario json file")
        ->envname("FLEXPRICE_SCENARIO");
    auto* out = sub->add_option("--out", cfg.out_dir, "output directory")
                    ->envname("FLEXPRICE_OUT");
    if (needs_out) out->required();
    sub->add_option("--manifest", cfg.manifest_path, "replay a run from its manifest");
    sub->add_option("--seed", seed, "profile generator seed")->envname("FLEXPRICE_SEED");
    sub->add_flag("--no-coordination", cfg.no_coordination, "disable DSO coordination")
        ->envname("FLEXPRICE_NO_COORDINATION");
    sub->add_option("--rho0", rho0, "initial penalty")->envname("FLEXPRICE_RHO0");
    sub->add_option("--max-iter", max_iter, "day-ahead coordination iteration cap")
        ->envname("FLEXPRICE_MAX_ITER");
    sub->add_option("--budget-iters", budget, "per-cycle MPC iteration budget")
        ->envname("FLEXPRICE_BUDGET_ITERS");
    sub->add_option("--tol-abs", tol_abs, "absolute residual tolerance")
        ->envname("FLEXPRICE_TOL_ABS");
    sub->add_option("--tol-rel", tol_rel, "relative residual tolerance")
        ->envname("FLEXPRICE_TOL_REL");
    sub->add_flag("--serial", cfg.serial, "run the fan-out and batch kernels serially");
  };

  add_common(app.add_subcommand("validate", "check a scenario file"), false);
  add_common(app.add_subcommand("dayahead", "day-ahead coordination on forecasts"), true);
  add_common(app.add_subcommand("mpc", "day-ahead plus receding-horizon reruns"), true);
  add_common(app.add_subcommand("rt", "full closed loop with 30 s control"), true);
  add_common(app.add_subcommand("full", "closed loop plus cost accounting"), true);
  auto* sweep = app.add_subcommand("rho-sweep", "constant-rho convergence study");
  add_common(sweep, true);
  sweep->add_option("--rho-grid", rho_grid, "comma-separated rho values");
  add_common(app.add_subcommand("compare", "cost table with vs without coordination"), true);

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  cfg.subcommand = sub->get_name();
  if (sub->count("--seed")) cfg.seed = seed;
  if (sub->count("--rho0")) cfg.rho0 = rho0;
  if (sub->count("--max-iter")) cfg.max_iter = max_iter;
  if (sub->count("--budget-iters")) cfg.budget_iters = budget;
  if (sub->count("--tol-abs")) cfg.tol_abs = tol_abs;
  if (sub->count("--tol-rel")) cfg.tol_rel = tol_rel;
  if (!rho_grid.empty()) {
    std::stringstream ss(rho_grid);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.rho_grid.push_back(std::stod(tok));
  }
  return flexprice::cli::run_cli(cfg);
}
