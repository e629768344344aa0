#include "flexprice/cli.hpp"

#include <filesystem>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "flexprice/sim.hpp"
#include "flexprice/util.hpp"

namespace flexprice::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

exec::Mode mode_of(const RunConfig& cfg) {
  return cfg.serial ? exec::Mode::Serial : exec::Mode::Parallel;
}

void apply_overrides(sim::Scenario& sc, const RunConfig& cfg) {
  if (cfg.seed) sc.seed = *cfg.seed;
  if (cfg.no_coordination) sc.coordination = false;
  if (cfg.rho0) sc.admm.rho0 = *cfg.rho0;
  if (cfg.tol_abs) sc.admm.eps_abs = *cfg.tol_abs;
  if (cfg.tol_rel) sc.admm.eps_rel = *cfg.tol_rel;
  if (cfg.budget_iters) sc.timeline.admm_budget_iters = *cfg.budget_iters;
}

json manifest_json(const RunConfig& cfg) {
  json m;
  m["subcommand"] = cfg.subcommand;
  m["scenario"] = cfg.scenario_path;
  m["out"] = cfg.out_dir;
  m["serial"] = cfg.serial;
  m["no_coordination"] = cfg.no_coordination;
  if (cfg.seed) m["seed"] = *cfg.seed;
  if (cfg.rho0) m["rho0"] = *cfg.rho0;
  if (cfg.max_iter) m["max_iter"] = *cfg.max_iter;
  if (cfg.budget_iters) m["budget_iters"] = *cfg.budget_iters;
  if (cfg.tol_abs) m["tol_abs"] = *cfg.tol_abs;
  if (cfg.tol_rel) m["tol_rel"] = *cfg.tol_rel;
  if (!cfg.rho_grid.empty()) m["rho_grid"] = cfg.rho_grid;
  return m;
}

RunConfig config_from_manifest(const std::string& path, const RunConfig& flags) {
  json m = json::parse(util::read_file(path));
  RunConfig cfg;
  cfg.subcommand = m.value("subcommand", "");
  cfg.scenario_path = m.value("scenario", "");
  cfg.out_dir = flags.out_dir.empty() ? m.value("out", "") : flags.out_dir;
  cfg.serial = m.value("serial", false);
  cfg.no_coordination = m.value("no_coordination", false);
  if (m.contains("seed")) cfg.seed = m["seed"].get<std::uint64_t>();
  if (m.contains("rho0")) cfg.rho0 = m["rho0"].get<double>();
  if (m.contains("max_iter")) cfg.max_iter = m["max_iter"].get<int>();
  if (m.contains("budget_iters")) cfg.budget_iters = m["budget_iters"].get<int>();
  if (m.contains("tol_abs")) cfg.tol_abs = m["tol_abs"].get<double>();
  if (m.contains("tol_rel")) cfg.tol_rel = m["tol_rel"].get<double>();
  if (m.contains("rho_grid")) cfg.rho_grid = m["rho_grid"].get<std::vector<double>>();
  if (!flags.subcommand.empty() && flags.subcommand != cfg.subcommand)
    throw std::runtime_error("manifest subcommand '" + cfg.subcommand +
                             "' does not match the invoked one");
  return cfg;
}

void write(const std::string& dir, const std::string& name, const std::string& content) {
  util::write_file((fs::path(dir) / name).string(), content);
}

util::Table admm_trace_table(const std::vector<coord::IterationRecord>& trace, int cycle = -1) {
  util::Table t;
  t.columns = {"k", "rho", "r_max", "s_max", "eps_pri", "eps_dual", "r_lin", "relinearized"};
  if (cycle >= 0) t.columns.insert(t.columns.begin(), "cycle");
  for (const auto& r : trace) {
    std::vector<double> row;
    if (cycle >= 0) row.push_back(cycle);
    row.insert(row.end(), {static_cast<double>(r.k), r.rho, r.r_max, r.s_max, r.eps_pri,
                           r.eps_dual, r.r_lin, r.relinearized ? 1.0 : 0.0});
    t.rows.push_back(row);
  }
  return t;
}

json voltage_summary(const grid::PowerFlowSolution& sol, const sim::Scenario& sc) {
  json v;
  int above = 0, below = 0;
  double vmax = 0.0, vmin = 1e9, qs = 0.0;
  const int slack = sc.network.slack_index();
  for (int t = 0; t < sol.v.rows(); ++t) {
    for (int b = 0; b < sol.v.cols(); ++b) {
      if (b == slack) continue;
      vmax = std::max(vmax, sol.v(t, b));
      vmin = std::min(vmin, sol.v(t, b));
      if (sol.v(t, b) > sc.limits.v_max) ++above;
      if (sol.v(t, b) < sc.limits.v_min) ++below;
    }
    qs = std::max(qs, std::abs(sol.q_slack(t)));
  }
  v["max_voltage_pu"] = vmax;
  v["min_voltage_pu"] = vmin;
  v["samples_above_vmax"] = above;
  v["samples_below_vmin"] = below;
  v["max_abs_q_slack_pu"] = qs;
  v["power_flow_converged"] = sol.converged;
  return v;
}

json report_json(const coord::CoordinationReport& rep, const sim::Scenario& sc) {
  json r;
  r["status"] = rep.status == coord::CoordinationStatus::Converged ? "converged" : "timeout";
  r["iterations"] = rep.iterations;
  r["final_r_max"] = rep.final_r_max;
  r["final_s_max"] = rep.final_s_max;
  r["final_rho"] = rep.final_rho;
  r["final_r_lin"] = rep.final_r_lin;
  r["relinearizations"] = rep.relinearizations;
  json rows = json::array();
  for (size_t i = 0; i < sc.prosumers.size(); ++i) {
    json p;
    p["name"] = sc.prosumers[i].name;
    p["cost_without_chf"] = rep.cost_without_chf.size() ? rep.cost_without_chf(i) : 0.0;
    p["cost_with_chf"] = rep.cost_with_chf.size() ? rep.cost_with_chf(i) : 0.0;
    p["compensation_chf"] = rep.compensation_chf.size() ? rep.compensation_chf(i) : 0.0;
    rows.push_back(p);
  }
  r["prosumers"] = rows;
  r["total_without_chf"] = rep.total_without;
  r["total_with_chf"] = rep.total_with;
  r["total_compensation_chf"] = rep.total_compensation;
  return r;
}

std::string cost_table_csv(const std::vector<sim::CostRow>& rows) {
  std::ostringstream ss;
  ss << "prosumer,without_chf,with_chf,difference_chf,compensation_chf\n";
  double a = 0, b = 0, c = 0, d = 0;
  for (const auto& r : rows) {
    ss << r.name << "," << util::fmt_double(r.without_chf) << "," << util::fmt_double(r.with_chf)
       << "," << util::fmt_double(r.difference_chf) << ","
       << util::fmt_double(r.compensation_chf) << "\n";
    a += r.without_chf;
    b += r.with_chf;
    c += r.difference_chf;
    d += r.compensation_chf;
  }
  ss << "TOTAL," << util::fmt_double(a) << "," << util::fmt_double(b) << ","
     << util::fmt_double(c) << "," << util::fmt_double(d) << "\n";
  return ss.str();
}

void write_dayahead_artifacts(const std::string& out, const sim::Scenario& sc,
                              const sim::DayAheadResult& da) {
  const int k = sc.timeline.horizon();
  const int n = static_cast<int>(sc.prosumers.size());

  json rep = report_json(da.report, sc);
  rep["coordinated"] = da.coordinated;
  rep["voltage_summary"] = voltage_summary(da.oracle, sc);
  write(out, "dayahead_report.json", rep.dump(2) + "\n");
  write(out, "admm_trace_dayahead.csv", admm_trace_table(da.report.trace).to_csv());

  util::Table sched;
  sched.columns = {"step", "t_s"};
  for (int i = 0; i < n; ++i) {
    const std::string nm = sc.prosumers[i].name;
    for (const char* f : {"p_kw", "q_kvar", "p_b_kw", "q_b_kvar", "p_pv_kw", "soc"})
      sched.columns.push_back(nm + "." + f);
  }
  for (int t = 0; t < k; ++t) {
    std::vector<double> row = {static_cast<double>(t),
                               sc.timeline.t_start_s + t * sc.timeline.dt_plan_s};
    for (int i = 0; i < n; ++i) {
      const auto& p = da.plans[i];
      row.insert(row.end(), {p.demand.p(t), p.demand.q(t), p.resources.p_b(t),
                             p.resources.q_b(t), p.resources.p_pv(t), p.resources.soc(t)});
    }
    sched.rows.push_back(row);
  }
  write(out, "planned_schedules.csv", sched.to_csv());

  util::Table volt;
  volt.columns = {"step", "t_s"};
  for (const auto& b : sc.network.buses) volt.columns.push_back("v_" + b.id);
  volt.columns.push_back("p_slack_pu");
  volt.columns.push_back("q_slack_pu");
  for (int t = 0; t < k; ++t) {
    std::vector<double> row = {static_cast<double>(t),
                               sc.timeline.t_start_s + t * sc.timeline.dt_plan_s};
    for (int b = 0; b < da.oracle.v.cols(); ++b) row.push_back(da.oracle.v(t, b));
    row.push_back(da.oracle.p_slack(t));
    row.push_back(da.oracle.q_slack(t));
    volt.rows.push_back(row);
  }
  write(out, "planned_voltages.csv", volt.to_csv());

  // consumption-dependent active-power price at the chosen demand, CHF/kWh
  util::Table price;
  price.columns = {"step", "t_s"};
  for (int i = 0; i < n; ++i) price.columns.push_back(sc.prosumers[i].name + ".chf_per_kwh");
  price.columns.push_back("base.chf_per_kwh");
  const double dt_h = sc.timeline.dt_plan_hours();
  for (int t = 0; t < k; ++t) {
    std::vector<double> row = {static_cast<double>(t),
                               sc.timeline.t_start_s + t * sc.timeline.dt_plan_s};
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd tt = da.report.signals[i].tariff_at(da.schedules[i]);
      row.push_back(tt(2 * t) / dt_h);
    }
    row.push_back(da.tariff(2 * t) / dt_h);
    price.rows.push_back(row);
  }
  write(out, "price_signals.csv", price.to_csv());
}

void write_trace_artifacts(const std::string& out, const sim::Scenario& sc,
                           const sim::TraceLog& log, const char* trace_name) {
  const int n = static_cast<int>(sc.prosumers.size());
  util::Table t;
  t.columns = {"t_s"};
  for (const auto& b : sc.network.buses) t.columns.push_back("v_" + b.id);
  t.columns.push_back("p_slack_pu");
  t.columns.push_back("q_slack_pu");
  for (int i = 0; i < n; ++i) {
    const std::string nm = sc.prosumers[i].name;
    for (const char* f : {"soc", "p_b_kw", "q_b_kvar", "p_pv_kw", "p_dem_kw", "q_dem_kvar"})
      t.columns.push_back(nm + "." + f);
  }
  for (const auto& r : log.rt) {
    std::vector<double> row = {r.t_s};
    for (int b = 0; b < r.v_bus.size(); ++b) row.push_back(r.v_bus(b));
    row.push_back(r.p_slack);
    row.push_back(r.q_slack);
    for (int i = 0; i < n; ++i)
      row.insert(row.end(),
                 {r.soc(i), r.p_b(i), r.q_b(i), r.p_pv(i), r.p_dem(i), r.q_dem(i)});
    t.rows.push_back(row);
  }
  write(out, trace_name, t.to_csv());

  util::Table m;
  m.columns = {"cycle", "t_s", "converged", "iterations", "final_r_max", "final_s_max",
               "final_rho", "relinearizations", "reused_previous"};
  for (const auto& rec : log.mpc)
    m.rows.push_back({static_cast<double>(rec.cycle), rec.t_s,
                      rec.report.status == coord::CoordinationStatus::Converged ? 1.0 : 0.0,
                      static_cast<double>(rec.report.iterations), rec.report.final_r_max,
                      rec.report.final_s_max, rec.report.final_rho,
                      static_cast<double>(rec.report.relinearizations),
                      rec.reused_previous ? 1.0 : 0.0});
  write(out, "mpc_trace.csv", m.to_csv());

  util::Table a;
  bool first = true;
  for (const auto& rec : log.mpc) {
    util::Table part = admm_trace_table(rec.report.trace, rec.cycle);
    if (first) {
      a.columns = part.columns;
      first = false;
    }
    for (auto& row : part.rows) a.rows.push_back(row);
  }
  write(out, "mpc_admm_trace.csv", a.to_csv());
}

int cmd_validate(const RunConfig& cfg, const sim::Scenario* sc,
                 const std::vector<std::string>& load_errors) {
  std::vector<std::string> errs = load_errors;
  if (sc) {
    auto more = sim::validate_scenario(*sc);
    errs.insert(errs.end(), more.begin(), more.end());
  }
  json rep;
  rep["scenario"] = cfg.scenario_path;
  rep["valid"] = errs.empty();
  rep["violations"] = errs;
  if (!cfg.out_dir.empty()) write(cfg.out_dir, "validation_report.json", rep.dump(2) + "\n");
  std::cout << rep.dump(2) << "\n";
  return errs.empty() ? 0 : 2;
}

int cmd_rho_sweep(const RunConfig& cfg, const sim::Scenario& sc_in) {
  sim::Scenario sc = sc_in;
  std::vector<double> grid = cfg.rho_grid;
  if (grid.empty()) grid = {1e-2, 3.16e-2, 1e-1, 3.16e-1, 1.0, 3.16, 10.0, 31.6, 100.0};
  const exec::Mode mode = mode_of(cfg);

  sim::PlanningSetup setup = sim::day_ahead_setup(sc, mode);
  coord::OracleHooks hooks = sim::oracle_hooks(sc, setup, mode);

  util::Table t;
  t.columns = {"rho", "final_r_max", "final_s_max", "extra_fees_chf", "max_violation_pu"};
  for (double rho : grid) {
    coord::AdmmConfig acfg = sc.admm;
    acfg.rho0 = rho;
    acfg.adaptive_rho = false;  // constant-rho study
    acfg.max_iter = 80;
    acfg.eps_abs = 0.0;  // run the full 80 iterations
    acfg.eps_rel = 0.0;
    acfg.mode = mode;
    coord::CoordinationReport rep = coord::run_coordination(
        setup.problems, setup.tariff, setup.lin, acfg, hooks, nullptr, nullptr, &setup.baselines);
    std::vector<Eigen::VectorXd> xs(rep.responses.size());
    for (size_t i = 0; i < xs.size(); ++i) xs[i] = rep.responses[i].demand.x;
    double viol = 0.0;
    Eigen::VectorXd g = grid::evaluate_constraints_oracle(sc.network, setup.lin, sc.limits,
                                                          setup.placement, xs, setup.slack_plan);
    viol = std::max(0.0, g.maxCoeff());
    t.rows.push_back({rho, rep.final_r_max, rep.final_s_max, rep.total_compensation, viol});
    std::cout << "rho=" << util::fmt_double(rho) << " r=" << util::fmt_double(rep.final_r_max)
              << " s=" << util::fmt_double(rep.final_s_max)
              << " fees=" << util::fmt_double(rep.total_compensation)
              << " viol=" << util::fmt_double(viol) << "\n";
  }
  write(cfg.out_dir, "rho_sweep.csv", t.to_csv());
  return 0;
}

int cmd_compare(const RunConfig& cfg, const sim::Scenario& sc_in) {
  const exec::Mode mode = mode_of(cfg);
  sim::Scenario with = sc_in;
  with.coordination = true;
  sim::Scenario without = sc_in;
  without.coordination = false;
  sim::DayAheadResult da_with = sim::run_day_ahead(with, mode);
  sim::DayAheadResult da_without = sim::run_day_ahead(without, mode);

  std::vector<sim::CostRow> rows;
  for (size_t i = 0; i < sc_in.prosumers.size(); ++i) {
    sim::CostRow r;
    r.name = sc_in.prosumers[i].name;
    r.without_chf = da_without.report.cost_with_chf(i);
    r.with_chf = da_with.report.cost_with_chf(i);
    r.difference_chf = r.with_chf - r.without_chf;
    r.compensation_chf = da_with.report.compensation_chf(i);
    rows.push_back(r);
  }
  const std::string csv = cost_table_csv(rows);
  write(cfg.out_dir, "cost_table.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_run(const RunConfig& cfg, const sim::Scenario& sc) {
  const exec::Mode mode = mode_of(cfg);
  sim::Scenario scenario = sc;
  if (cfg.subcommand == "dayahead" && cfg.max_iter)
    scenario.timeline.admm_budget_iters = *cfg.max_iter;

  sim::DayAheadResult da = sim::run_day_ahead(scenario, mode);
  write_dayahead_artifacts(cfg.out_dir, scenario, da);
  if (cfg.subcommand == "dayahead") return 0;

  if (cfg.subcommand == "mpc") {
    sim::TraceLog log = sim::run_receding_horizon(scenario, mode);
    write_trace_artifacts(cfg.out_dir, scenario, log, "mpc_steps.csv");
    return 0;
  }

  // rt and full
  sim::TraceLog log = sim::run_rt_loop(scenario, mode);
  write_trace_artifacts(cfg.out_dir, scenario, log, "rt_trace.csv");
  if (cfg.subcommand == "full") write(cfg.out_dir, "cost_table.csv", cost_table_csv(log.costs));
  return 0;
}

}  // namespace

int run_cli(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  try {
    if (!cfg.manifest_path.empty()) cfg = config_from_manifest(cfg.manifest_path, cfg_in);
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

    sim::Scenario sc;
    std::vector<std::string> load_errors;
    bool loaded = false;
    try {
      sc = sim::load_scenario(cfg.scenario_path);
      loaded = true;
    } catch (const std::exception& e) {
      load_errors.push_back(e.what());
    }

    if (cfg.subcommand == "validate")
      return cmd_validate(cfg, loaded ? &sc : nullptr, load_errors);

    if (!loaded) {
      json err;
      err["error"] = "scenario failed to load";
      err["details"] = load_errors;
      if (!cfg.out_dir.empty()) write(cfg.out_dir, "error_report.json", err.dump(2) + "\n");
      std::cerr << err.dump(2) << "\n";
      return 2;
    }
    auto problems = sim::validate_scenario(sc);
    if (!problems.empty()) {
      json err;
      err["error"] = "scenario invalid";
      err["details"] = problems;
      if (!cfg.out_dir.empty()) write(cfg.out_dir, "error_report.json", err.dump(2) + "\n");
      std::cerr << err.dump(2) << "\n";
      return 2;
    }
    apply_overrides(sc, cfg);
    if (!cfg.out_dir.empty())
      write(cfg.out_dir, "manifest.json", manifest_json(cfg).dump(2) + "\n");

    if (cfg.subcommand == "rho-sweep") return cmd_rho_sweep(cfg, sc);
    if (cfg.subcommand == "compare") return cmd_compare(cfg, sc);
    if (cfg.subcommand == "dayahead" || cfg.subcommand == "mpc" || cfg.subcommand == "rt" ||
        cfg.subcommand == "full")
      return cmd_run(cfg, sc);
    std::cerr << "unknown subcommand: " << cfg.subcommand << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    if (!cfg.out_dir.empty()) {
      try {
        write(cfg.out_dir, "error_report.json", err.dump(2) + "\n");
      } catch (...) {
      }
    }
    std::cerr << err.dump(2) << "\n";
    return 1;
  }
}

}  // namespace flexprice::cli
