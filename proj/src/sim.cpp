#include "flexprice/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flexprice::sim {

double persistent_forecast(std::span<const double> history, int steps_ahead) {
  if (history.empty()) throw std::invalid_argument("persistent forecast needs at least one sample");
  if (steps_ahead < 1) throw std::invalid_argument("forecast horizon must be positive");
  return history.back();
}

void TraceLog::append(RtRecord rec) {
  if (!rt.empty() && !(rec.t_s > rt.back().t_s))
    throw std::logic_error("trace timestamps must be strictly increasing");
  rt.push_back(std::move(rec));
}

namespace {

using PlanContext = PlanningSetup;

coord::OracleHooks make_hooks(const Scenario& sc, const PlanContext& ctx, exec::Mode mode) {
  coord::OracleHooks hooks;
  grid::PowerFlowOptions pf;
  pf.mode = mode;
  // self-contained copies so the hooks outlive the setup they came from
  grid::NetworkModel net = sc.network;
  grid::GridLimits limits = sc.limits;
  grid::ProsumerPlacement placement = ctx.placement;
  Eigen::VectorXd slack = ctx.slack_plan;
  hooks.lin_error = [net, limits, placement, slack, pf](
                        const grid::LinearizedConstraints& lin,
                        const std::vector<Eigen::VectorXd>& xs) {
    return grid::linearization_error(net, lin, limits, placement, xs, slack, pf);
  };
  hooks.relinearize = [net, limits, placement, slack, pf](const std::vector<Eigen::VectorXd>& xs) {
    grid::OperatingPoint op = grid::injections_from_demands(
        net, placement, xs, static_cast<int>(xs[0].size()) / 2, slack);
    return grid::assemble_dso_constraints(net, op, limits, placement, {}, pf);
  };
  return hooks;
}

// Assemble the planning context for the horizon window [skip, K). The first
// remaining interval comes from persistence when histories are given.
PlanContext build_plan(const Scenario& sc, const MaterializedScenario& mat, int skip,
                       const std::vector<double>* soc_now,
                       const std::vector<std::vector<double>>* hist_load_p,
                       const std::vector<std::vector<double>>* hist_load_q,
                       const std::vector<std::vector<double>>* hist_pv,
                       const std::vector<double>* hist_slack, exec::Mode mode) {
  const int spp = sc.timeline.samples_per_step();
  const int k = sc.timeline.horizon() - skip;
  const int n = static_cast<int>(sc.prosumers.size());
  PlanContext ctx;
  ctx.placement = mat.placement;
  ctx.tariff = prosumer::tariff_vector(mat.price_plan.tail(k), sc.timeline.dt_plan_hours());

  ctx.slack_plan = MaterializedScenario::aggregate(mat.slack_fc, spp, skip);
  if (hist_slack) ctx.slack_plan(0) = persistent_forecast(*hist_slack);

  ctx.problems.reserve(n);
  ctx.pv_max.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd load_p = MaterializedScenario::aggregate(mat.load_p_fc[i], spp, skip);
    Eigen::VectorXd load_q = MaterializedScenario::aggregate(mat.load_q_fc[i], spp, skip);
    Eigen::VectorXd pv = MaterializedScenario::aggregate(mat.pv_fc[i], spp, skip);
    if (hist_load_p) load_p(0) = persistent_forecast((*hist_load_p)[i]);
    if (hist_load_q) load_q(0) = persistent_forecast((*hist_load_q)[i]);
    if (hist_pv) pv(0) = persistent_forecast((*hist_pv)[i]);
    prosumer::BessSpec bess = sc.prosumers[i].bess;
    if (soc_now) bess.soc_init = (*soc_now)[i];
    ctx.pv_max[i] = pv;
    ctx.problems.push_back(
        prosumer::build_prosumer_problem(bess, load_p, load_q, pv, k, sc.timeline.dt_plan_hours()));
  }

  // flat-tariff plans anchor the linearization
  ctx.baselines.resize(n);
  std::vector<std::string> errors(n);
  exec::parallel_for(mode, n, [&](int i) {
    try {
      ctx.baselines[i] = prosumer::local_cost_min(ctx.problems[i], ctx.tariff);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw std::runtime_error(sc.prosumers[i].name + " baseline failed: " + errors[i]);

  std::vector<Eigen::VectorXd> x_hat(n);
  for (int i = 0; i < n; ++i) x_hat[i] = ctx.baselines[i].demand.x;
  grid::OperatingPoint op =
      grid::injections_from_demands(sc.network, mat.placement, x_hat, k, ctx.slack_plan);
  grid::PowerFlowOptions pf;
  pf.mode = mode;
  ctx.lin = grid::assemble_dso_constraints(sc.network, op, sc.limits, mat.placement, {}, pf);
  return ctx;
}

}  // namespace

PlanningSetup day_ahead_setup(const Scenario& sc, exec::Mode mode) {
  MaterializedScenario mat = materialize(sc);
  return build_plan(sc, mat, 0, nullptr, nullptr, nullptr, nullptr, nullptr, mode);
}

coord::OracleHooks oracle_hooks(const Scenario& sc, const PlanningSetup& setup, exec::Mode mode) {
  return make_hooks(sc, setup, mode);
}

namespace {

coord::CoordinationReport uncoordinated_report(const PlanContext& ctx) {
  coord::CoordinationReport rep;
  const int n = static_cast<int>(ctx.baselines.size());
  rep.status = coord::CoordinationStatus::Converged;
  rep.baselines = ctx.baselines;
  rep.responses = ctx.baselines;
  rep.signals.resize(n);
  rep.cost_with_chf.resize(n);
  rep.cost_without_chf.resize(n);
  rep.compensation_chf = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    rep.signals[i] = prosumer::PriceSignal::flat(ctx.tariff);
    rep.cost_with_chf(i) = ctx.tariff.dot(ctx.baselines[i].demand.x);
    rep.cost_without_chf(i) = rep.cost_with_chf(i);
  }
  rep.total_with = rep.cost_with_chf.sum();
  rep.total_without = rep.total_with;
  return rep;
}

}  // namespace

DayAheadResult run_day_ahead(const Scenario& sc, exec::Mode mode) {
  MaterializedScenario mat = materialize(sc);
  PlanContext ctx = build_plan(sc, mat, 0, nullptr, nullptr, nullptr, nullptr, nullptr, mode);
  const int n = static_cast<int>(sc.prosumers.size());

  DayAheadResult out;
  out.coordinated = sc.coordination;
  out.tariff = ctx.tariff;
  out.slack_plan = ctx.slack_plan;

  if (sc.coordination) {
    coord::AdmmConfig cfg = sc.admm;
    cfg.max_iter = sc.timeline.admm_budget_iters;
    cfg.mode = mode;
    out.report = coord::run_coordination(ctx.problems, ctx.tariff, ctx.lin, cfg,
                                         make_hooks(sc, ctx, mode), nullptr, nullptr,
                                         &ctx.baselines);
    out.plans = out.report.responses;
  } else {
    out.report = uncoordinated_report(ctx);
    out.plans = ctx.baselines;
  }
  out.lin = ctx.lin;
  out.schedules.resize(n);
  for (int i = 0; i < n; ++i) out.schedules[i] = out.plans[i].demand.x;

  grid::OperatingPoint op = grid::injections_from_demands(sc.network, mat.placement, out.schedules,
                                                          sc.timeline.horizon(), ctx.slack_plan);
  grid::PowerFlowOptions pf;
  pf.mode = mode;
  out.oracle = grid::solve_power_flow(sc.network, op, pf);
  return out;
}

namespace {

struct CyclePlan {
  int start_step = 0;  // global plan step of the first entry
  std::vector<prosumer::XUpdateResult> plans;
  std::vector<Eigen::VectorXd> pv_max;
  std::vector<Eigen::VectorXd> y;  // closing multipliers for warm starts
  double rho = 1.0;
};

// Shared cycle driver for the MPC-level and RT-level loops.
template <typename RtBody>
TraceLog closed_loop(const Scenario& sc, exec::Mode mode, bool with_rt, const RtBody& rt_body) {
  MaterializedScenario mat = materialize(sc);
  const TimelineConfig& tl = sc.timeline;
  const int n = static_cast<int>(sc.prosumers.size());
  const int k = tl.horizon();
  const int spp = tl.samples_per_step();

  TraceLog log;
  DayAheadResult da = run_day_ahead(sc, mode);

  CyclePlan current;
  current.start_step = 0;
  current.plans = da.plans;
  current.pv_max.resize(n);
  for (int i = 0; i < n; ++i)
    current.pv_max[i] = MaterializedScenario::aggregate(mat.pv_fc[i], spp);
  current.y = da.report.final_y;
  current.rho = da.report.final_rho > 0.0 ? da.report.final_rho : sc.admm.rho0;

  {
    MpcRecord rec;
    rec.t_s = tl.t_start_s;
    rec.cycle = 0;
    rec.report = da.report;
    log.mpc.push_back(rec);
  }

  // realized histories; seeded with the first sample so persistence is
  // defined from the very first instant
  std::vector<std::vector<double>> hist_p(n), hist_q(n), hist_pv(n);
  std::vector<double> hist_slack;
  for (int i = 0; i < n; ++i) {
    hist_p[i].push_back(mat.load_p_re[i](0));
    hist_q[i].push_back(mat.load_q_re[i](0));
    hist_pv[i].push_back(mat.pv_re[i](0));
  }
  hist_slack.push_back(mat.slack_re(0));

  std::vector<double> soc(n);
  for (int i = 0; i < n; ++i) soc[i] = sc.prosumers[i].bess.soc_init;

  const int m_step = da.lin.rows_per_step;

  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      // intra-day rerun on the shrinking horizon with measured SoC and
      // persistence-corrected first interval
      MpcRecord rec;
      rec.t_s = tl.t_start_s + c * tl.t1_s;
      rec.cycle = c;
      bool ok = true;
      try {
        PlanContext ctx =
            build_plan(sc, mat, c, &soc, &hist_p, &hist_q, &hist_pv, &hist_slack, mode);
        if (sc.coordination) {
          coord::AdmmConfig cfg = sc.admm;
          cfg.max_iter = tl.admm_budget_iters;
          cfg.mode = mode;
          cfg.rho0 = current.rho;
          // shift the previous multipliers one planning step forward
          std::vector<Eigen::VectorXd> y0(n);
          const int m_new = m_step * (k - c);
          bool warm_ok = current.y.size() == static_cast<size_t>(n);
          for (int i = 0; warm_ok && i < n; ++i) {
            if (current.y[i].size() >= m_new)
              y0[i] = current.y[i].tail(m_new);
            else
              warm_ok = false;
          }
          rec.report = coord::run_coordination(ctx.problems, ctx.tariff, ctx.lin, cfg,
                                               make_hooks(sc, ctx, mode), nullptr,
                                               warm_ok ? &y0 : nullptr, &ctx.baselines);
          current.y = rec.report.final_y;
          current.rho = rec.report.final_rho;
          current.plans = rec.report.responses;
        } else {
          // local receding-horizon re-optimization, no grid coupling
          rec.report = uncoordinated_report(ctx);
          current.plans = ctx.baselines;
        }
        current.start_step = c;
        current.pv_max = ctx.pv_max;
      } catch (const std::exception&) {
        ok = false;
      }
      if (!ok) {
        // stale-target rule: keep the previous cycle's schedule and signals
        rec.reused_previous = true;
        rec.report = log.mpc.back().report;
      }
      log.mpc.push_back(rec);
    }

    const int pstep = c - current.start_step;
    if (with_rt) {
      for (int s = 0; s < spp; ++s) rt_body(c, s, current, pstep, soc, hist_p, hist_q, hist_pv,
                                             hist_slack, log);
    } else {
      rt_body(c, 0, current, pstep, soc, hist_p, hist_q, hist_pv, hist_slack, log);
    }
  }

  // final cost table from the day-ahead comparison
  for (int i = 0; i < n; ++i) {
    CostRow row;
    row.name = sc.prosumers[i].name;
    row.without_chf = da.report.cost_without_chf(i);
    row.with_chf = da.report.cost_with_chf(i);
    row.difference_chf = row.with_chf - row.without_chf;
    row.compensation_chf =
        da.report.compensation_chf.size() ? da.report.compensation_chf(i) : 0.0;
    log.costs.push_back(row);
  }
  return log;
}

}  // namespace

TraceLog run_receding_horizon(const Scenario& sc, exec::Mode mode) {
  MaterializedScenario mat = materialize(sc);
  const TimelineConfig& tl = sc.timeline;
  const int n = static_cast<int>(sc.prosumers.size());
  const int spp = tl.samples_per_step();
  grid::PowerFlowOptions pf;
  pf.mode = exec::Mode::Serial;  // single step per call

  auto body = [&](int c, int, const CyclePlan& plan, int pstep, std::vector<double>& soc,
                  std::vector<std::vector<double>>& hist_p, std::vector<std::vector<double>>& hist_q,
                  std::vector<std::vector<double>>& hist_pv, std::vector<double>& hist_slack,
                  TraceLog& log) {
    RtRecord rec;
    rec.t_s = tl.t_start_s + c * tl.t1_s + tl.t1_s;  // end of interval
    rec.soc.resize(n);
    rec.p_b.resize(n);
    rec.q_b.resize(n);
    rec.p_pv.resize(n);
    rec.p_dem.resize(n);
    rec.q_dem.resize(n);
    std::vector<Eigen::VectorXd> xs(n);
    for (int i = 0; i < n; ++i) {
      const auto& r = plan.plans[i].resources;
      const double fpv = plan.pv_max[i](pstep);
      const double frac = fpv > 1e-9 ? std::clamp(1.0 - r.p_pv(pstep) / fpv, 0.0, 1.0) : 0.0;
      const double pv_pot =
          mat.pv_re[i].segment(c * spp, spp).mean();
      const double load_p = mat.load_p_re[i].segment(c * spp, spp).mean();
      const double load_q = mat.load_q_re[i].segment(c * spp, spp).mean();
      const double p_b = r.p_b(pstep);
      const double q_b = r.q_b(pstep);
      const double pv_out = (1.0 - frac) * pv_pot;
      rec.p_b(i) = p_b;
      rec.q_b(i) = q_b;
      rec.p_pv(i) = pv_out;
      rec.p_dem(i) = load_p - pv_out - p_b;
      rec.q_dem(i) = load_q - q_b;
      soc[i] -= tl.dt_plan_hours() / sc.prosumers[i].bess.e_kwh * p_b;
      rec.soc(i) = soc[i];
      xs[i] = Eigen::VectorXd(2);
      xs[i] << rec.p_dem(i), rec.q_dem(i);
      for (int s = 0; s < spp; ++s) {
        hist_p[i].push_back(mat.load_p_re[i](c * spp + s));
        hist_q[i].push_back(mat.load_q_re[i](c * spp + s));
        hist_pv[i].push_back(mat.pv_re[i](c * spp + s));
      }
    }
    const double slack_v = mat.slack_re.segment(c * spp, spp).mean();
    for (int s = 0; s < spp; ++s) hist_slack.push_back(mat.slack_re(c * spp + s));
    grid::OperatingPoint op = grid::injections_from_demands(
        sc.network, mat.placement, xs, 1, Eigen::VectorXd::Constant(1, slack_v));
    grid::PowerFlowSolution sol = grid::solve_power_flow(sc.network, op, pf);
    rec.v_bus = sol.v.row(0).transpose();
    rec.p_slack = sol.p_slack(0);
    rec.q_slack = sol.q_slack(0);
    log.append(std::move(rec));
  };
  return closed_loop(sc, mode, /*with_rt=*/false, body);
}

TraceLog run_rt_loop(const Scenario& sc, exec::Mode mode) {
  MaterializedScenario mat = materialize(sc);
  const TimelineConfig& tl = sc.timeline;
  const int n = static_cast<int>(sc.prosumers.size());
  const int spp = tl.samples_per_step();
  grid::PowerFlowOptions pf;
  pf.mode = exec::Mode::Serial;

  std::vector<prosumer::RtSetpoint> last_sp(n);

  auto body = [&](int c, int s, const CyclePlan& plan, int pstep, std::vector<double>& soc,
                  std::vector<std::vector<double>>& hist_p, std::vector<std::vector<double>>& hist_q,
                  std::vector<std::vector<double>>& hist_pv, std::vector<double>& hist_slack,
                  TraceLog& log) {
    const int idx = c * spp + s;
    RtRecord rec;
    rec.t_s = tl.t_start_s + (idx + 1) * tl.t2_s;  // end of the RT interval
    rec.soc.resize(n);
    rec.p_b.resize(n);
    rec.q_b.resize(n);
    rec.p_pv.resize(n);
    rec.p_dem.resize(n);
    rec.q_dem.resize(n);
    std::vector<Eigen::VectorXd> xs(n);
    for (int i = 0; i < n; ++i) {
      const auto& r = plan.plans[i].resources;
      const double fpv = plan.pv_max[i](pstep);
      const double frac = fpv > 1e-9 ? std::clamp(1.0 - r.p_pv(pstep) / fpv, 0.0, 1.0) : 0.0;
      prosumer::RtSetpoint sp;
      try {
        sp = prosumer::rt_control(sc.prosumers[i].bess, soc[i], plan.plans[i].demand.p(pstep),
                                  plan.plans[i].demand.q(pstep), persistent_forecast(hist_p[i]),
                                  persistent_forecast(hist_q[i]),
                                  persistent_forecast(hist_pv[i]), frac, tl.t2_hours());
        last_sp[i] = sp;
      } catch (const std::exception&) {
        sp = last_sp[i];  // freeze the previous setpoint, keep running
      }
      // apply against the realized interval
      const double pv_out = (1.0 - frac) * mat.pv_re[i](idx);
      rec.p_b(i) = sp.p_b;
      rec.q_b(i) = sp.q_b;
      rec.p_pv(i) = pv_out;
      rec.p_dem(i) = mat.load_p_re[i](idx) - pv_out - sp.p_b;
      rec.q_dem(i) = mat.load_q_re[i](idx) - sp.q_b;
      soc[i] -= tl.t2_hours() / sc.prosumers[i].bess.e_kwh * sp.p_b;
      rec.soc(i) = soc[i];
      xs[i] = Eigen::VectorXd(2);
      xs[i] << rec.p_dem(i), rec.q_dem(i);
      hist_p[i].push_back(mat.load_p_re[i](idx));
      hist_q[i].push_back(mat.load_q_re[i](idx));
      hist_pv[i].push_back(mat.pv_re[i](idx));
    }
    hist_slack.push_back(mat.slack_re(idx));
    grid::OperatingPoint op = grid::injections_from_demands(
        sc.network, mat.placement, xs, 1, Eigen::VectorXd::Constant(1, mat.slack_re(idx)));
    grid::PowerFlowSolution sol = grid::solve_power_flow(sc.network, op, pf);
    rec.v_bus = sol.v.row(0).transpose();
    rec.p_slack = sol.p_slack(0);
    rec.q_slack = sol.q_slack(0);
    log.append(std::move(rec));
  };
  return closed_loop(sc, mode, /*with_rt=*/true, body);
}

}  // namespace flexprice::sim
