#include "flexprice/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flexprice::coord {

namespace {

// ADMM works on the stacked [eq; ineq] row system. The voltage use case has
// an empty equality block, so these reduce to the inequality accessors.
int step_rows(const grid::LinearizedConstraints& lin) {
  return lin.eq_rows_per_step + lin.rows_per_step;
}

int total_rows(const grid::LinearizedConstraints& lin) { return step_rows(lin) * lin.horizon; }

bool is_eq_row(const grid::LinearizedConstraints& lin, int row) {
  return row % step_rows(lin) < lin.eq_rows_per_step;
}

Eigen::VectorXd apply_rows(const grid::LinearizedConstraints& lin, int i,
                           const Eigen::VectorXd& x) {
  if (lin.eq_rows_per_step == 0) return lin.apply(i, x);
  const int ms = step_rows(lin);
  Eigen::VectorXd out(total_rows(lin));
  for (int t = 0; t < lin.horizon; ++t) {
    out.segment(t * ms, lin.eq_rows_per_step) = lin.eq_blocks[t][i] * x.segment<2>(2 * t);
    out.segment(t * ms + lin.eq_rows_per_step, lin.rows_per_step) =
        lin.blocks[t][i] * x.segment<2>(2 * t);
  }
  return out;
}

Eigen::VectorXd apply_rows_transpose(const grid::LinearizedConstraints& lin, int i,
                                     const Eigen::VectorXd& y) {
  if (lin.eq_rows_per_step == 0) return lin.apply_transpose(i, y);
  const int ms = step_rows(lin);
  Eigen::VectorXd out(2 * lin.horizon);
  for (int t = 0; t < lin.horizon; ++t) {
    out.segment<2>(2 * t) =
        lin.eq_blocks[t][i].transpose() * y.segment(t * ms, lin.eq_rows_per_step) +
        lin.blocks[t][i].transpose() *
            y.segment(t * ms + lin.eq_rows_per_step, lin.rows_per_step);
  }
  return out;
}

Eigen::VectorXd rhs_rows(const grid::LinearizedConstraints& lin) {
  if (lin.eq_rows_per_step == 0) return lin.stacked_rhs();
  const int ms = step_rows(lin);
  Eigen::VectorXd out(total_rows(lin));
  for (int t = 0; t < lin.horizon; ++t) {
    out.segment(t * ms, lin.eq_rows_per_step) = lin.eq_rhs[t];
    out.segment(t * ms + lin.eq_rows_per_step, lin.rows_per_step) = lin.rhs[t];
  }
  return out;
}

Eigen::Matrix2d quad_rows_block(const grid::LinearizedConstraints& lin, int i, int t) {
  Eigen::Matrix2d q = lin.quad_block(i, t);
  if (lin.eq_rows_per_step > 0)
    q += lin.eq_blocks[t][i].transpose() * lin.eq_blocks[t][i];
  return q;
}

}  // namespace

AdmmState init_state(const grid::LinearizedConstraints& lin,
                     const std::vector<Eigen::VectorXd>& x0, double rho0) {
  if (static_cast<int>(x0.size()) != lin.n_prosumers)
    throw std::invalid_argument("init_state: prosumer count mismatch");
  if (!(rho0 > 0.0)) throw std::invalid_argument("init_state: rho0 must be positive");
  AdmmState st;
  st.lin = lin;
  st.rho = rho0;
  st.x = x0;
  const int m = total_rows(lin);
  st.ax.resize(x0.size());
  st.z.resize(x0.size());
  st.y.resize(x0.size());
  st.z_prev.resize(x0.size());
  for (size_t i = 0; i < x0.size(); ++i) {
    if (x0[i].size() != 2 * lin.horizon)
      throw std::invalid_argument("init_state: demand length mismatch");
    st.ax[i] = apply_rows(lin, static_cast<int>(i), x0[i]);
    st.z[i] = st.ax[i];
    st.z_prev[i] = st.z[i];
    st.y[i] = Eigen::VectorXd::Zero(m);
  }
  st.row_min_slack = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  return st;
}

void z_update(AdmmState& st, const std::vector<Eigen::VectorXd>& x_new) {
  const int n = st.n_prosumers();
  const Eigen::VectorXd b = rhs_rows(st.lin);
  if (!b.allFinite()) throw std::runtime_error("grid constraints infeasible: non-finite bounds");
  st.x = x_new;
  Eigen::VectorXd sum_w = Eigen::VectorXd::Zero(b.size());
  for (int i = 0; i < n; ++i) {
    st.ax[i] = apply_rows(st.lin, i, st.x[i]);
    st.z_prev[i] = st.z[i];
    st.z[i] = st.ax[i] + st.y[i] / st.rho;  // w_i; shifted below
    sum_w += st.z[i];
  }
  for (int r = 0; r < b.size(); ++r) {
    double shift = (sum_w(r) - b(r)) / n;
    if (!is_eq_row(st.lin, r)) shift = std::max(0.0, shift);
    if (shift != 0.0)
      for (int i = 0; i < n; ++i) st.z[i](r) -= shift;
  }
}

void dual_update(AdmmState& st) {
  for (int i = 0; i < st.n_prosumers(); ++i) st.y[i] += st.rho * (st.ax[i] - st.z[i]);
}

Residuals residuals(const AdmmState& st, const AdmmConfig& cfg) {
  const int n = st.n_prosumers();
  const int m = total_rows(st.lin);
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  const double sqrt_n = std::sqrt(2.0 * st.lin.horizon);
  Residuals res;
  res.r.resize(n);
  res.s.resize(n);
  res.eps_pri.resize(n);
  res.eps_dual.resize(n);
  res.converged = true;
  for (int i = 0; i < n; ++i) {
    res.r(i) = (st.ax[i] - st.z[i]).norm();
    res.s(i) = st.rho * (st.z[i] - st.z_prev[i]).norm();
    res.eps_pri(i) = sqrt_m * cfg.eps_abs +
                     cfg.eps_rel * std::max(st.ax[i].norm(), st.z[i].norm());
    res.eps_dual(i) = sqrt_n * cfg.eps_abs +
                      cfg.eps_rel * apply_rows_transpose(st.lin, i, st.y[i]).norm();
    res.converged = res.converged && res.r(i) <= res.eps_pri(i) && res.s(i) <= res.eps_dual(i);
  }
  res.r_max = res.r.maxCoeff();
  res.s_max = res.s.maxCoeff();
  return res;
}

void adapt_rho(AdmmState& st, const AdmmConfig& cfg, const Residuals& res) {
  if (!cfg.adaptive_rho) return;
  if (res.r_max > cfg.mu * res.s_max) {
    st.rho *= cfg.tau_incr;
  } else if (res.s_max > cfg.mu * res.r_max) {
    st.rho /= cfg.tau_decr;
  }
}

bool maybe_relinearize(AdmmState& st, const AdmmConfig& cfg, const OracleHooks& oracle,
                       bool force_eval) {
  if (!cfg.relinearize || !oracle.available()) return false;
  const bool due = force_eval || (cfg.relin_every > 0 && st.k % cfg.relin_every == 0);
  if (!due) return false;
  double err;
  try {
    err = oracle.lin_error(st.lin, st.x);
  } catch (const std::exception&) {
    return false;  // keep the old linearization, the caller logs the event
  }
  st.last_r_lin = err;
  if (err <= cfg.tol_lin) return false;
  grid::LinearizedConstraints fresh;
  try {
    fresh = oracle.relinearize(st.x);
  } catch (const std::exception&) {
    return false;
  }
  if (fresh.rows_per_step != st.lin.rows_per_step || fresh.horizon != st.lin.horizon)
    throw std::runtime_error("re-linearization changed the constraint layout");
  st.lin = fresh;
  for (int i = 0; i < st.n_prosumers(); ++i) st.ax[i] = apply_rows(st.lin, i, st.x[i]);
  ++st.relinearizations;
  return true;
}

prosumer::PriceSignal extract_price_signal(const AdmmState& st, const Eigen::VectorXd& tariff,
                                           int i) {
  prosumer::PriceSignal sig;
  const int k2 = 2 * st.lin.horizon;
  sig.quadratic = Eigen::MatrixXd::Zero(k2, k2);
  for (int t = 0; t < st.lin.horizon; ++t)
    sig.quadratic.block<2, 2>(2 * t, 2 * t) = st.rho * quad_rows_block(st.lin, i, t);
  sig.linear = tariff + apply_rows_transpose(st.lin, i, st.y[i] - st.rho * st.z[i]);
  sig.fixed_fee = 0.5 * st.rho * st.z[i].squaredNorm() - st.y[i].dot(st.z[i]);
  sig.round = st.k;
  return sig;
}

Eigen::VectorXd compute_compensation(const Eigen::VectorXd& tariff,
                                     const std::vector<Eigen::VectorXd>& x_star,
                                     const std::vector<Eigen::VectorXd>& x_hat) {
  if (x_star.size() != x_hat.size())
    throw std::invalid_argument("compensation: schedule count mismatch");
  Eigen::VectorXd comp(x_star.size());
  for (size_t i = 0; i < x_star.size(); ++i) {
    comp(i) = tariff.dot(x_star[i] - x_hat[i]);
    if (comp(i) < -1e-6)
      throw std::runtime_error("baseline not optimal: negative compensation for prosumer " +
                               std::to_string(i));
  }
  return comp;
}

CoordinationReport run_coordination(const std::vector<prosumer::ProsumerProblem>& agents,
                                    const Eigen::VectorXd& tariff,
                                    const grid::LinearizedConstraints& lin, const AdmmConfig& cfg,
                                    const OracleHooks& oracle,
                                    const std::vector<Eigen::VectorXd>* x0,
                                    const std::vector<Eigen::VectorXd>* y0,
                                    const std::vector<prosumer::XUpdateResult>* baselines) {
  const int n = static_cast<int>(agents.size());
  if (n == 0) throw std::invalid_argument("run_coordination: no agents");
  if (lin.n_prosumers != n) throw std::invalid_argument("run_coordination: placement mismatch");

  CoordinationReport rep;

  // flat-tariff baselines; also the default start and linearization anchor
  std::vector<std::string> errors(n);
  if (baselines && static_cast<int>(baselines->size()) == n) {
    rep.baselines = *baselines;
  } else {
    rep.baselines.resize(n);
    exec::parallel_for(cfg.mode, n, [&](int i) {
      try {
        rep.baselines[i] = prosumer::local_cost_min(agents[i], tariff);
        if (rep.baselines[i].status != qp::Status::Optimal)
          errors[i] = "baseline solve not optimal";
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
  }
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw std::runtime_error("prosumer " + std::to_string(i) + " baseline failed: " + errors[i]);

  std::vector<Eigen::VectorXd> start;
  if (x0) {
    start = *x0;
  } else {
    start.reserve(n);
    for (int i = 0; i < n; ++i) start.push_back(rep.baselines[i].demand.x);
  }
  AdmmState st = init_state(lin, start, cfg.rho0);
  if (y0) {
    if (static_cast<int>(y0->size()) != n)
      throw std::invalid_argument("run_coordination: warm multiplier count mismatch");
    for (int i = 0; i < n; ++i)
      if ((*y0)[i].size() == st.y[i].size()) st.y[i] = (*y0)[i];
  }

  rep.responses.resize(n);
  std::vector<Eigen::VectorXd> xs(n);
  bool converged = false;

  while (st.k < cfg.max_iter && !converged) {
    st.k += 1;

    // Step 1: advertise signals, collect demands (parallel fan-out,
    // barrier on all agents)
    std::vector<prosumer::PriceSignal> sigs(n);
    for (int i = 0; i < n; ++i) sigs[i] = extract_price_signal(st, tariff, i);
    exec::parallel_for(cfg.mode, n, [&](int i) {
      try {
        rep.responses[i] = prosumer::x_update(agents[i], sigs[i], cfg.route);
        if (rep.responses[i].status != qp::Status::Optimal)
          errors[i] = "x-update status not optimal";
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });
    for (int i = 0; i < n; ++i)
      if (!errors[i].empty())
        throw std::runtime_error("prosumer " + std::to_string(i) + " failed at iteration " +
                                 std::to_string(st.k) + ": " + errors[i]);
    for (int i = 0; i < n; ++i) xs[i] = rep.responses[i].demand.x;

    // Steps 2-3
    z_update(st, xs);
    dual_update(st);

    Residuals res = residuals(st, cfg);

    // feasibility bookkeeping for the never-active-row diagnostic
    Eigen::VectorXd slack = rhs_rows(st.lin);
    for (int i = 0; i < n; ++i) slack -= st.ax[i];
    st.row_min_slack = st.row_min_slack.cwiseMin(slack);

    IterationRecord rec;
    rec.k = st.k;
    rec.rho = st.rho;
    rec.r_max = res.r_max;
    rec.s_max = res.s_max;
    rec.eps_pri = res.eps_pri.minCoeff();
    rec.eps_dual = res.eps_dual.minCoeff();

    if (res.converged) {
      // declare convergence only with a fresh linearization within tolerance
      if (cfg.relinearize && oracle.available()) {
        rec.relinearized = maybe_relinearize(st, cfg, oracle, /*force_eval=*/true);
        converged = !rec.relinearized && st.last_r_lin <= cfg.tol_lin;
      } else {
        converged = true;
      }
    } else {
      rec.relinearized = maybe_relinearize(st, cfg, oracle, /*force_eval=*/false);
      adapt_rho(st, cfg, res);
    }
    rec.r_lin = st.last_r_lin;
    st.history.push_back(rec);

    rep.final_r_max = res.r_max;
    rep.final_s_max = res.s_max;
  }

  rep.status = converged ? CoordinationStatus::Converged : CoordinationStatus::Timeout;
  rep.iterations = st.k;
  rep.final_rho = st.rho;
  rep.final_r_lin = st.last_r_lin;
  rep.relinearizations = st.relinearizations;
  rep.trace = st.history;

  rep.signals.resize(n);
  for (int i = 0; i < n; ++i) rep.signals[i] = extract_price_signal(st, tariff, i);

  std::vector<Eigen::VectorXd> x_hat(n);
  for (int i = 0; i < n; ++i) x_hat[i] = rep.baselines[i].demand.x;
  rep.compensation_chf = compute_compensation(tariff, xs, x_hat);
  rep.cost_with_chf.resize(n);
  rep.cost_without_chf.resize(n);
  for (int i = 0; i < n; ++i) {
    rep.cost_with_chf(i) = tariff.dot(xs[i]);
    rep.cost_without_chf(i) = tariff.dot(x_hat[i]);
  }
  rep.total_with = rep.cost_with_chf.sum();
  rep.total_without = rep.cost_without_chf.sum();
  rep.total_compensation = rep.compensation_chf.sum();
  rep.final_y = st.y;
  return rep;
}

}  // namespace flexprice::coord
