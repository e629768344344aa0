#include "flexprice/grid.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

namespace flexprice::grid {

namespace {

double hypot2(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace

int NetworkModel::bus_index(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(buses.size()); ++i)
    if (buses[i].id == id) return i;
  throw std::invalid_argument("unknown bus id: " + id);
}

int NetworkModel::slack_index() const {
  for (int i = 0; i < static_cast<int>(buses.size()); ++i)
    if (buses[i].type == BusType::Slack) return i;
  throw std::invalid_argument("network has no slack bus");
}

std::vector<int> NetworkModel::non_slack() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(buses.size()); ++i)
    if (buses[i].type != BusType::Slack) out.push_back(i);
  return out;
}

void NetworkModel::validate() const {
  if (buses.empty()) throw std::invalid_argument("network has no buses");
  std::set<std::string> ids;
  int slacks = 0;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw std::invalid_argument("duplicate bus id: " + b.id);
    if (b.type == BusType::Slack) ++slacks;
  }
  if (slacks != 1) throw std::invalid_argument("network must have exactly one slack bus");
  if (!(bases.v_base_v > 0.0) || !(bases.s_base_va > 0.0))
    throw std::invalid_argument("per-unit bases must be positive");
  if (!(slack_v_pu > 0.0)) throw std::invalid_argument("slack voltage must be positive");

  std::vector<std::vector<int>> adj(buses.size());
  for (const auto& l : lines) {
    int f = bus_index(l.from);
    int t = bus_index(l.to);
    if (f == t) throw std::invalid_argument("line endpoints coincide: " + l.from);
    if (l.r_ohm < 0.0) throw std::invalid_argument("negative line resistance: " + l.from + "-" + l.to);
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  // connectivity
  std::vector<char> seen(buses.size(), 0);
  std::queue<int> work;
  work.push(0);
  seen[0] = 1;
  while (!work.empty()) {
    int u = work.front();
    work.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        work.push(v);
      }
  }
  for (size_t i = 0; i < buses.size(); ++i)
    if (!seen[i]) throw std::invalid_argument("network graph is not connected (bus " + buses[i].id + ")");
}

OperatingPoint OperatingPoint::zeros(const NetworkModel& model, int horizon) {
  const int m = static_cast<int>(model.buses.size()) - 1;
  OperatingPoint op;
  op.p = Eigen::MatrixXd::Zero(horizon, m);
  op.q = Eigen::MatrixXd::Zero(horizon, m);
  return op;
}

Eigen::MatrixXcd build_admittance(const NetworkModel& model) {
  model.validate();
  const int n = static_cast<int>(model.buses.size());
  const double zb = model.bases.z_base_ohm();
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& l : model.lines) {
    const int f = model.bus_index(l.from);
    const int t = model.bus_index(l.to);
    const std::complex<double> z(l.r_ohm / zb, l.x_ohm / zb);
    if (std::abs(z) == 0.0)
      throw std::invalid_argument("degenerate branch: " + l.from + "-" + l.to);
    const std::complex<double> ys = 1.0 / z;
    const std::complex<double> ysh(0.0, l.b_shunt_s * zb / 2.0);
    y(f, f) += ys + ysh;
    y(t, t) += ys + ysh;
    y(f, t) -= ys;
    y(t, f) -= ys;
  }
  return y;
}

namespace {

struct StepResult {
  Eigen::VectorXd v, theta;  // all buses
  double p_slack = 0.0, q_slack = 0.0;
  bool converged = false;
  int iterations = 0;
  double mismatch = 0.0;
};

// Calculated injections at the current state, all buses.
void calc_pq(const Eigen::MatrixXd& g, const Eigen::MatrixXd& b, const Eigen::VectorXd& v,
             const Eigen::VectorXd& th, Eigen::VectorXd& pc, Eigen::VectorXd& qc) {
  const int n = static_cast<int>(v.size());
  pc.setZero(n);
  qc.setZero(n);
  for (int i = 0; i < n; ++i) {
    double pi = 0.0, qi = 0.0;
    for (int j = 0; j < n; ++j) {
      const double dij = th(i) - th(j);
      const double c = std::cos(dij), s = std::sin(dij);
      pi += v(j) * (g(i, j) * c + b(i, j) * s);
      qi += v(j) * (g(i, j) * s - b(i, j) * c);
    }
    pc(i) = v(i) * pi;
    qc(i) = v(i) * qi;
  }
}

// Polar Newton Jacobian over the non-slack state [theta; v].
Eigen::MatrixXd jacobian(const Eigen::MatrixXd& g, const Eigen::MatrixXd& b,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& th,
                         const Eigen::VectorXd& pc, const Eigen::VectorXd& qc,
                         const std::vector<int>& ns) {
  const int m = static_cast<int>(ns.size());
  Eigen::MatrixXd jac(2 * m, 2 * m);
  for (int a = 0; a < m; ++a) {
    const int i = ns[a];
    for (int c = 0; c < m; ++c) {
      const int j = ns[c];
      if (i == j) {
        jac(a, c) = -qc(i) - b(i, i) * v(i) * v(i);
        jac(a, m + c) = pc(i) / v(i) + g(i, i) * v(i);
        jac(m + a, c) = pc(i) - g(i, i) * v(i) * v(i);
        jac(m + a, m + c) = qc(i) / v(i) - b(i, i) * v(i);
      } else {
        const double dij = th(i) - th(j);
        const double cs = std::cos(dij), sn = std::sin(dij);
        jac(a, c) = v(i) * v(j) * (g(i, j) * sn - b(i, j) * cs);
        jac(a, m + c) = v(i) * (g(i, j) * cs + b(i, j) * sn);
        jac(m + a, c) = -v(i) * v(j) * (g(i, j) * cs + b(i, j) * sn);
        jac(m + a, m + c) = v(i) * (g(i, j) * sn - b(i, j) * cs);
      }
    }
  }
  return jac;
}

double max_complex_mismatch(const Eigen::VectorXd& pc, const Eigen::VectorXd& qc,
                            const Eigen::VectorXd& ps, const Eigen::VectorXd& qs,
                            const std::vector<int>& ns) {
  double worst = 0.0;
  for (size_t a = 0; a < ns.size(); ++a) {
    const int i = ns[a];
    worst = std::max(worst, hypot2(pc(i) - ps(i), qc(i) - qs(i)));
  }
  return worst;
}

StepResult solve_step(const Eigen::MatrixXd& g, const Eigen::MatrixXd& b, int slack,
                      const std::vector<int>& ns, double vslack, const Eigen::VectorXd& p_load,
                      const Eigen::VectorXd& q_load, const PowerFlowOptions& opt) {
  const int n = static_cast<int>(g.rows());
  const int m = static_cast<int>(ns.size());
  StepResult res;
  res.v = Eigen::VectorXd::Constant(n, vslack);  // flat start
  res.theta = Eigen::VectorXd::Zero(n);

  // load-positive demand -> injection
  Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n), q_spec = Eigen::VectorXd::Zero(n);
  for (int a = 0; a < m; ++a) {
    p_spec(ns[a]) = -p_load(a);
    q_spec(ns[a]) = -q_load(a);
  }

  Eigen::VectorXd pc, qc;
  calc_pq(g, b, res.v, res.theta, pc, qc);
  double mis = max_complex_mismatch(pc, qc, p_spec, q_spec, ns);
  int it = 0;
  while (mis > opt.tol_pu && it < opt.max_iter) {
    Eigen::MatrixXd jac = jacobian(g, b, res.v, res.theta, pc, qc, ns);
    Eigen::VectorXd f(2 * m);
    for (int a = 0; a < m; ++a) {
      f(a) = pc(ns[a]) - p_spec(ns[a]);
      f(m + a) = qc(ns[a]) - q_spec(ns[a]);
    }
    Eigen::VectorXd d = jac.partialPivLu().solve(-f);
    if (!d.allFinite()) break;

    // step with simple halving safeguard
    double scale = 1.0;
    Eigen::VectorXd v_new, th_new;
    double mis_new = mis;
    for (int tries = 0; tries < 5; ++tries) {
      v_new = res.v;
      th_new = res.theta;
      for (int a = 0; a < m; ++a) {
        th_new(ns[a]) += scale * d(a);
        v_new(ns[a]) += scale * d(m + a);
      }
      if (v_new.minCoeff() > 1e-6) {
        calc_pq(g, b, v_new, th_new, pc, qc);
        mis_new = max_complex_mismatch(pc, qc, p_spec, q_spec, ns);
        if (mis_new < mis || tries == 4) break;
      }
      scale *= 0.5;
    }
    res.v = v_new;
    res.theta = th_new;
    mis = mis_new;
    ++it;
  }
  calc_pq(g, b, res.v, res.theta, pc, qc);
  res.mismatch = max_complex_mismatch(pc, qc, p_spec, q_spec, ns);
  res.iterations = it;
  res.converged = res.mismatch <= 1e-8;
  res.p_slack = pc(slack);
  res.q_slack = qc(slack);
  return res;
}

}  // namespace

PowerFlowSolution solve_power_flow(const NetworkModel& model, const OperatingPoint& op,
                                   const PowerFlowOptions& opt) {
  const Eigen::MatrixXcd y = build_admittance(model);
  const Eigen::MatrixXd g = y.real(), b = y.imag();
  const int slack = model.slack_index();
  const std::vector<int> ns = model.non_slack();
  const int horizon = op.horizon();
  const int n = static_cast<int>(model.buses.size());
  if (op.p.cols() != n - 1 || op.q.rows() != horizon || op.q.cols() != n - 1)
    throw std::invalid_argument("operating point dimensions do not match the network");
  if (!op.p.allFinite() || !op.q.allFinite())
    throw std::invalid_argument("operating point has non-finite injections");

  PowerFlowSolution sol;
  sol.v.resize(horizon, n);
  sol.theta.resize(horizon, n);
  sol.p_slack.resize(horizon);
  sol.q_slack.resize(horizon);
  std::vector<StepResult> steps(horizon);
  exec::parallel_for(opt.mode, horizon, [&](int t) {
    steps[t] = solve_step(g, b, slack, ns, op.slack_voltage(model, t), op.p.row(t).transpose(),
                          op.q.row(t).transpose(), opt);
  });
  sol.converged = true;
  for (int t = 0; t < horizon; ++t) {
    sol.v.row(t) = steps[t].v.transpose();
    sol.theta.row(t) = steps[t].theta.transpose();
    sol.p_slack(t) = steps[t].p_slack;
    sol.q_slack(t) = steps[t].q_slack;
    sol.converged = sol.converged && steps[t].converged;
    sol.iterations = std::max(sol.iterations, steps[t].iterations);
    sol.max_mismatch_pu = std::max(sol.max_mismatch_pu, steps[t].mismatch);
  }
  return sol;
}

namespace {

SensitivityMatrices sensitivities_at(const Eigen::MatrixXd& g, const Eigen::MatrixXd& b, int slack,
                                     const std::vector<int>& ns, const StepResult& st) {
  const int m = static_cast<int>(ns.size());
  Eigen::VectorXd pc, qc;
  calc_pq(g, b, st.v, st.theta, pc, qc);
  Eigen::MatrixXd jac = jacobian(g, b, st.v, st.theta, pc, qc, ns);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
  // state response to injection changes: ds = J^{-1} dinj; demand is -inj
  Eigen::MatrixXd x = lu.solve(Eigen::MatrixXd::Identity(2 * m, 2 * m));

  SensitivityMatrices s;
  s.k_vp = -x.block(m, 0, m, m);
  s.k_vq = -x.block(m, m, m, m);
  s.v_star.resize(m);
  for (int a = 0; a < m; ++a) s.v_star(a) = st.v(ns[a]);

  // slack injection gradient over the non-slack state [theta; v]
  Eigen::RowVectorXd gp(2 * m), gq(2 * m);
  const double vs = st.v(slack);
  for (int a = 0; a < m; ++a) {
    const int j = ns[a];
    const double dsj = st.theta(slack) - st.theta(j);
    const double cs = std::cos(dsj), sn = std::sin(dsj);
    gp(a) = vs * st.v(j) * (g(slack, j) * sn - b(slack, j) * cs);
    gp(m + a) = vs * (g(slack, j) * cs + b(slack, j) * sn);
    gq(a) = -vs * st.v(j) * (g(slack, j) * cs + b(slack, j) * sn);
    gq(m + a) = vs * (g(slack, j) * sn - b(slack, j) * cs);
  }
  s.s_pp = -gp * x.block(0, 0, 2 * m, m);
  s.s_pq = -gp * x.block(0, m, 2 * m, m);
  s.s_qp = -gq * x.block(0, 0, 2 * m, m);
  s.s_qq = -gq * x.block(0, m, 2 * m, m);
  s.ps_star = st.p_slack;
  s.qs_star = st.q_slack;
  return s;
}

}  // namespace

std::vector<SensitivityMatrices> compute_sensitivities(const NetworkModel& model,
                                                       const OperatingPoint& op,
                                                       const PowerFlowOptions& opt) {
  const Eigen::MatrixXcd y = build_admittance(model);
  const Eigen::MatrixXd g = y.real(), b = y.imag();
  const int slack = model.slack_index();
  const std::vector<int> ns = model.non_slack();
  const int horizon = op.horizon();

  std::vector<SensitivityMatrices> out(horizon);
  std::vector<char> ok(horizon, 1);
  exec::parallel_for(opt.mode, horizon, [&](int t) {
    StepResult st = solve_step(g, b, slack, ns, op.slack_voltage(model, t), op.p.row(t).transpose(),
                               op.q.row(t).transpose(), opt);
    if (!st.converged) {
      ok[t] = 0;
      return;
    }
    out[t] = sensitivities_at(g, b, slack, ns, st);
  });
  for (int t = 0; t < horizon; ++t)
    if (!ok[t]) throw std::runtime_error("linearization point infeasible (power flow diverged at step " +
                                         std::to_string(t) + ")");
  return out;
}

void GridLimits::validate() const {
  if (!(v_min < v_max)) throw std::invalid_argument("voltage limits require v_min < v_max");
  if (!(q_s_max_pu < s_s_max_pu))
    throw std::invalid_argument("slack limits require q_s_max < s_s_max");
  if (!(q_s_max_pu > 0.0)) throw std::invalid_argument("slack reactive limit must be positive");
}

double GridLimits::p_s_max_pu() const {
  return std::sqrt(s_s_max_pu * s_s_max_pu - q_s_max_pu * q_s_max_pu);
}

RowLabel LinearizedConstraints::label(int row) const {
  RowLabel l = step_labels[row % rows_per_step];
  l.step = row / rows_per_step;
  return l;
}

Eigen::VectorXd LinearizedConstraints::apply(int i, const Eigen::VectorXd& x_i) const {
  Eigen::VectorXd out(rows());
  for (int t = 0; t < horizon; ++t)
    out.segment(t * rows_per_step, rows_per_step) = blocks[t][i] * x_i.segment<2>(2 * t);
  return out;
}

Eigen::VectorXd LinearizedConstraints::apply_transpose(int i, const Eigen::VectorXd& y) const {
  Eigen::VectorXd out(2 * horizon);
  for (int t = 0; t < horizon; ++t)
    out.segment<2>(2 * t) =
        blocks[t][i].transpose() * y.segment(t * rows_per_step, rows_per_step);
  return out;
}

Eigen::VectorXd LinearizedConstraints::coupled(const std::vector<Eigen::VectorXd>& xs) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rows());
  for (int i = 0; i < n_prosumers; ++i) out += apply(i, xs[i]);
  return out;
}

Eigen::VectorXd LinearizedConstraints::stacked_rhs() const {
  Eigen::VectorXd out(rows());
  for (int t = 0; t < horizon; ++t) out.segment(t * rows_per_step, rows_per_step) = rhs[t];
  return out;
}

Eigen::Matrix2d LinearizedConstraints::quad_block(int i, int step) const {
  return blocks[step][i].transpose() * blocks[step][i];
}

Eigen::MatrixXd LinearizedConstraints::dense_block(int i) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows(), 2 * horizon);
  for (int t = 0; t < horizon; ++t)
    out.block(t * rows_per_step, 2 * t, rows_per_step, 2) = blocks[t][i];
  return out;
}

Eigen::MatrixXd LinearizedConstraints::dense() const {
  Eigen::MatrixXd out(rows(), 2 * horizon * n_prosumers);
  for (int i = 0; i < n_prosumers; ++i)
    out.middleCols(2 * horizon * i, 2 * horizon) = dense_block(i);
  return out;
}

LinearizedConstraints assemble_dso_constraints(const NetworkModel& model, const OperatingPoint& op,
                                               const GridLimits& limits,
                                               const ProsumerPlacement& placement,
                                               const std::vector<int>& monitored,
                                               const PowerFlowOptions& opt) {
  return assemble_dso_constraints(model, op, compute_sensitivities(model, op, opt), limits,
                                  placement, monitored);
}

LinearizedConstraints assemble_dso_constraints(const NetworkModel& model, const OperatingPoint& op,
                                               const std::vector<SensitivityMatrices>& sens,
                                               const GridLimits& limits,
                                               const ProsumerPlacement& placement,
                                               const std::vector<int>& monitored_in) {
  limits.validate();
  const std::vector<int> ns = model.non_slack();
  const int m = static_cast<int>(ns.size());
  const int horizon = op.horizon();
  const int n_pro = static_cast<int>(placement.bus.size());

  std::vector<int> monitored = monitored_in;
  if (monitored.empty()) monitored = ns;
  // position of each bus within the non-slack ordering
  std::vector<int> pos(model.buses.size(), -1);
  for (int a = 0; a < m; ++a) pos[ns[a]] = a;
  for (int bus : monitored)
    if (pos[bus] < 0) throw std::invalid_argument("monitored bus must be a non-slack bus");

  LinearizedConstraints lin;
  lin.horizon = horizon;
  lin.n_prosumers = n_pro;
  lin.rows_per_step = 2 * static_cast<int>(monitored.size()) + 4;
  for (int bus : monitored) {
    lin.step_labels.push_back({RowKind::VoltageLow, bus, 0});
    lin.step_labels.push_back({RowKind::VoltageHigh, bus, 0});
  }
  lin.step_labels.push_back({RowKind::SlackQHigh, -1, 0});
  lin.step_labels.push_back({RowKind::SlackQLow, -1, 0});
  lin.step_labels.push_back({RowKind::SlackPHigh, -1, 0});
  lin.step_labels.push_back({RowKind::SlackPLow, -1, 0});

  const double inv_s_base = 1.0 / model.bases.s_base_kw();
  const double p_s_max = limits.p_s_max_pu();

  lin.blocks.resize(horizon);
  lin.rhs.resize(horizon);
  for (int t = 0; t < horizon; ++t) {
    const SensitivityMatrices& s = sens[t];
    const Eigen::VectorXd pstar = op.p.row(t).transpose();
    const Eigen::VectorXd qstar = op.q.row(t).transpose();

    // row coefficients over bus-level (p, q) demand, then mapped to prosumers
    Eigen::MatrixXd wp(lin.rows_per_step, m), wq(lin.rows_per_step, m);
    Eigen::VectorXd b(lin.rows_per_step);
    int r = 0;
    for (int bus : monitored) {
      const int a = pos[bus];
      const Eigen::RowVectorXd kp = s.k_vp.row(a);
      const Eigen::RowVectorXd kq = s.k_vq.row(a);
      const double base = kp.dot(pstar) + kq.dot(qstar);
      wp.row(r) = -kp;
      wq.row(r) = -kq;
      b(r) = s.v_star(a) - limits.v_min - base;
      ++r;
      wp.row(r) = kp;
      wq.row(r) = kq;
      b(r) = limits.v_max - s.v_star(a) + base;
      ++r;
    }
    const double qbase = s.s_qp.dot(pstar) + s.s_qq.dot(qstar);
    wp.row(r) = s.s_qp;
    wq.row(r) = s.s_qq;
    b(r) = limits.q_s_max_pu - s.qs_star + qbase;
    ++r;
    wp.row(r) = -s.s_qp;
    wq.row(r) = -s.s_qq;
    b(r) = limits.q_s_max_pu + s.qs_star - qbase;
    ++r;
    const double pbase = s.s_pp.dot(pstar) + s.s_pq.dot(qstar);
    wp.row(r) = s.s_pp;
    wq.row(r) = s.s_pq;
    b(r) = p_s_max - s.ps_star + pbase;
    ++r;
    wp.row(r) = -s.s_pp;
    wq.row(r) = -s.s_pq;
    b(r) = p_s_max + s.ps_star - pbase;
    ++r;

    lin.rhs[t] = b;
    lin.blocks[t].resize(n_pro);
    for (int i = 0; i < n_pro; ++i) {
      const int a = pos[placement.bus[i]];
      if (a < 0) throw std::invalid_argument("prosumer attached to the slack bus");
      Eigen::Matrix<double, Eigen::Dynamic, 2> blk(lin.rows_per_step, 2);
      blk.col(0) = wp.col(a) * inv_s_base;
      blk.col(1) = wq.col(a) * inv_s_base;
      lin.blocks[t][i] = blk;
    }
  }
  return lin;
}

OperatingPoint injections_from_demands(const NetworkModel& model,
                                       const ProsumerPlacement& placement,
                                       const std::vector<Eigen::VectorXd>& xs, int horizon,
                                       const Eigen::VectorXd& slack_v) {
  const std::vector<int> ns = model.non_slack();
  std::vector<int> pos(model.buses.size(), -1);
  for (int a = 0; a < static_cast<int>(ns.size()); ++a) pos[ns[a]] = a;
  OperatingPoint op = OperatingPoint::zeros(model, horizon);
  const double inv_s_base = 1.0 / model.bases.s_base_kw();
  for (size_t i = 0; i < placement.bus.size(); ++i) {
    const int a = pos[placement.bus[i]];
    for (int t = 0; t < horizon; ++t) {
      op.p(t, a) += xs[i](2 * t) * inv_s_base;
      op.q(t, a) += xs[i](2 * t + 1) * inv_s_base;
    }
  }
  op.slack_v = slack_v;
  return op;
}

Eigen::VectorXd evaluate_constraints_oracle(const NetworkModel& model,
                                            const LinearizedConstraints& lin,
                                            const GridLimits& limits,
                                            const ProsumerPlacement& placement,
                                            const std::vector<Eigen::VectorXd>& xs,
                                            const Eigen::VectorXd& slack_v,
                                            const PowerFlowOptions& opt) {
  OperatingPoint op = injections_from_demands(model, placement, xs, lin.horizon, slack_v);
  PowerFlowSolution sol = solve_power_flow(model, op, opt);
  if (!sol.converged) throw std::runtime_error("cannot evaluate g: power flow diverged");

  const double p_s_max = limits.p_s_max_pu();
  Eigen::VectorXd g(lin.rows());
  for (int t = 0; t < lin.horizon; ++t) {
    for (int r = 0; r < lin.rows_per_step; ++r) {
      const RowLabel l = lin.step_labels[r];
      double val = 0.0;
      switch (l.kind) {
        case RowKind::VoltageLow:
          val = limits.v_min - sol.v(t, l.bus);
          break;
        case RowKind::VoltageHigh:
          val = sol.v(t, l.bus) - limits.v_max;
          break;
        case RowKind::SlackQHigh:
          val = sol.q_slack(t) - limits.q_s_max_pu;
          break;
        case RowKind::SlackQLow:
          val = -sol.q_slack(t) - limits.q_s_max_pu;
          break;
        case RowKind::SlackPHigh:
          val = sol.p_slack(t) - p_s_max;
          break;
        case RowKind::SlackPLow:
          val = -sol.p_slack(t) - p_s_max;
          break;
      }
      g(t * lin.rows_per_step + r) = val;
    }
  }
  return g;
}

double linearization_error(const NetworkModel& model, const LinearizedConstraints& lin,
                           const GridLimits& limits, const ProsumerPlacement& placement,
                           const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& slack_v,
                           const PowerFlowOptions& opt) {
  Eigen::VectorXd g = evaluate_constraints_oracle(model, lin, limits, placement, xs, slack_v, opt);
  Eigen::VectorXd linear = lin.coupled(xs) - lin.stacked_rhs();
  return (g - linear).lpNorm<Eigen::Infinity>();
}

const char* row_kind_name(RowKind k) {
  switch (k) {
    case RowKind::VoltageLow: return "v_min";
    case RowKind::VoltageHigh: return "v_max";
    case RowKind::SlackQHigh: return "qs_max";
    case RowKind::SlackQLow: return "qs_min";
    case RowKind::SlackPHigh: return "ps_max";
    case RowKind::SlackPLow: return "ps_min";
  }
  return "?";
}

}  // namespace flexprice::grid
