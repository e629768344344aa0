#include "flexprice/prosumer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace flexprice::prosumer {

namespace {
constexpr double kActionReg = 1e-6;  // tie-breaker on (p_b, q_b, curtailment)
}

void BessSpec::validate() const {
  if (!(s_max_kva > 0.0)) throw std::invalid_argument("bess: rated power must be positive");
  if (!(e_kwh > 0.0)) throw std::invalid_argument("bess: energy capacity must be positive");
  if (!(0.0 <= soc_min && soc_min < soc_max && soc_max <= 1.0))
    throw std::invalid_argument("bess: need 0 <= soc_min < soc_max <= 1");
  if (!(0.0 <= soc_init && soc_init <= 1.0))
    throw std::invalid_argument("bess: soc_init must be a fraction");
}

double BessSpec::p_box_kw() const { return s_max_kva / std::sqrt(2.0); }

void PvSpec::validate() const {
  if (p_max_kw.size() && p_max_kw.minCoeff() < 0.0)
    throw std::invalid_argument("pv: generation potential must be nonnegative");
}

double PriceSignal::evaluate(const Eigen::VectorXd& x) const {
  return fixed_fee + linear.dot(x) + 0.5 * x.dot(quadratic * x);
}

Eigen::VectorXd PriceSignal::tariff_at(const Eigen::VectorXd& x) const {
  return linear + 0.5 * (quadratic * x);
}

PriceSignal PriceSignal::flat(const Eigen::VectorXd& c) {
  PriceSignal s;
  s.quadratic = Eigen::MatrixXd::Zero(c.size(), c.size());
  s.linear = c;
  s.fixed_fee = 0.0;
  return s;
}

Eigen::VectorXd tariff_vector(const Eigen::VectorXd& price_chf_per_kwh, double dt_hours) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * price_chf_per_kwh.size());
  for (int t = 0; t < price_chf_per_kwh.size(); ++t) c(2 * t) = price_chf_per_kwh(t) * dt_hours;
  return c;
}

ProsumerProblem build_prosumer_problem(const BessSpec& bess, const Eigen::VectorXd& load_p,
                                       const Eigen::VectorXd& load_q, const Eigen::VectorXd& pv_max,
                                       int horizon, double dt_hours) {
  bess.validate();
  if (load_p.size() != horizon || load_q.size() != horizon || pv_max.size() != horizon)
    throw std::invalid_argument("prosumer series length does not match the horizon");
  if (!(dt_hours > 0.0)) throw std::invalid_argument("dt must be positive");
  if (pv_max.size() && pv_max.minCoeff() < 0.0)
    throw std::invalid_argument("pv: generation potential must be nonnegative");
  ProsumerProblem p;
  p.horizon = horizon;
  p.dt_hours = dt_hours;
  p.bess = bess;
  p.load_p = load_p;
  p.load_q = load_q;
  p.pv_max = pv_max;
  return p;
}

// variable layout of the full problem: [p_b(K); q_b(K); p_pv(K); x(2K)]
qp::QuadraticProgram ProsumerProblem::skeleton() const {
  const int k = horizon;
  const int n = 5 * k;
  qp::QuadraticProgram qp;
  qp.P = Eigen::MatrixXd::Zero(n, n);
  qp.q = Eigen::VectorXd::Zero(n);

  // aggregation: x_p + p_pv + p_b = load_p, x_q + q_b = load_q
  qp.A_eq = Eigen::MatrixXd::Zero(2 * k, n);
  qp.b_eq.resize(2 * k);
  for (int t = 0; t < k; ++t) {
    qp.A_eq(2 * t, t) = 1.0;              // p_b
    qp.A_eq(2 * t, 2 * k + t) = 1.0;      // p_pv
    qp.A_eq(2 * t, 3 * k + 2 * t) = 1.0;  // x_p
    qp.b_eq(2 * t) = load_p(t);
    qp.A_eq(2 * t + 1, k + t) = 1.0;          // q_b
    qp.A_eq(2 * t + 1, 3 * k + 2 * t + 1) = 1.0;  // x_q
    qp.b_eq(2 * t + 1) = load_q(t);
  }

  // SoC window as prefix sums of p_b
  const double a = dt_hours / bess.e_kwh;
  qp.A_in = Eigen::MatrixXd::Zero(2 * k, n);
  qp.b_in.resize(2 * k);
  for (int t = 0; t < k; ++t) {
    for (int tau = 0; tau <= t; ++tau) {
      qp.A_in(2 * t, tau) = -a;      // soc <= soc_max
      qp.A_in(2 * t + 1, tau) = a;   // soc >= soc_min
    }
    qp.b_in(2 * t) = bess.soc_max - bess.soc_init;
    qp.b_in(2 * t + 1) = bess.soc_init - bess.soc_min;
  }

  qp.lb = Eigen::VectorXd::Constant(n, -qp::kInf);
  qp.ub = Eigen::VectorXd::Constant(n, qp::kInf);
  const double box = bess.p_box_kw();
  for (int t = 0; t < k; ++t) {
    qp.lb(t) = -box;
    qp.ub(t) = box;
    qp.lb(k + t) = -box;
    qp.ub(k + t) = box;
    qp.lb(2 * k + t) = 0.0;
    qp.ub(2 * k + t) = pv_max(t);
  }
  return qp;
}

Eigen::VectorXd ProsumerProblem::demand_from_resources(const Eigen::VectorXd& p_b,
                                                       const Eigen::VectorXd& q_b,
                                                       const Eigen::VectorXd& p_pv) const {
  Eigen::VectorXd x(2 * horizon);
  for (int t = 0; t < horizon; ++t) {
    x(2 * t) = load_p(t) - p_pv(t) - p_b(t);
    x(2 * t + 1) = load_q(t) - q_b(t);
  }
  return x;
}

Eigen::VectorXd ProsumerProblem::soc_trajectory(const Eigen::VectorXd& p_b) const {
  Eigen::VectorXd soc(horizon);
  double acc = 0.0;
  for (int t = 0; t < horizon; ++t) {
    acc += p_b(t);
    soc(t) = bess.soc_init - dt_hours / bess.e_kwh * acc;
  }
  return soc;
}

namespace {

XUpdateResult package(const ProsumerProblem& prob, const Eigen::VectorXd& p_b,
                      const Eigen::VectorXd& q_b, const Eigen::VectorXd& p_pv,
                      const PriceSignal& signal, const qp::QpSolution& sol) {
  XUpdateResult out;
  out.resources.p_b = p_b;
  out.resources.q_b = q_b;
  out.resources.p_pv = p_pv;
  out.resources.soc = prob.soc_trajectory(p_b);
  out.demand.x = prob.demand_from_resources(p_b, q_b, p_pv);
  out.objective = signal.evaluate(out.demand.x);
  out.status = sol.status;
  out.qp_iterations = sol.iterations;
  return out;
}

// Reduced route: substitute x = d + L w, w = [p_b; q_b; p_pv]. L has a single
// -1 per column (p_b and p_pv feed the active entry of their step, q_b the
// reactive one), so reduced blocks are plain gathers from H.
XUpdateResult solve_reduced(const ProsumerProblem& prob, const PriceSignal& signal) {
  const int k = prob.horizon;
  const int n = 3 * k;
  std::vector<int> map(n);
  for (int t = 0; t < k; ++t) {
    map[t] = 2 * t;              // p_b
    map[k + t] = 2 * t + 1;     // q_b
    map[2 * k + t] = 2 * t;     // p_pv
  }
  Eigen::VectorXd d(2 * k);
  for (int t = 0; t < k; ++t) {
    d(2 * t) = prob.load_p(t);
    d(2 * t + 1) = prob.load_q(t);
  }

  qp::QuadraticProgram qp;
  qp.P.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) qp.P(i, j) = signal.quadratic(map[i], map[j]);
  Eigen::VectorXd v = signal.quadratic * d + signal.linear;
  qp.q.resize(n);
  for (int i = 0; i < n; ++i) qp.q(i) = -v(map[i]);
  // action regularizer: eps(|p_b|^2 + |q_b|^2 + |pv_max - p_pv|^2)
  qp.P.diagonal().array() += 2.0 * kActionReg;
  for (int t = 0; t < k; ++t) qp.q(2 * k + t) -= 2.0 * kActionReg * prob.pv_max(t);

  const double a = prob.dt_hours / prob.bess.e_kwh;
  qp.A_in = Eigen::MatrixXd::Zero(2 * k, n);
  qp.b_in.resize(2 * k);
  for (int t = 0; t < k; ++t) {
    for (int tau = 0; tau <= t; ++tau) {
      qp.A_in(2 * t, tau) = -a;
      qp.A_in(2 * t + 1, tau) = a;
    }
    qp.b_in(2 * t) = prob.bess.soc_max - prob.bess.soc_init;
    qp.b_in(2 * t + 1) = prob.bess.soc_init - prob.bess.soc_min;
  }
  const double box = prob.bess.p_box_kw();
  qp.lb.resize(n);
  qp.ub.resize(n);
  for (int t = 0; t < k; ++t) {
    qp.lb(t) = -box;
    qp.ub(t) = box;
    qp.lb(k + t) = -box;
    qp.ub(k + t) = box;
    qp.lb(2 * k + t) = 0.0;
    qp.ub(2 * k + t) = prob.pv_max(t);
  }

  qp::QpOptions opt;
  opt.check_convexity = false;  // H is rho A'A + reg, PSD by construction
  qp::QpSolution sol = qp::solve_qp(qp, opt);
  return package(prob, sol.u.segment(0, k), sol.u.segment(k, k), sol.u.segment(2 * k, k), signal,
                 sol);
}

XUpdateResult solve_full(const ProsumerProblem& prob, const PriceSignal& signal) {
  const int k = prob.horizon;
  qp::QuadraticProgram qp = prob.skeleton();
  qp.P.bottomRightCorner(2 * k, 2 * k) = signal.quadratic;
  qp.q.tail(2 * k) = signal.linear;
  qp.P.diagonal().head(3 * k).array() += 2.0 * kActionReg;
  for (int t = 0; t < k; ++t) qp.q(2 * k + t) -= 2.0 * kActionReg * prob.pv_max(t);

  qp::QpOptions opt;
  opt.check_convexity = false;
  qp::QpSolution sol = qp::solve_qp(qp, opt);
  return package(prob, sol.u.segment(0, k), sol.u.segment(k, k), sol.u.segment(2 * k, k), signal,
                 sol);
}

}  // namespace

XUpdateResult x_update(const ProsumerProblem& prob, const PriceSignal& signal,
                       XUpdateRoute route) {
  if (signal.linear.size() != 2 * prob.horizon ||
      signal.quadratic.rows() != 2 * prob.horizon)
    throw std::invalid_argument("price signal dimensions do not match the horizon");
  return route == XUpdateRoute::Reduced ? solve_reduced(prob, signal) : solve_full(prob, signal);
}

XUpdateResult local_cost_min(const ProsumerProblem& prob, const Eigen::VectorXd& tariff) {
  return x_update(prob, PriceSignal::flat(tariff));
}

RtSetpoint rt_control(const BessSpec& bess, double soc, double p_target, double q_target,
                      double p_load_fc, double q_load_fc, double pv_potential_fc,
                      double curtail_frac, double dt_rt_hours) {
  bess.validate();
  if (soc < bess.soc_min - 1e-9 || soc > bess.soc_max + 1e-9)
    throw std::runtime_error("state out of bounds: soc outside its limits");
  const double p_pv = (1.0 - curtail_frac) * pv_potential_fc;
  const double p0 = p_load_fc - p_pv;  // demand with the battery idle

  // min (p0 - p_b - p_target)^2 + (q_load - q_b - q_target)^2 over the box
  // and the one-step SoC window
  const double box = bess.p_box_kw();
  double lo = -box, hi = box;
  // soc - dt/E * p_b within [soc_min, soc_max]
  const double a = dt_rt_hours / bess.e_kwh;
  lo = std::max(lo, (soc - bess.soc_max) / a);
  hi = std::min(hi, (soc - bess.soc_min) / a);

  qp::QuadraticProgram qp;
  qp.P = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  qp.q.resize(2);
  qp.q(0) = -2.0 * (p0 - p_target);
  qp.q(1) = -2.0 * (q_load_fc - q_target);
  qp.lb.resize(2);
  qp.ub.resize(2);
  qp.lb(0) = lo;
  qp.ub(0) = hi;
  qp.lb(1) = -box;
  qp.ub(1) = box;
  qp::QpOptions opt;
  opt.check_convexity = false;
  qp::QpSolution sol = qp::solve_qp(qp, opt);

  RtSetpoint sp;
  sp.p_b = sol.u(0);
  sp.q_b = sol.u(1);
  sp.p_dem = p0 - sp.p_b;
  sp.q_dem = q_load_fc - sp.q_b;
  return sp;
}

std::string verify_schedule(const ProsumerProblem& prob, const DemandSchedule& d,
                            const ResourceSchedule& r, double tol) {
  std::ostringstream why;
  const int k = prob.horizon;
  const double box = prob.bess.p_box_kw() + tol;
  Eigen::VectorXd soc = prob.soc_trajectory(r.p_b);
  for (int t = 0; t < k; ++t) {
    if (std::abs(soc(t) - r.soc(t)) > 1e-12) {
      why << "soc recursion broken at step " << t;
      return why.str();
    }
    if (soc(t) < prob.bess.soc_min - tol || soc(t) > prob.bess.soc_max + tol) {
      why << "soc bound violated at step " << t << ": " << soc(t);
      return why.str();
    }
    if (std::abs(r.p_b(t)) > box || std::abs(r.q_b(t)) > box) {
      why << "bess power box violated at step " << t;
      return why.str();
    }
    if (r.p_pv(t) < -tol || r.p_pv(t) > prob.pv_max(t) + tol) {
      why << "pv curtailment range violated at step " << t;
      return why.str();
    }
    if (std::abs(d.p(t) - (prob.load_p(t) - r.p_pv(t) - r.p_b(t))) > 1e-9 ||
        std::abs(d.q(t) - (prob.load_q(t) - r.q_b(t))) > 1e-9) {
      why << "aggregation broken at step " << t;
      return why.str();
    }
  }
  return {};
}

}  // namespace flexprice::prosumer
