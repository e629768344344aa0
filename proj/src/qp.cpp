#include "flexprice/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace flexprice::qp {

namespace {

double inf_norm(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Fraction-to-boundary: largest a in (0, 1] with x + a*dx >= (1-tau)*x.
double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double tau) {
  double a = 1.0;
  for (int i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -tau * x(i) / dx(i));
  return a;
}

struct BoxSide {
  std::vector<int> idx;     // variable indices with a finite bound
  Eigen::VectorXd bound;    // bound values, compressed
  Eigen::VectorXd slack;    // primal slack (>0)
  Eigen::VectorXd dual;     // multiplier (>0)
  int count() const { return static_cast<int>(idx.size()); }
};

}  // namespace

void QuadraticProgram::validate() const {
  const int n = num_vars();
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("qp: P dimension mismatch");
  if (A_eq.size() > 0 && A_eq.cols() != n) throw std::invalid_argument("qp: A_eq column mismatch");
  if (A_eq.rows() != b_eq.size()) throw std::invalid_argument("qp: b_eq length mismatch");
  if (A_in.size() > 0 && A_in.cols() != n) throw std::invalid_argument("qp: A_in column mismatch");
  if (A_in.rows() != b_in.size()) throw std::invalid_argument("qp: b_in length mismatch");
  if (lb.size() != 0 && lb.size() != n) throw std::invalid_argument("qp: lb length mismatch");
  if (ub.size() != 0 && ub.size() != n) throw std::invalid_argument("qp: ub length mismatch");
  if (!q.allFinite() || !P.allFinite()) throw std::invalid_argument("qp: non-finite objective");
  for (int i = 0; i < lb.size(); ++i)
    if (lb(i) > (ub.size() ? ub(i) : kInf)) throw std::invalid_argument("qp: lb exceeds ub");
}

namespace {

void check_convex(const Eigen::MatrixXd& p) {
  const double scale = inf_norm(p);
  if (p.rows() == 0) return;
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + scale))
    throw std::invalid_argument("nonconvex objective: quadratic matrix not symmetric");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(p);
  const double floor = -1e-9 * std::max(scale, 1e-30);
  if (ldlt.vectorD().minCoeff() < floor) {
    // LDLT pivots flagged a negative direction; confirm with the spectrum
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < floor)
      throw std::invalid_argument("nonconvex objective");
  }
}

struct Workspace {
  int n, me, mi;
  const QuadraticProgram* qp;
  Eigen::VectorXd u, nu, lam, s;
  BoxSide lo, hi;
  // compressed column support of A_in, used when sparse enough
  std::vector<int> sup;
  Eigen::MatrixXd a_sup;

  double q_scale = 1.0;

  void snapshot(Workspace& dst) const {
    dst.u = u;
    dst.nu = nu;
    dst.lam = lam;
    dst.s = s;
    dst.lo.slack = lo.slack;
    dst.lo.dual = lo.dual;
    dst.hi.slack = hi.slack;
    dst.hi.dual = hi.dual;
  }
  void restore(const Workspace& src) {
    u = src.u;
    nu = src.nu;
    lam = src.lam;
    s = src.s;
    lo.slack = src.lo.slack;
    lo.dual = src.lo.dual;
    hi.slack = src.hi.slack;
    hi.dual = src.hi.dual;
  }

  void scatter_sub(Eigen::VectorXd& v, const BoxSide& b, const Eigen::VectorXd& c, double sign) {
    for (int k = 0; k < b.count(); ++k) v(b.idx[k]) += sign * c(k);
  }

  Eigen::VectorXd gather(const Eigen::VectorXd& v, const BoxSide& b) const {
    Eigen::VectorXd out(b.count());
    for (int k = 0; k < b.count(); ++k) out(k) = v(b.idx[k]);
    return out;
  }

  // True KKT residuals at the current iterate.
  Eigen::VectorXd stationarity_vec() const {
    Eigen::VectorXd r = qp->P * u + qp->q;
    if (me) r += qp->A_eq.transpose() * nu;
    if (mi) r += qp->A_in.transpose() * lam;
    for (int k = 0; k < lo.count(); ++k) r(lo.idx[k]) -= lo.dual(k);
    for (int k = 0; k < hi.count(); ++k) r(hi.idx[k]) += hi.dual(k);
    return r;
  }

  double primal_violation() const {
    double v = 0.0;
    if (me) v = (qp->A_eq * u - qp->b_eq).cwiseAbs().maxCoeff();
    if (mi) v = std::max(v, (qp->A_in * u - qp->b_in).maxCoeff());
    for (int k = 0; k < lo.count(); ++k) v = std::max(v, lo.bound(k) - u(lo.idx[k]));
    for (int k = 0; k < hi.count(); ++k) v = std::max(v, u(hi.idx[k]) - hi.bound(k));
    return std::max(v, 0.0);
  }

  double complementarity() const {
    double c = 0.0;
    for (int i = 0; i < mi; ++i) c = std::max(c, std::abs(s(i) * lam(i)));
    for (int k = 0; k < lo.count(); ++k) c = std::max(c, std::abs(lo.slack(k) * lo.dual(k)));
    for (int k = 0; k < hi.count(); ++k) c = std::max(c, std::abs(hi.slack(k) * hi.dual(k)));
    return c;
  }

  double mu() const {
    const int pairs = mi + lo.count() + hi.count();
    if (!pairs) return 0.0;
    double sum = s.dot(lam);
    sum += lo.slack.dot(lo.dual) + hi.slack.dot(hi.dual);
    return sum / pairs;
  }
};

void fill_certificate(QpSolution& sol, Workspace& w) {
  const QuadraticProgram& qp = *w.qp;
  sol.u = w.u;
  sol.dual_eq = w.nu;
  sol.dual_in = w.lam;
  sol.dual_lb = Eigen::VectorXd::Zero(w.n);
  sol.dual_ub = Eigen::VectorXd::Zero(w.n);
  for (int k = 0; k < w.lo.count(); ++k) sol.dual_lb(w.lo.idx[k]) = w.lo.dual(k);
  for (int k = 0; k < w.hi.count(); ++k) sol.dual_ub(w.hi.idx[k]) = w.hi.dual(k);
  sol.stationarity = w.stationarity_vec().cwiseAbs().maxCoeff();
  sol.primal_feas = w.primal_violation();
  sol.complementarity = w.complementarity();
  sol.objective = 0.5 * w.u.dot(qp.P * w.u) + qp.q.dot(w.u);
  double dual_obj = -0.5 * w.u.dot(qp.P * w.u);
  if (w.me) dual_obj -= w.nu.dot(qp.b_eq);
  if (w.mi) dual_obj -= w.lam.dot(qp.b_in);
  dual_obj += w.lo.dual.dot(w.lo.bound) - w.hi.dual.dot(w.hi.bound);
  sol.duality_gap = std::abs(sol.objective - dual_obj);
}

// Equality-only (or unconstrained) QP: one augmented KKT solve.
QpSolution solve_equality_qp(const QuadraticProgram& qp, const QpOptions& opt, Workspace& w) {
  const int n = w.n, me = w.me;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + me, n + me);
  kkt.topLeftCorner(n, n) = qp.P;
  const double reg = 1e-12 * (1.0 + inf_norm(qp.P));
  kkt.topLeftCorner(n, n).diagonal().array() += reg;
  if (me) {
    kkt.topRightCorner(n, me) = qp.A_eq.transpose();
    kkt.bottomLeftCorner(me, n) = qp.A_eq;
    kkt.bottomRightCorner(me, me).diagonal().array() -= reg;
  }
  Eigen::VectorXd rhs(n + me);
  rhs.head(n) = -qp.q;
  if (me) rhs.tail(me) = qp.b_eq;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(kkt);
  Eigen::VectorXd x = ldlt.solve(rhs);
  x += ldlt.solve(rhs - kkt * x);  // one refinement round
  QpSolution sol;
  if (!x.allFinite()) {
    w.u.setZero();
    fill_certificate(sol, w);
    sol.status = Status::MaxIter;
    return sol;
  }
  w.u = x.head(n);
  if (me) w.nu = x.tail(me);
  fill_certificate(sol, w);
  const bool stat_ok = sol.stationarity <= opt.tol * (1.0 + w.q_scale);
  const bool prim_ok = sol.primal_feas <= std::max(opt.tol, 1e-9 * (1.0 + inf_norm(qp.b_eq)));
  if (stat_ok && prim_ok) {
    sol.status = Status::Optimal;
  } else if (!prim_ok && me) {
    // distinguish inconsistent equality systems from an unbounded objective
    Eigen::VectorXd ls = qp.A_eq.colPivHouseholderQr().solve(qp.b_eq);
    double res = (qp.A_eq * ls - qp.b_eq).cwiseAbs().maxCoeff();
    sol.status = res > 1e-8 * (1.0 + inf_norm(qp.b_eq)) ? Status::Infeasible : Status::MaxIter;
  } else {
    sol.status = Status::MaxIter;
  }
  sol.iterations = 1;
  return sol;
}

// Snap the endgame iterate to the optimal face: pin every constraint whose
// measured slack is (near) zero, solve the equality-pinned KKT for the
// primal, then recover nonnegative multipliers on the pinned rows by a
// projected-gradient least-squares pass (pinned rows may be linearly
// dependent, so a plain KKT dual split can carry the wrong sign). Commits
// only a fully certified point.
bool polish(const QuadraticProgram& qp, Workspace& w, double tol_stat, double tol_pri,
            double tol_compl, bool trace = false) {
  const int n = w.n;
  const double u_scale = w.u.size() ? w.u.cwiseAbs().maxCoeff() : 0.0;
  std::vector<int> rows_in, rows_lo, rows_hi;
  if (w.mi) {
    Eigen::VectorXd slack = qp.b_in - qp.A_in * w.u;
    for (int i = 0; i < w.mi; ++i) {
      const double rs = qp.A_in.row(i).cwiseAbs().maxCoeff();
      if (slack(i) <= 1e-6 * (1.0 + rs * u_scale)) rows_in.push_back(i);
    }
  }
  for (int k = 0; k < w.lo.count(); ++k)
    if (w.u(w.lo.idx[k]) - w.lo.bound(k) <= 1e-6 * (1.0 + std::abs(w.lo.bound(k))))
      rows_lo.push_back(k);
  for (int k = 0; k < w.hi.count(); ++k)
    if (w.hi.bound(k) - w.u(w.hi.idx[k]) <= 1e-6 * (1.0 + std::abs(w.hi.bound(k))))
      rows_hi.push_back(k);

  const int mp = static_cast<int>(rows_in.size() + rows_lo.size() + rows_hi.size());
  const int ma = w.me + mp;

  Eigen::MatrixXd a_act = Eigen::MatrixXd::Zero(ma, n);
  Eigen::VectorXd b_act(ma);
  int r = 0;
  for (int i = 0; i < w.me; ++i, ++r) {
    a_act.row(r) = qp.A_eq.row(i);
    b_act(r) = qp.b_eq(i);
  }
  for (int i : rows_in) {
    a_act.row(r) = qp.A_in.row(i);
    b_act(r) = qp.b_in(i);
    ++r;
  }
  for (int k : rows_lo) {
    a_act(r, w.lo.idx[k]) = -1.0;
    b_act(r) = -w.lo.bound(k);
    ++r;
  }
  for (int k : rows_hi) {
    a_act(r, w.hi.idx[k]) = 1.0;
    b_act(r) = w.hi.bound(k);
    ++r;
  }

  // primal snap
  const double reg = 1e-11 * (1.0 + inf_norm(qp.P));
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + ma, n + ma);
  kkt.topLeftCorner(n, n) = qp.P;
  kkt.topLeftCorner(n, n).diagonal().array() += reg;
  kkt.topRightCorner(n, ma) = a_act.transpose();
  kkt.bottomLeftCorner(ma, n) = a_act;
  kkt.bottomRightCorner(ma, ma).diagonal().array() -= reg;
  Eigen::VectorXd rhs(n + ma);
  rhs.head(n) = -qp.q;
  rhs.tail(ma) = b_act;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(kkt);
  if (ldlt.info() != Eigen::Success) {
    if (trace) std::fprintf(stderr, "polish: ldlt failed (%d pinned)\n", ma);
    return false;
  }
  Eigen::VectorXd x = ldlt.solve(rhs);
  for (int rr = 0; rr < 2; ++rr) x += ldlt.solve(rhs - kkt * x);
  if (!x.allFinite()) return false;
  const Eigen::VectorXd u = x.head(n);

  // the pinned face must contain the optimum; any violation means the
  // guess was wrong
  {
    Workspace probe = w;
    probe.u = u;
    if (probe.primal_violation() > std::max(tol_pri, 1e-9 * (1.0 + u_scale))) {
      if (trace)
        std::fprintf(stderr, "polish: face infeasible by %.3e (%d pinned)\n",
                     probe.primal_violation(), ma);
      return false;
    }
  }

  // nonnegative multipliers on the pinned rows: projected FISTA on
  // 0.5 || v + B' d ||^2 with d >= 0 outside the equality head
  const Eigen::VectorXd v = qp.P * u + qp.q;
  Eigen::MatrixXd gram = a_act * a_act.transpose();
  Eigen::VectorXd w0 = a_act * v;
  double lips = 1.0;
  {
    Eigen::VectorXd pw = Eigen::VectorXd::Ones(ma);
    for (int it = 0; it < 12; ++it) {
      pw = gram * pw;
      const double nrm = pw.norm();
      if (nrm <= 0.0) break;
      pw /= nrm;
      lips = nrm;
    }
    lips = std::max(lips, 1e-12);
  }
  Eigen::VectorXd d = Eigen::VectorXd::Zero(ma), d_prev = d, yv = d;
  double t_acc = 1.0;
  const int fista_iters = 2000;
  for (int it = 0; it < fista_iters; ++it) {
    Eigen::VectorXd grad = gram * yv + w0;
    Eigen::VectorXd d_new = yv - grad / lips;
    for (int i = w.me; i < ma; ++i) d_new(i) = std::max(0.0, d_new(i));
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
    yv = d_new + ((t_acc - 1.0) / t_new) * (d_new - d_prev);
    d_prev = d;
    d = d_new;
    t_acc = t_new;
    if (it % 50 == 49 &&
        (v + a_act.transpose() * d).cwiseAbs().maxCoeff() <= 0.2 * tol_stat)
      break;
  }

  Workspace trial;
  w.snapshot(trial);
  w.u = u;
  if (w.me) w.nu = d.head(w.me);
  if (w.mi) {
    w.lam.setZero();
    w.s = qp.b_in - qp.A_in * w.u;
  }
  w.lo.dual.setZero();
  w.hi.dual.setZero();
  for (int k = 0; k < w.lo.count(); ++k) w.lo.slack(k) = w.u(w.lo.idx[k]) - w.lo.bound(k);
  for (int k = 0; k < w.hi.count(); ++k) w.hi.slack(k) = w.hi.bound(k) - w.u(w.hi.idx[k]);
  int mr = w.me;
  for (int i : rows_in) w.lam(i) = d(mr++);
  for (int k : rows_lo) w.lo.dual(k) = d(mr++);
  for (int k : rows_hi) w.hi.dual(k) = d(mr++);

  const double stat = w.stationarity_vec().cwiseAbs().maxCoeff();
  const double prim = w.primal_violation();
  const double compl_now = w.complementarity();
  if (stat <= tol_stat && prim <= tol_pri && compl_now <= tol_compl) return true;
  if (trace)
    std::fprintf(stderr, "polish: reject stat %.3e prim %.3e compl %.3e (%d pinned)\n", stat,
                 prim, compl_now, ma);
  w.restore(trial);
  return false;
}

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opt) {
  qp.validate();
  if (opt.check_convexity) check_convex(qp.P);

  Workspace w;
  w.qp = &qp;
  w.n = qp.num_vars();
  w.me = static_cast<int>(qp.A_eq.rows());
  w.mi = static_cast<int>(qp.A_in.rows());
  w.q_scale = qp.q.size() ? qp.q.cwiseAbs().maxCoeff() : 0.0;

  for (int i = 0; i < qp.lb.size(); ++i)
    if (std::isfinite(qp.lb(i))) w.lo.idx.push_back(i);
  for (int i = 0; i < qp.ub.size(); ++i)
    if (std::isfinite(qp.ub(i))) w.hi.idx.push_back(i);
  w.lo.bound.resize(w.lo.count());
  for (int k = 0; k < w.lo.count(); ++k) w.lo.bound(k) = qp.lb(w.lo.idx[k]);
  w.hi.bound.resize(w.hi.count());
  for (int k = 0; k < w.hi.count(); ++k) w.hi.bound(k) = qp.ub(w.hi.idx[k]);

  // starting point
  w.u = Eigen::VectorXd::Zero(w.n);
  if (opt.warm_start && opt.warm_start->size() == w.n) w.u = *opt.warm_start;
  for (int i = 0; i < w.n; ++i) {
    const double l = qp.lb.size() ? qp.lb(i) : -kInf;
    const double h = qp.ub.size() ? qp.ub(i) : kInf;
    if (std::isfinite(l) && std::isfinite(h)) {
      const double margin = 0.1 * (h - l);
      w.u(i) = std::clamp(w.u(i), l + margin, h - margin);
      if (!(h > l)) w.u(i) = l;  // degenerate box
    } else if (std::isfinite(l)) {
      w.u(i) = std::max(w.u(i), l + 1.0);
    } else if (std::isfinite(h)) {
      w.u(i) = std::min(w.u(i), h - 1.0);
    }
  }
  w.nu = Eigen::VectorXd::Zero(w.me);

  const int pairs = w.mi + w.lo.count() + w.hi.count();
  if (pairs == 0) return solve_equality_qp(qp, opt, w);

  if (w.mi) {
    Eigen::VectorXd resid = qp.b_in - qp.A_in * w.u;
    w.s.resize(w.mi);
    for (int i = 0; i < w.mi; ++i)
      w.s(i) = std::max(resid(i), 0.1 * (1.0 + std::abs(qp.b_in(i))));
    w.lam = Eigen::VectorXd::Ones(w.mi);
  }
  w.lo.slack.resize(w.lo.count());
  for (int k = 0; k < w.lo.count(); ++k)
    w.lo.slack(k) = std::max(w.u(w.lo.idx[k]) - w.lo.bound(k), 0.1 * (1.0 + std::abs(w.lo.bound(k))));
  w.lo.dual = Eigen::VectorXd::Ones(w.lo.count());
  w.hi.slack.resize(w.hi.count());
  for (int k = 0; k < w.hi.count(); ++k)
    w.hi.slack(k) = std::max(w.hi.bound(k) - w.u(w.hi.idx[k]), 0.1 * (1.0 + std::abs(w.hi.bound(k))));
  w.hi.dual = Eigen::VectorXd::Ones(w.hi.count());

  const double tol_stat = opt.tol * (1.0 + w.q_scale);
  const double tol_pri = opt.tol;
  const double tol_compl = opt.tol;
  const int iter_cap = std::min(opt.max_iter, 300);
  const double delta_base = 1e-12 * (1.0 + inf_norm(qp.P));
  const double delta_cap = 1e-7 * (1.0 + inf_norm(qp.P));
  double delta = delta_base;

  QpSolution sol;
  double best_primal = kInf;
  int stall = 0;

  Workspace best;
  double best_score = kInf;
  int no_improve = 0;
  int polish_tries = 0;

  const int nk = w.n + w.me + w.mi;
  Eigen::MatrixXd kkt_m(nk, nk);
  Eigen::LDLT<Eigen::MatrixXd> kkt_ldlt;

  int iter = 0;
  for (; iter < iter_cap; ++iter) {
    Eigen::VectorXd r1 = w.stationarity_vec();
    Eigen::VectorXd r2 = w.me ? Eigen::VectorXd(qp.A_eq * w.u - qp.b_eq) : Eigen::VectorXd();
    Eigen::VectorXd r3 = w.mi ? Eigen::VectorXd(qp.A_in * w.u + w.s - qp.b_in) : Eigen::VectorXd();
    Eigen::VectorXd r4 = w.gather(w.u, w.lo) - w.lo.bound - w.lo.slack;
    Eigen::VectorXd r5 = w.hi.bound - w.gather(w.u, w.hi) - w.hi.slack;

    const double stat = r1.cwiseAbs().maxCoeff();
    const double prim = w.primal_violation();
    const double compl_now = w.complementarity();
    if (opt.trace)
      std::fprintf(stderr, "qp iter %3d  stat %.3e  prim %.3e  compl %.3e  mu %.3e  delta %.1e\n",
                   iter, stat, prim, compl_now, w.mu(), delta);
    if (stat <= tol_stat && prim <= tol_pri && compl_now <= tol_compl) {
      fill_certificate(sol, w);
      sol.status = Status::Optimal;
      sol.iterations = iter;
      return sol;
    }

    const double score = std::max({stat / tol_stat, prim / tol_pri, compl_now / tol_compl});
    if (score < 0.95 * best_score) {
      best_score = score;
      w.snapshot(best);
      no_improve = 0;
    } else {
      ++no_improve;
    }

    // infeasibility heuristics: primal residual refuses to move while the
    // barrier collapses or the duals explode
    if (prim < best_primal * 0.9) {
      best_primal = prim;
      stall = 0;
    } else {
      ++stall;
    }
    double dual_norm = w.lam.size() ? w.lam.cwiseAbs().maxCoeff() : 0.0;
    dual_norm = std::max({dual_norm,
                          w.nu.size() ? w.nu.cwiseAbs().maxCoeff() : 0.0,
                          w.lo.dual.size() ? w.lo.dual.maxCoeff() : 0.0,
                          w.hi.dual.size() ? w.hi.dual.maxCoeff() : 0.0});
    if (prim > std::max(1e3 * tol_pri, 1e-10) &&
        ((stall > 25 && w.mu() < 1e-10) || dual_norm > 1e11)) {
      fill_certificate(sol, w);
      sol.status = Status::Infeasible;
      sol.iterations = iter;
      return sol;
    }

    // endgame: once the barrier is nearly closed (or progress stalls with a
    // feasible iterate), one active-set polish is usually exact
    const bool endgame = w.mu() < 1e-9 * (1.0 + w.q_scale) || (no_improve >= 8 && prim <= 1e-6);
    if (endgame && polish_tries < 4) {
      ++polish_tries;
      if (polish(qp, w, tol_stat, tol_pri, tol_compl, opt.trace)) {
        fill_certificate(sol, w);
        sol.status = Status::Optimal;
        sol.iterations = iter;
        return sol;
      }
    }
    if (no_improve >= 25) break;  // stalled; fall through to the best iterate

    // regularized augmented KKT: boxes stay diagonal in the (1,1) block,
    // the general inequality rows keep their own block so active-row
    // barrier weights are never squared into the Hessian
    kkt_m.setZero(nk, nk);
    kkt_m.topLeftCorner(w.n, w.n) = qp.P;
    kkt_m.topLeftCorner(w.n, w.n).diagonal().array() += delta;
    for (int k = 0; k < w.lo.count(); ++k)
      kkt_m(w.lo.idx[k], w.lo.idx[k]) += w.lo.dual(k) / w.lo.slack(k);
    for (int k = 0; k < w.hi.count(); ++k)
      kkt_m(w.hi.idx[k], w.hi.idx[k]) += w.hi.dual(k) / w.hi.slack(k);
    if (w.me) {
      kkt_m.block(w.n, 0, w.me, w.n) = qp.A_eq;
      kkt_m.block(0, w.n, w.n, w.me) = qp.A_eq.transpose();
      kkt_m.block(w.n, w.n, w.me, w.me).diagonal().array() = -delta;
    }
    if (w.mi) {
      kkt_m.block(w.n + w.me, 0, w.mi, w.n) = qp.A_in;
      kkt_m.block(0, w.n + w.me, w.n, w.mi) = qp.A_in.transpose();
      kkt_m.block(w.n + w.me, w.n + w.me, w.mi, w.mi).diagonal() =
          (-(w.s.array() / w.lam.array()) - delta).matrix();
    }
    kkt_ldlt.compute(kkt_m);
    if (kkt_ldlt.info() != Eigen::Success) {
      delta = std::min(std::max(delta * 100.0, 1e-10), delta_cap);
      kkt_m.topLeftCorner(w.n, w.n).diagonal().array() += delta;
      kkt_ldlt.compute(kkt_m);
      if (kkt_ldlt.info() != Eigen::Success) break;
    }

    auto kkt_solve = [&](const Eigen::VectorXd& rhs) {
      Eigen::VectorXd x = kkt_ldlt.solve(rhs);
      for (int rr = 0; rr < 2; ++rr) x += kkt_ldlt.solve(rhs - kkt_m * x);
      return x;
    };

    auto direction = [&](const Eigen::VectorXd& r6s, const Eigen::VectorXd& r6g,
                         const Eigen::VectorXd& r6h, Eigen::VectorXd& du, Eigen::VectorXd& dnu,
                         Eigen::VectorXd& ds, Eigen::VectorXd& dlam, Eigen::VectorXd& dgl,
                         Eigen::VectorXd& dmul, Eigen::VectorXd& dgh, Eigen::VectorXd& dmuh) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nk);
      rhs.head(w.n) = -r1;
      if (w.lo.count()) {
        Eigen::VectorXd c = ((r6g + w.lo.dual.cwiseProduct(r4)).array() / w.lo.slack.array());
        for (int k = 0; k < w.lo.count(); ++k) rhs(w.lo.idx[k]) -= c(k);
      }
      if (w.hi.count()) {
        Eigen::VectorXd c = ((r6h + w.hi.dual.cwiseProduct(r5)).array() / w.hi.slack.array());
        for (int k = 0; k < w.hi.count(); ++k) rhs(w.hi.idx[k]) += c(k);
      }
      if (w.me) rhs.segment(w.n, w.me) = -r2;
      if (w.mi)
        rhs.segment(w.n + w.me, w.mi) =
            (r6s.array() / w.lam.array()).matrix() - r3;
      Eigen::VectorXd x = kkt_solve(rhs);
      du = x.head(w.n);
      dnu = w.me ? Eigen::VectorXd(x.segment(w.n, w.me)) : Eigen::VectorXd();
      if (w.mi) {
        dlam = x.tail(w.mi);
        ds = -r3 - qp.A_in * du;
      }
      if (w.lo.count()) {
        dgl = w.gather(du, w.lo) + r4;
        dmul = ((-r6g - w.lo.dual.cwiseProduct(dgl)).array() / w.lo.slack.array()).matrix();
      }
      if (w.hi.count()) {
        dgh = r5 - w.gather(du, w.hi);
        dmuh = ((-r6h - w.hi.dual.cwiseProduct(dgh)).array() / w.hi.slack.array()).matrix();
      }
    };

    const double mu_now = w.mu();

    // predictor
    Eigen::VectorXd r6s = w.mi ? Eigen::VectorXd(w.s.cwiseProduct(w.lam)) : Eigen::VectorXd();
    Eigen::VectorXd r6g = w.lo.slack.cwiseProduct(w.lo.dual);
    Eigen::VectorXd r6h = w.hi.slack.cwiseProduct(w.hi.dual);
    Eigen::VectorXd du, dnu, ds, dlam, dgl, dmul, dgh, dmuh;
    direction(r6s, r6g, r6h, du, dnu, ds, dlam, dgl, dmul, dgh, dmuh);

    double ap = 1.0, ad = 1.0;
    if (w.mi) {
      ap = std::min(ap, max_step(w.s, ds, 1.0));
      ad = std::min(ad, max_step(w.lam, dlam, 1.0));
    }
    ap = std::min({ap, max_step(w.lo.slack, dgl, 1.0), max_step(w.hi.slack, dgh, 1.0)});
    ad = std::min({ad, max_step(w.lo.dual, dmul, 1.0), max_step(w.hi.dual, dmuh, 1.0)});

    double mu_aff = 0.0;
    {
      double sum = 0.0;
      if (w.mi) sum += (w.s + ap * ds).dot(w.lam + ad * dlam);
      sum += (w.lo.slack + ap * dgl).dot(w.lo.dual + ad * dmul);
      sum += (w.hi.slack + ap * dgh).dot(w.hi.dual + ad * dmuh);
      mu_aff = sum / pairs;
    }
    double sigma = mu_now > 0.0 ? std::pow(std::clamp(mu_aff / mu_now, 0.0, 1.0), 3.0) : 0.0;
    // keep the barrier from collapsing far below what the complementarity
    // tolerance needs; deeper targets only wreck the Newton conditioning
    const double mu_floor = 0.01 * tol_compl;
    if (mu_now > 0.0 && sigma * mu_now < mu_floor) sigma = std::min(1.0, mu_floor / mu_now);

    // corrector with Mehrotra second-order terms
    if (w.mi) r6s += ds.cwiseProduct(dlam) - Eigen::VectorXd::Constant(w.mi, sigma * mu_now);
    if (w.lo.count())
      r6g += dgl.cwiseProduct(dmul) - Eigen::VectorXd::Constant(w.lo.count(), sigma * mu_now);
    if (w.hi.count())
      r6h += dgh.cwiseProduct(dmuh) - Eigen::VectorXd::Constant(w.hi.count(), sigma * mu_now);
    direction(r6s, r6g, r6h, du, dnu, ds, dlam, dgl, dmul, dgh, dmuh);

    const double tau = mu_now < 1e-6 ? 0.9995 : 0.995;
    ap = 1.0;
    ad = 1.0;
    if (w.mi) {
      ap = std::min(ap, max_step(w.s, ds, tau));
      ad = std::min(ad, max_step(w.lam, dlam, tau));
    }
    ap = std::min({ap, max_step(w.lo.slack, dgl, tau), max_step(w.hi.slack, dgh, tau)});
    ad = std::min({ad, max_step(w.lo.dual, dmul, tau), max_step(w.hi.dual, dmuh, tau)});

    w.u += ap * du;
    if (w.me) w.nu += ad * dnu;
    if (w.mi) {
      w.s += ap * ds;
      w.lam += ad * dlam;
    }
    w.lo.slack += ap * dgl;
    w.lo.dual += ad * dmul;
    w.hi.slack += ap * dgh;
    w.hi.dual += ad * dmuh;
    sol.iterations = iter + 1;  // kept for the early-exit paths
  }

  if (best_score < kInf) w.restore(best);
  if (polish_tries < 4 && w.primal_violation() <= 1e-6 &&
      polish(qp, w, tol_stat, tol_pri, tol_compl, opt.trace)) {
    fill_certificate(sol, w);
    sol.status = Status::Optimal;
    sol.iterations = iter;
    return sol;
  }
  fill_certificate(sol, w);
  sol.iterations = iter;
  const bool stat_ok = sol.stationarity <= tol_stat;
  const bool prim_ok = sol.primal_feas <= tol_pri;
  const bool compl_ok = sol.complementarity <= tol_compl;
  sol.status = (stat_ok && prim_ok && compl_ok) ? Status::Optimal : Status::MaxIter;
  if (sol.status == Status::MaxIter && sol.primal_feas > std::max(1e3 * tol_pri, 1e-9)) {
    // classify stubborn primal infeasibility
    if (w.me) {
      Eigen::VectorXd ls = qp.A_eq.colPivHouseholderQr().solve(qp.b_eq);
      if ((qp.A_eq * ls - qp.b_eq).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + inf_norm(qp.b_eq)))
        sol.status = Status::Infeasible;
    }
  }
  return sol;
}

void dump_qp(const QuadraticProgram& qp, std::ostream& os) {
  auto triplets = [&os](const char* name, const Eigen::MatrixXd& m) {
    os << name << " " << m.rows() << " " << m.cols() << "\n";
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0.0) os << i << " " << j << " " << m(i, j) << "\n";
  };
  auto vec = [&os](const char* name, const Eigen::VectorXd& v) {
    os << name << " " << v.size() << "\n";
    for (int i = 0; i < v.size(); ++i)
      if (v(i) != 0.0) os << i << " " << v(i) << "\n";
  };
  os << "qp " << qp.num_vars() << " " << qp.A_eq.rows() << " " << qp.A_in.rows() << "\n";
  triplets("P", qp.P);
  vec("q", qp.q);
  triplets("A_eq", qp.A_eq);
  vec("b_eq", qp.b_eq);
  triplets("A_in", qp.A_in);
  vec("b_in", qp.b_in);
  vec("lb", qp.lb);
  vec("ub", qp.ub);
}

}  // namespace flexprice::qp
