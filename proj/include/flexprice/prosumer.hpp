#pragma once

#include <Eigen/Dense>
#include <string>

#include "flexprice/qp.hpp"

namespace flexprice::prosumer {

struct BessSpec {
  double s_max_kva = 0.0;
  double e_kwh = 0.0;
  double soc_min = 0.0;
  double soc_max = 1.0;
  double soc_init = 0.5;
  void validate() const;
  // Inner box of the PQ capability disc.
  double p_box_kw() const;
};

struct PvSpec {
  Eigen::VectorXd p_max_kw;  // per-step generation potential
  void validate() const;
};

// Interleaved per-step (p, q) demand in kW, load-positive.
struct DemandSchedule {
  Eigen::VectorXd x;  // 2K
  int horizon() const { return static_cast<int>(x.size()) / 2; }
  double p(int t) const { return x(2 * t); }
  double q(int t) const { return x(2 * t + 1); }
};

struct ResourceSchedule {
  Eigen::VectorXd p_b, q_b;  // BESS, discharge-positive kW / kvar
  Eigen::VectorXd p_pv;      // delivered PV kW
  Eigen::VectorXd soc;       // SoC after each step
};

// The quadratic tariff a prosumer receives; nothing else about the grid or
// the coordination state crosses this boundary.
struct PriceSignal {
  Eigen::MatrixXd quadratic;  // H, 2K x 2K PSD
  Eigen::VectorXd linear;     // g, 2K
  double fixed_fee = 0.0;     // f
  int round = 0;
  double evaluate(const Eigen::VectorXd& x) const;
  // Per-step active/reactive price at consumption x: g + H x / 2 (the
  // average, consumption-dependent tariff).
  Eigen::VectorXd tariff_at(const Eigen::VectorXd& x) const;
  static PriceSignal flat(const Eigen::VectorXd& c);  // H = 0, g = c, f = 0
};

// Cost vector over the interleaved demand: active entries carry
// price * dt so that c'x is CHF directly; reactive entries are zero.
Eigen::VectorXd tariff_vector(const Eigen::VectorXd& price_chf_per_kwh, double dt_hours);

// One prosumer's planning problem over a horizon: constraint structure only,
// objectives come from the price signal at solve time.
struct ProsumerProblem {
  int horizon = 0;
  double dt_hours = 0.0;
  BessSpec bess;
  Eigen::VectorXd load_p, load_q;  // kW forecast
  Eigen::VectorXd pv_max;          // kW potential forecast

  // Full variable layout [p_b; q_b; p_pv; x], aggregation equalities,
  // SoC inequalities and boxes; P and q are zero.
  qp::QuadraticProgram skeleton() const;
  Eigen::VectorXd demand_from_resources(const Eigen::VectorXd& p_b, const Eigen::VectorXd& q_b,
                                        const Eigen::VectorXd& p_pv) const;
  Eigen::VectorXd soc_trajectory(const Eigen::VectorXd& p_b) const;
};

ProsumerProblem build_prosumer_problem(const BessSpec& bess, const Eigen::VectorXd& load_p,
                                       const Eigen::VectorXd& load_q, const Eigen::VectorXd& pv_max,
                                       int horizon, double dt_hours);

struct XUpdateResult {
  DemandSchedule demand;
  ResourceSchedule resources;
  double objective = 0.0;  // advertised cost at the optimum
  qp::Status status = qp::Status::MaxIter;
  int qp_iterations = 0;
};

enum class XUpdateRoute {
  Reduced,  // aggregation equality eliminated before the qp-core call
  Full,     // skeleton solved as-is
};

// ADMM step 1: minimize the advertised signal subject to the prosumer's
// constraints. Both routes solve the same problem through qp-core and agree
// to solver tolerance.
XUpdateResult x_update(const ProsumerProblem& prob, const PriceSignal& signal,
                       XUpdateRoute route = XUpdateRoute::Reduced);

// Grid-unaware baseline: minimize c'x subject to the same constraints.
XUpdateResult local_cost_min(const ProsumerProblem& prob, const Eigen::VectorXd& tariff);

struct RtSetpoint {
  double p_b = 0.0, q_b = 0.0;  // BESS setpoint
  double p_dem = 0.0, q_dem = 0.0;  // resulting demand at the forecast
};

// 30 s tracking control: follow the MPC target with the BESS, PV curtailment
// fixed by the MPC. Always feasible; throws "state out of bounds" when the
// measured SoC already violates its limits.
RtSetpoint rt_control(const BessSpec& bess, double soc, double p_target, double q_target,
                      double p_load_fc, double q_load_fc, double pv_potential_fc,
                      double curtail_frac, double dt_rt_hours);

// Machine check of a returned schedule: SoC recursion and bounds, power
// boxes, curtailment range, aggregation. Returns a description of the first
// violation or an empty string.
std::string verify_schedule(const ProsumerProblem& prob, const DemandSchedule& d,
                            const ResourceSchedule& r, double tol = 1e-7);

}  // namespace flexprice::prosumer
