#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "flexprice/coordinator.hpp"
#include "flexprice/scenario.hpp"

namespace flexprice::sim {

// Most recent realized value; `steps_ahead` is accepted for interface
// symmetry with richer predictors and does not change the answer.
double persistent_forecast(std::span<const double> history, int steps_ahead = 1);

struct RtRecord {
  double t_s = 0.0;
  Eigen::VectorXd v_bus;              // oracle magnitudes, all buses
  double p_slack = 0.0, q_slack = 0.0;
  Eigen::VectorXd soc, p_b, q_b, p_pv, p_dem, q_dem;  // per prosumer
};

struct MpcRecord {
  double t_s = 0.0;
  int cycle = 0;
  bool reused_previous = false;  // coordination failed, stale signals kept
  coord::CoordinationReport report;
};

struct CostRow {
  std::string name;
  double without_chf = 0.0, with_chf = 0.0, difference_chf = 0.0, compensation_chf = 0.0;
};

struct TraceLog {
  std::vector<RtRecord> rt;
  std::vector<MpcRecord> mpc;
  std::vector<CostRow> costs;
  void append(RtRecord rec);  // enforces strictly increasing timestamps
};

// Everything needed to run one coordination over a planning window:
// prosumer problems on aggregated forecasts, the tariff vector, and the
// constraint system linearized around the flat-tariff baselines.
struct PlanningSetup {
  Eigen::VectorXd tariff;
  std::vector<prosumer::ProsumerProblem> problems;
  Eigen::VectorXd slack_plan;
  grid::LinearizedConstraints lin;
  std::vector<prosumer::XUpdateResult> baselines;
  std::vector<Eigen::VectorXd> pv_max;
  grid::ProsumerPlacement placement;
};

PlanningSetup day_ahead_setup(const Scenario& sc, exec::Mode mode = exec::Mode::Parallel);

// AC-oracle hooks bound to this scenario's network (self-contained copies,
// no lifetime ties to the setup).
coord::OracleHooks oracle_hooks(const Scenario& sc, const PlanningSetup& setup,
                                exec::Mode mode = exec::Mode::Parallel);

struct DayAheadResult {
  bool coordinated = false;
  coord::CoordinationReport report;      // baselines always populated
  std::vector<Eigen::VectorXd> schedules;  // chosen x per prosumer (2K)
  std::vector<prosumer::XUpdateResult> plans;  // schedules with resources
  grid::LinearizedConstraints lin;
  Eigen::VectorXd tariff;                // c over the interleaved demand
  grid::PowerFlowSolution oracle;        // AC check of the chosen schedules
  Eigen::VectorXd slack_plan;            // forecast slack at plan steps
};

// Full-horizon coordination on forecasts (the dispatch computed the day
// before operation). With coordination disabled the prosumers keep their
// flat-tariff optima and the report carries the baselines.
DayAheadResult run_day_ahead(const Scenario& sc, exec::Mode mode = exec::Mode::Parallel);

// Receding-horizon reruns every T1 without the 30 s layer: prosumers apply
// the first planned interval directly, realizations are aggregated per step.
TraceLog run_receding_horizon(const Scenario& sc, exec::Mode mode = exec::Mode::Parallel);

// The complete closed loop: day-ahead, intra-day MPC reruns, 30 s real-time
// tracking against realized load/PV, AC oracle per RT step.
TraceLog run_rt_loop(const Scenario& sc, exec::Mode mode = exec::Mode::Parallel);

}  // namespace flexprice::sim
