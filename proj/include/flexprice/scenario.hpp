#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "flexprice/coordinator.hpp"
#include "flexprice/grid.hpp"
#include "flexprice/prosumer.hpp"

namespace flexprice::sim {

struct TimelineConfig {
  double t_start_s = 0.0;
  double t_end_s = 86400.0;
  double dt_plan_s = 600.0;
  double t1_s = 600.0;   // MPC cadence
  double t2_s = 30.0;    // RT cadence
  int admm_budget_iters = 150;

  int horizon() const { return static_cast<int>((t_end_s - t_start_s) / dt_plan_s); }
  int rt_steps() const { return static_cast<int>((t_end_s - t_start_s) / t2_s); }
  int samples_per_step() const { return static_cast<int>(t1_s / t2_s); }
  double dt_plan_hours() const { return dt_plan_s / 3600.0; }
  double t2_hours() const { return t2_s / 3600.0; }
  void validate() const;
};

// One step change applied on top of a base value (slack-voltage
// disturbances and similar scenario events).
struct StepEvent {
  double from_s = 0.0, to_s = 0.0;
  double value = 0.0;
};

// Declarative series: synthesized or read from a timestamped csv.
struct SeriesSpec {
  std::string kind;  // constant | bell | office | scaled_forecast | steps | file | values
  double value = 0.0;
  double peak_kw = 0.0;
  double base_kw = 0.0;
  double noise_kw = 0.0;
  double center_h = 12.5;
  double width_h = 2.2;
  double factor = 1.0;
  int day = 0;
  std::string file;
  std::vector<double> values;
  std::vector<StepEvent> steps;
};

struct TariffSpec {
  std::string kind = "tou";  // tou | series
  double low_chf_per_kwh = 0.08;
  double high_chf_per_kwh = 0.24;
  double high_start_s = 54000.0;
  double high_end_s = 86400.0;
  std::string file;
  std::vector<double> values;  // plan-step resolution when kind == series
};

struct ProsumerEntry {
  std::string name;
  std::string bus;
  prosumer::BessSpec bess;
  SeriesSpec load_forecast, load_realization;
  SeriesSpec pv_forecast, pv_realization;
  double power_factor = 1.0;  // 1.0 means q_load = 0
};

struct Scenario {
  std::string name;
  std::string base_dir;  // directory of the scenario file, for series refs
  grid::NetworkModel network;
  grid::GridLimits limits;
  TimelineConfig timeline;
  TariffSpec tariff;
  SeriesSpec slack_forecast, slack_realization;
  std::vector<ProsumerEntry> prosumers;
  std::uint64_t seed = 0;
  bool coordination = true;
  coord::AdmmConfig admm;
};

// Strict parse: unknown keys are violations. Throws std::runtime_error with
// the full violation list when the scenario is unusable.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& base_dir);

// Every problem found, empty when valid.
std::vector<std::string> validate_scenario(const Scenario& sc);

// All series sampled on the RT grid over [t_start, t_end).
struct MaterializedScenario {
  int n_rt = 0;
  Eigen::VectorXd price_plan;  // K, CHF/kWh
  Eigen::VectorXd slack_fc, slack_re;           // n_rt, pu
  std::vector<Eigen::VectorXd> load_p_fc, load_p_re;  // per prosumer, n_rt, kW
  std::vector<Eigen::VectorXd> load_q_fc, load_q_re;
  std::vector<Eigen::VectorXd> pv_fc, pv_re;
  grid::ProsumerPlacement placement;

  // mean over the plan-step window, drop the first `skip` plan steps
  static Eigen::VectorXd aggregate(const Eigen::VectorXd& rt, int samples_per_step, int skip = 0);
};

MaterializedScenario materialize(const Scenario& sc);

// The scenario replicating the laboratory feeder: Table-style line
// parameters, five prosumers, ToU tariff, synthetic profiles.
std::string replica_scenario_json(bool full_day);

}  // namespace flexprice::sim
