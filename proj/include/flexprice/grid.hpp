#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "flexprice/exec.hpp"

namespace flexprice::grid {

enum class BusType { Slack, PQ };

struct Bus {
  std::string id;
  BusType type = BusType::PQ;
};

// Pi-model branch. Series impedance in ohms, total shunt susceptance in
// siemens (split half per end). A zero-impedance branch is rejected.
struct Line {
  std::string from;
  std::string to;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double b_shunt_s = 0.0;
};

struct Bases {
  double v_base_v = 400.0;    // line-to-line
  double s_base_va = 10e3;
  double z_base_ohm() const { return v_base_v * v_base_v / s_base_va; }
  double s_base_kw() const { return s_base_va / 1e3; }
};

struct NetworkModel {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  Bases bases;
  double slack_v_pu = 1.0;  // default slack magnitude; a per-step series can
                            // be supplied through OperatingPoint

  int bus_index(const std::string& id) const;
  int slack_index() const;
  // Non-slack buses in declaration order; defines the injection ordering
  // used by OperatingPoint and the sensitivity matrices.
  std::vector<int> non_slack() const;

  // Throws std::invalid_argument describing the first violated invariant:
  // exactly one slack, connected graph, nonnegative resistances,
  // positive bases, unique bus ids, lines referencing known buses.
  void validate() const;
};

// Nodal demands in pu, load-positive (generation is negative), for a
// K-step horizon. Row t holds the demand of every non-slack bus at step t.
struct OperatingPoint {
  Eigen::MatrixXd p;  // K x (n_buses - 1)
  Eigen::MatrixXd q;  // K x (n_buses - 1)
  Eigen::VectorXd slack_v;  // optional per-step slack magnitude; empty = model default

  int horizon() const { return static_cast<int>(p.rows()); }
  double slack_voltage(const NetworkModel& model, int step) const {
    return slack_v.size() > 0 ? slack_v(step) : model.slack_v_pu;
  }
  static OperatingPoint zeros(const NetworkModel& model, int horizon);
};

struct PowerFlowSolution {
  Eigen::MatrixXd v;      // K x n_buses, magnitudes pu
  Eigen::MatrixXd theta;  // K x n_buses, angles rad (slack = 0)
  Eigen::VectorXd p_slack;  // K, import from the upper grid, pu
  Eigen::VectorXd q_slack;  // K
  bool converged = false;   // all steps converged
  int iterations = 0;       // worst step
  double max_mismatch_pu = 0.0;
};

// First-order response of the network at one converged operating point.
// Derivatives are with respect to load-positive nodal demand, so k_vp
// entries are negative on a normal feeder (more load, lower voltage).
struct SensitivityMatrices {
  Eigen::MatrixXd k_vp;  // (n-1) x (n-1), d|v| / dp
  Eigen::MatrixXd k_vq;  // d|v| / dq
  Eigen::RowVectorXd s_pp, s_pq;  // slack active power response
  Eigen::RowVectorXd s_qp, s_qq;  // slack reactive power response
  Eigen::VectorXd v_star;         // non-slack magnitudes at the base point
  double ps_star = 0.0;
  double qs_star = 0.0;
};

struct GridLimits {
  double v_min = 0.9;
  double v_max = 1.05;
  double q_s_max_pu = 0.5;
  double s_s_max_pu = 5.0;
  void validate() const;
  double p_s_max_pu() const;  // sqrt(s^2 - q^2)
};

enum class RowKind { VoltageLow, VoltageHigh, SlackQHigh, SlackQLow, SlackPHigh, SlackPLow };

struct RowLabel {
  RowKind kind;
  int bus;   // model bus index; -1 for slack power rows
  int step;
};

// Linear inequality system A x <= b over the stacked prosumer demand
// x = [x_1; ...; x_N], x_i interleaved [p_t1, q_t1, p_t2, q_t2, ...] in kW.
// Rows are grouped by timestep; within a step the columns of prosumer i are
// the (p, q) pair of that step, so A_i is block-diagonal in time and the
// per-prosumer blocks are stored directly. The equality block is carried
// for structural completeness and is empty in the voltage use case.
struct LinearizedConstraints {
  int horizon = 0;
  int n_prosumers = 0;
  int rows_per_step = 0;
  std::vector<RowLabel> step_labels;  // labels within one step (step field = 0)
  // blocks[t][i]: (rows_per_step x 2) coefficients of prosumer i at step t
  std::vector<std::vector<Eigen::Matrix<double, Eigen::Dynamic, 2>>> blocks;
  std::vector<Eigen::VectorXd> rhs;  // per step
  // equality block (empty here, structurally present)
  int eq_rows_per_step = 0;
  std::vector<std::vector<Eigen::Matrix<double, Eigen::Dynamic, 2>>> eq_blocks;
  std::vector<Eigen::VectorXd> eq_rhs;

  int rows() const { return rows_per_step * horizon; }
  int cols_per_prosumer() const { return 2 * horizon; }
  RowLabel label(int row) const;

  Eigen::VectorXd apply(int i, const Eigen::VectorXd& x_i) const;           // A_i x_i
  Eigen::VectorXd apply_transpose(int i, const Eigen::VectorXd& y) const;   // A_i' y
  Eigen::VectorXd coupled(const std::vector<Eigen::VectorXd>& xs) const;    // sum_i A_i x_i
  Eigen::VectorXd stacked_rhs() const;
  Eigen::Matrix2d quad_block(int i, int step) const;  // (A_i' A_i) step block
  Eigen::MatrixXd dense_block(int i) const;           // A_i as a dense matrix
  Eigen::MatrixXd dense() const;                      // full A
};

// Maps prosumers to buses and scales kW demands into pu bus injections.
struct ProsumerPlacement {
  std::vector<int> bus;  // model bus index per prosumer
};

// Complex nodal admittance matrix in pu. Parallel lines combine; a branch
// with |z| = 0 throws "degenerate branch".
Eigen::MatrixXcd build_admittance(const NetworkModel& model);

struct PowerFlowOptions {
  int max_iter = 50;
  double tol_pu = 1e-10;  // Newton target; converged flag requires <= 1e-8
  exec::Mode mode = exec::Mode::Parallel;
};

// Newton-Raphson AC power flow per timestep, flat start. Never fabricates a
// solution: non-convergence at any step clears `converged` and the caller
// decides. Steps are independent, solved through the batch kernel.
PowerFlowSolution solve_power_flow(const NetworkModel& model, const OperatingPoint& op,
                                   const PowerFlowOptions& opt = {});

// Analytic sensitivities (implicit differentiation of the mismatch
// equations at the solved state), one set per timestep. Throws
// "linearization point infeasible" if the power flow at op does not
// converge.
std::vector<SensitivityMatrices> compute_sensitivities(const NetworkModel& model,
                                                       const OperatingPoint& op,
                                                       const PowerFlowOptions& opt = {});

// DSO constraint assembly around `op`. `monitored` defaults to all
// non-slack buses when empty. Row order per step: (v_min, v_max) per
// monitored bus, then q_s upper/lower, then p_s upper/lower.
LinearizedConstraints assemble_dso_constraints(const NetworkModel& model, const OperatingPoint& op,
                                               const GridLimits& limits,
                                               const ProsumerPlacement& placement,
                                               const std::vector<int>& monitored = {},
                                               const PowerFlowOptions& opt = {});
// Same, reusing sensitivities already computed at `op`.
LinearizedConstraints assemble_dso_constraints(const NetworkModel& model, const OperatingPoint& op,
                                               const std::vector<SensitivityMatrices>& sens,
                                               const GridLimits& limits,
                                               const ProsumerPlacement& placement,
                                               const std::vector<int>& monitored = {});

// Bus-level operating point produced by a stacked demand vector (kW -> pu).
OperatingPoint injections_from_demands(const NetworkModel& model,
                                       const ProsumerPlacement& placement,
                                       const std::vector<Eigen::VectorXd>& xs, int horizon,
                                       const Eigen::VectorXd& slack_v = {});

// Exact constraint function g(x) evaluated through the AC oracle, same row
// order and units as the linearized system (feasible iff g <= 0). Throws
// "cannot evaluate g" when the oracle diverges.
Eigen::VectorXd evaluate_constraints_oracle(const NetworkModel& model,
                                            const LinearizedConstraints& lin,
                                            const GridLimits& limits,
                                            const ProsumerPlacement& placement,
                                            const std::vector<Eigen::VectorXd>& xs,
                                            const Eigen::VectorXd& slack_v = {},
                                            const PowerFlowOptions& opt = {});

// max_row |g(x) - (A x - b)|, the paper-style linearization error.
double linearization_error(const NetworkModel& model, const LinearizedConstraints& lin,
                           const GridLimits& limits, const ProsumerPlacement& placement,
                           const std::vector<Eigen::VectorXd>& xs,
                           const Eigen::VectorXd& slack_v = {},
                           const PowerFlowOptions& opt = {});

const char* row_kind_name(RowKind k);

}  // namespace flexprice::grid
