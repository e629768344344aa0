#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "flexprice/exec.hpp"
#include "flexprice/grid.hpp"
#include "flexprice/prosumer.hpp"

namespace flexprice::coord {

struct AdmmConfig {
  double rho0 = 1.0;
  double eps_abs = 1e-5;
  double eps_rel = 1e-4;
  double mu = 10.0;        // residual ratio gate for the rho update
  double tau_incr = 1.01;
  double tau_decr = 1.01;
  bool adaptive_rho = true;
  bool relinearize = true;
  double tol_lin = 1e-3;   // pu, linearization error gate
  int relin_every = 5;     // oracle evaluation cadence, iterations
  int max_iter = 150;      // iteration budget (timeout)
  exec::Mode mode = exec::Mode::Parallel;
  prosumer::XUpdateRoute route = prosumer::XUpdateRoute::Reduced;
};

struct IterationRecord {
  int k = 0;
  double rho = 0.0;
  double r_max = 0.0, s_max = 0.0;
  double eps_pri = 0.0, eps_dual = 0.0;  // tightest prosumer tolerances
  double r_lin = 0.0;                    // most recent oracle evaluation
  bool relinearized = false;
};

struct AdmmState {
  int k = 0;
  double rho = 1.0;
  grid::LinearizedConstraints lin;
  std::vector<Eigen::VectorXd> x;       // per-prosumer demands, 2K
  std::vector<Eigen::VectorXd> ax;      // cached A_i x_i, m
  std::vector<Eigen::VectorXd> z, y;    // copied vectors and multipliers, m
  std::vector<Eigen::VectorXd> z_prev;
  std::vector<IterationRecord> history;
  Eigen::VectorXd row_min_slack;        // min over iterations of b - sum_i A_i x_i
  int relinearizations = 0;
  double last_r_lin = 0.0;

  int n_prosumers() const { return static_cast<int>(x.size()); }
};

struct Residuals {
  Eigen::VectorXd r, s;                // per prosumer
  Eigen::VectorXd eps_pri, eps_dual;   // per prosumer
  double r_max = 0.0, s_max = 0.0;
  bool converged = false;
};

enum class CoordinationStatus { Converged, Timeout };

struct CoordinationReport {
  CoordinationStatus status = CoordinationStatus::Timeout;
  int iterations = 0;
  double final_r_max = 0.0, final_s_max = 0.0;
  double final_rho = 0.0;
  double final_r_lin = 0.0;
  int relinearizations = 0;
  std::vector<prosumer::PriceSignal> signals;
  std::vector<prosumer::XUpdateResult> responses;  // x_i*, schedules
  std::vector<prosumer::XUpdateResult> baselines;  // x_i^ from the flat tariff
  Eigen::VectorXd compensation_chf;
  Eigen::VectorXd cost_with_chf, cost_without_chf;
  double total_with = 0.0, total_without = 0.0, total_compensation = 0.0;
  std::vector<IterationRecord> trace;
  // DSO-side closing state, kept for warm-started reruns; never advertised.
  std::vector<Eigen::VectorXd> final_y;
};

// Ties the coordinator to the AC oracle without a grid dependency cycle:
// the harness binds these to the concrete network.
struct OracleHooks {
  std::function<double(const grid::LinearizedConstraints&, const std::vector<Eigen::VectorXd>&)>
      lin_error;
  std::function<grid::LinearizedConstraints(const std::vector<Eigen::VectorXd>&)> relinearize;
  bool available() const { return static_cast<bool>(lin_error) && static_cast<bool>(relinearize); }
};

// Step 0: y = 0, z_i = A_i x_i0 (zero primal residual at the start).
AdmmState init_state(const grid::LinearizedConstraints& lin,
                     const std::vector<Eigen::VectorXd>& x0, double rho0);

// Step 2, sharing form: per-row projection of w_i = A_i x_i + y_i / rho onto
// the coupling constraints. Stores x and the refreshed copies in the state.
// Throws "grid constraints infeasible" when the coupling system cannot hold.
void z_update(AdmmState& st, const std::vector<Eigen::VectorXd>& x_new);

// Step 3: y_i += rho (A_i x_i - z_i).
void dual_update(AdmmState& st);

Residuals residuals(const AdmmState& st, const AdmmConfig& cfg);

// Adaptive penalty on max-over-prosumer residuals; multipliers are not
// rescaled (the dual update carries rho explicitly).
void adapt_rho(AdmmState& st, const AdmmConfig& cfg, const Residuals& res);

// Step 4 gate: evaluates the oracle when forced or when the cadence says so,
// re-linearizes above tol_lin. Returns true when A and b were rebuilt.
bool maybe_relinearize(AdmmState& st, const AdmmConfig& cfg, const OracleHooks& oracle,
                       bool force_eval);

// The advertised quadratic tariff: H = rho A_i'A_i, g = c + A_i'(y_i - rho z_i),
// f = rho/2 ||z_i||^2 - y_i'z_i. Only these coefficients leave the DSO.
prosumer::PriceSignal extract_price_signal(const AdmmState& st, const Eigen::VectorXd& tariff,
                                           int i);

Eigen::VectorXd compute_compensation(const Eigen::VectorXd& tariff,
                                     const std::vector<Eigen::VectorXd>& x_star,
                                     const std::vector<Eigen::VectorXd>& x_hat);

// Full loop, steps 0-5. x0/y0 optionally warm-start the iteration (receding
// horizon reruns); by default x0 comes from the flat-tariff baselines, which
// can be handed in precomputed to avoid a duplicate solve.
CoordinationReport run_coordination(const std::vector<prosumer::ProsumerProblem>& agents,
                                    const Eigen::VectorXd& tariff,
                                    const grid::LinearizedConstraints& lin, const AdmmConfig& cfg,
                                    const OracleHooks& oracle = {},
                                    const std::vector<Eigen::VectorXd>* x0 = nullptr,
                                    const std::vector<Eigen::VectorXd>* y0 = nullptr,
                                    const std::vector<prosumer::XUpdateResult>* baselines = nullptr);

}  // namespace flexprice::coord
