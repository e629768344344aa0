#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>

namespace flexprice::qp {

enum class Status { Optimal, Infeasible, MaxIter };

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense convex QP
//   min 0.5 u'Pu + q'u
//   s.t. A_eq u = b_eq, A_in u <= b_in, lb <= u <= ub
// Empty matrices/vectors mean "no such block"; +-inf entries in lb/ub mean
// unbounded coordinates.
struct QuadraticProgram {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lb, ub;

  int num_vars() const { return static_cast<int>(q.size()); }
  void validate() const;
};

struct QpSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd dual_eq;            // free sign
  Eigen::VectorXd dual_in;            // >= 0
  Eigen::VectorXd dual_lb, dual_ub;   // >= 0, full length (zero where infinite)
  Status status = Status::MaxIter;
  int iterations = 0;
  double stationarity = 0.0;
  double primal_feas = 0.0;
  double complementarity = 0.0;
  double objective = 0.0;
  double duality_gap = 0.0;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 20000;  // stopping bound; the interior-point loop converges far earlier
  // P is screened for symmetry/PSD unless the caller constructed it PSD by
  // hand (hot paths do) and opts out.
  bool check_convexity = true;
  const Eigen::VectorXd* warm_start = nullptr;  // primal hint
  bool trace = false;  // per-iteration convergence log on stderr
};

// Interior-point solve with a KKT certificate. Deterministic: identical
// inputs yield identical outputs. Throws std::invalid_argument on malformed
// input or a non-PSD objective ("nonconvex objective"); infeasibility is a
// status, not an exception.
QpSolution solve_qp(const QuadraticProgram& qp, const QpOptions& opt = {});

// Triplet-format text dump for offline inspection.
void dump_qp(const QuadraticProgram& qp, std::ostream& os);

}  // namespace flexprice::qp
