#pragma once

#include <Eigen/Dense>

namespace rsnet::quad {

/// min 0.5 u^T H u + g^T u + c  subject to  G u <= h.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  double constant = 0.0;
  Eigen::MatrixXd g;
  Eigen::VectorXd h;

  int variables() const { return static_cast<int>(linear.size()); }
  int constraints() const { return static_cast<int>(h.size()); }
  double objective(const Eigen::VectorXd& u) const;
  /// Smallest h - G u; negative means a violated row.
  double min_slack(const Eigen::VectorXd& u) const;
};

enum class QpStatus { optimal, infeasible, max_iterations };

const char* to_string(QpStatus s);

struct QpOptions {
  int max_iterations = 80;
  double tolerance = 1e-10;  // stop once the iterate residual is below this
  double accept = 1e-8;      // KKT residual of the best iterate for status optimal
};

struct QpResult {
  QpStatus status = QpStatus::max_iterations;
  Eigen::VectorXd u;
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// KKT residual of a primal-dual pair: max of stationarity |Hu + g + G^T l|,
/// primal violation max(0, Gu - h), dual violation max(0, -l) and
/// complementarity |l_i (h - Gu)_i|, all in the infinity norm.
double kkt_residual(const QpProblem& qp, const Eigen::VectorXd& u, const Eigen::VectorXd& multipliers);

/// Mehrotra predictor-corrector interior point from a strictly feasible
/// starting point `u0` (G u0 < h). Reports infeasible if u0 is not strictly
/// feasible. Returns the iterate with the smallest residual; status optimal
/// if its KKT residual is at most options.accept.
QpResult solve_qp_ipm(const QpProblem& qp, const Eigen::VectorXd& u0, const QpOptions& options = {});

}  // namespace rsnet::quad
