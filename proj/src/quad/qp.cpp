#include "rsnet/quad/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rsnet::quad {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double QpProblem::objective(const VectorXd& u) const { return 0.5 * u.dot(hessian * u) + linear.dot(u) + constant; }

double QpProblem::min_slack(const VectorXd& u) const {
  if (h.size() == 0) return 0.0;
  return (h - g * u).minCoeff();
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::infeasible:
      return "infeasible";
    case QpStatus::max_iterations:
      return "max_iterations";
  }
  return "unknown";
}

double kkt_residual(const QpProblem& qp, const VectorXd& u, const VectorXd& l) {
  double r = (qp.hessian * u + qp.linear + qp.g.transpose() * l).lpNorm<Eigen::Infinity>();
  const VectorXd s = qp.h - qp.g * u;
  for (int i = 0; i < s.size(); ++i) {
    r = std::max({r, -s[i], -l[i], std::abs(l[i] * s[i])});
  }
  return r;
}

namespace {

double step_to_boundary(const VectorXd& x, const VectorXd& dx) {
  double a = 1.0;
  for (int i = 0; i < x.size(); ++i) {
    if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
  }
  return a;
}

}  // namespace

QpResult solve_qp_ipm(const QpProblem& qp, const VectorXd& u0, const QpOptions& opt) {
  const int m = qp.constraints();
  QpResult res;
  res.u = u0;
  VectorXd s = qp.h - qp.g * u0;
  if (m > 0 && !(s.minCoeff() > 0.0)) {
    res.status = QpStatus::infeasible;
    return res;
  }
  if (m == 0) {
    res.u = qp.hessian.ldlt().solve(-qp.linear);
    res.multipliers = VectorXd();
    res.objective = qp.objective(res.u);
    res.kkt_residual = kkt_residual(qp, res.u, res.multipliers);
    res.status = QpStatus::optimal;
    return res;
  }

  VectorXd u = u0;
  // start on the central path with unit complementarity
  VectorXd l = s.cwiseInverse();
  const VectorXd ones = VectorXd::Ones(m);
  VectorXd best_u = u, best_l = l;
  double best = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= opt.max_iterations; ++it) {
    res.iterations = it;
    const VectorXd rd = qp.hessian * u + qp.linear + qp.g.transpose() * l;
    const VectorXd rp = qp.g * u + s - qp.h;
    const double mu = s.dot(l) / m;
    const double residual = std::max({rd.lpNorm<Eigen::Infinity>(), rp.lpNorm<Eigen::Infinity>(),
                                      (s.cwiseProduct(l)).lpNorm<Eigen::Infinity>()});
    if (residual < best) {
      best = residual;
      best_u = u;
      best_l = l;
    }
    if (residual < opt.tolerance) break;

    const VectorXd w = l.cwiseQuotient(s);
    const MatrixXd k = qp.hessian + qp.g.transpose() * w.asDiagonal() * qp.g;
    const Eigen::LDLT<MatrixXd> ldlt(k);

    auto direction = [&](const VectorXd& rc, VectorXd& du, VectorXd& dl, VectorXd& ds) {
      const VectorXd sinv_rc = rc.cwiseQuotient(s);
      du = ldlt.solve(-rd - qp.g.transpose() * (w.cwiseProduct(rp) - sinv_rc));
      dl = w.cwiseProduct(qp.g * du + rp) - sinv_rc;
      ds = -(rc + s.cwiseProduct(dl)).cwiseQuotient(l);
    };

    VectorXd du, dl, ds;
    direction(s.cwiseProduct(l), du, dl, ds);
    const double a_aff = std::min(step_to_boundary(s, ds), step_to_boundary(l, dl));
    const double mu_aff = (s + a_aff * ds).dot(l + a_aff * dl) / m;
    const double sigma = std::pow(mu_aff / mu, 3);
    direction(s.cwiseProduct(l) + ds.cwiseProduct(dl) - sigma * mu * ones, du, dl, ds);
    // numerical breakdown near the solution: keep the best iterate
    if (!du.allFinite() || !dl.allFinite() || !ds.allFinite()) break;
    const double a = std::min(1.0, 0.995 * std::min(step_to_boundary(s, ds), step_to_boundary(l, dl)));
    u += a * du;
    l += a * dl;
    s += a * ds;
  }
  res.u = best_u;
  res.multipliers = best_l;
  res.objective = qp.objective(res.u);
  res.kkt_residual = kkt_residual(qp, res.u, res.multipliers);
  res.status = res.kkt_residual <= opt.accept ? QpStatus::optimal : QpStatus::max_iterations;
  return res;
}

}  // namespace rsnet::quad
