#include "bglmm/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "bglmm/errors.hpp"
#include "bglmm/stats.hpp"

namespace bglmm {

void check_full_rank(const Eigen::MatrixXd& x,
                     const std::vector<std::string>& names) {
  if (x.cols() == 0) return;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() == x.cols()) return;
  // The columns the pivoting pushed past the numerical rank are the
  // redundant ones.
  std::string offending;
  const auto& perm = qr.colsPermutation().indices();
  for (int k = static_cast<int>(qr.rank()); k < x.cols(); ++k) {
    const int col = perm(k);
    if (!offending.empty()) offending += ", ";
    if (col < static_cast<int>(names.size())) {
      offending += names[static_cast<std::size_t>(col)];
    } else {
      offending += "column " + std::to_string(col);
    }
  }
  throw DesignError("design matrix is rank deficient; collinear: " + offending);
}

LogisticFit logistic_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const std::vector<std::string>& names,
                          const LogisticOptions& options) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  if (y.size() != n) throw DataError("logistic_irls: y/X size mismatch");
  if (p == 0) throw DesignError("logistic_irls: empty design");
  check_full_rank(x, names);

  LogisticFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta(n), mu(n), w(n);
  Eigen::MatrixXd info(p, p);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    eta = x * fit.beta;
    if (eta.cwiseAbs().maxCoeff() > options.separation_eta) {
      fit.separation = true;
      break;
    }
    for (int i = 0; i < n; ++i) {
      mu(i) = expit(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd score = x.transpose() * (y - mu);
    info = x.transpose() * w.asDiagonal() * x;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) {
      throw NumericError("logistic_irls: singular information matrix");
    }
    const Eigen::VectorXd delta = llt.solve(score);
    fit.beta += delta;
    if (delta.lpNorm<Eigen::Infinity>() < options.tol) {
      fit.converged = true;
      break;
    }
  }
  eta = x * fit.beta;
  for (int i = 0; i < n; ++i) {
    mu(i) = expit(eta(i));
    w(i) = mu(i) * (1.0 - mu(i));
  }
  info = x.transpose() * w.asDiagonal() * x;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) {
    fit.cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
  } else {
    fit.cov = Eigen::MatrixXd::Constant(p, p,
                                        std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

}  // namespace bglmm
