#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace bglmm {

struct LogisticOptions {
  int max_iterations = 100;
  double tol = 1e-10;
  // |eta| beyond which the fit is declared separated and coefficients capped.
  double separation_eta = 30.0;
};

struct LogisticFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;  // inverse Fisher information at the optimum
  bool converged = false;
  bool separation = false;
  int iterations = 0;
};

// Checks X for full column rank (pivoted QR) and throws DesignError naming
// the collinear columns otherwise. `names` may be empty, in which case
// column indices are reported.
void check_full_rank(const Eigen::MatrixXd& x,
                     const std::vector<std::string>& names);

// Plain logistic regression by iteratively reweighted least squares.
// Separation is reported, not fatal: coefficients are capped at the last
// stable iterate and flagged.
LogisticFit logistic_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const std::vector<std::string>& names = {},
                          const LogisticOptions& options = {});

}  // namespace bglmm
