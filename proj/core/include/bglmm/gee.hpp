#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "bglmm/data.hpp"

namespace bglmm {

struct GeeOptions {
  int max_iterations = 100;
  double tol = 1e-10;                // infinity norm of the beta update
  std::optional<double> fix_rho;     // e.g. 0 for working independence
};

struct GeeResult {
  std::vector<std::string> parameter_names;
  Eigen::VectorXd beta;
  double rho = 0.0;  // working AR(1) parameter
  Eigen::MatrixXd cov_sandwich;
  Eigen::MatrixXd cov_model;
  Eigen::VectorXd se_sandwich;
  Eigen::VectorXd se_model;
  bool converged = false;
  int iterations = 0;
  double estimating_fn_norm = 0.0;
  std::vector<std::string> diagnostics;
};

// Logistic GEE with AR(1) working correlation: Fisher-scoring update of beta
// given rho, moment update of rho from lag-one standardized residuals,
// iterated to convergence. Sandwich covariance is the headline standard
// error; the model-based one is reported alongside.
GeeResult fit_gee(const Dataset& dataset, const GeeOptions& options = {},
                  const std::vector<std::string>& names = {});

}  // namespace bglmm
