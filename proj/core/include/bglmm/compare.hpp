#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bglmm/bahadur.hpp"
#include "bglmm/data.hpp"
#include "bglmm/fit.hpp"
#include "bglmm/gee.hpp"

namespace bglmm {

struct CompareOptions {
  FitOptions bridge;        // shared by the three bridge variants
  BahadurFitOptions bahadur;
  GeeOptions gee;
  std::uint64_t seed = 0;
};

// Uniform slice of one estimator's output for side-by-side tables.
struct EstimatorSummary {
  std::string estimator;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  bool converged = false;
  double loglik = 0.0;  // NaN for GEE (not likelihood based)
  double aic = 0.0;     // NaN for GEE
  std::map<std::string, double> extra;  // phi, rho, tau, gamma, ...
  std::vector<std::string> diagnostics;
};

struct CompareReport {
  std::vector<std::string> coefficient_names;
  std::vector<EstimatorSummary> estimators;
  // Largest |beta_a - beta_b| / sqrt(se_a^2 + se_b^2) over estimator pairs,
  // per coefficient.
  std::vector<double> max_pairwise_z;
};

// Fits the single-intercept, AR(1)-rho and AR(1)-tau bridge models plus the
// Bahadur ML and GEE benchmarks on one dataset.
CompareReport run_compare(const Dataset& dataset,
                          const std::vector<std::string>& names,
                          const CompareOptions& options);

}  // namespace bglmm
