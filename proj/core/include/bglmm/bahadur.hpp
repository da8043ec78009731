#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "bglmm/data.hpp"

namespace bglmm {

// Parameters of the Bahadur joint distribution: marginal coefficients plus
// the AR(1) base pairwise correlation and common third/fourth order
// correlations (fifth and higher are fixed at zero).
struct BahadurParams {
  Eigen::VectorXd beta;
  double gamma = 0.0;
  double gamma3 = 0.0;
  double gamma4 = 0.0;
};

// (y - p) / sqrt(p (1 - p)); domain error for p at 0 or 1.
double standardized_residual(int y, double p);

// Probability of one binary pattern under the Bahadur representation with
// pairwise correlations gamma^{|t-s|} and common higher-order terms. May be
// negative for parameters outside the validity region; callers decide.
double bahadur_cell_prob(std::span<const int> pattern,
                         std::span<const double> marginals,
                         std::span<const double> times, double gamma,
                         double gamma3, double gamma4);

// All 2^m cell probabilities, pattern bits in little-endian order
// (cell index k has y_t = (k >> t) & 1).
std::vector<double> enumerate_bahadur_cells(std::span<const double> marginals,
                                            std::span<const double> times,
                                            double gamma, double gamma3,
                                            double gamma4);

struct BahadurValidity {
  bool ok = true;
  double min_cell = 1.0;
  int worst_cell = -1;
};

BahadurValidity check_bahadur_validity(std::span<const double> marginals,
                                       std::span<const double> times,
                                       double gamma, double gamma3,
                                       double gamma4);

struct BahadurFitOptions {
  int max_iterations = 200;
  double step_tol = 1e-9;
  double grad_tol = 1e-7;
  double barrier_weight = 1e-6;  // interior penalty on the minimum cell
  // -1 = auto: third order free when some subject has >= 3 occasions,
  // fourth order free when some subject has >= 4.
  int fit_gamma3 = -1;
  int fit_gamma4 = -1;
};

struct BahadurFit {
  std::vector<std::string> parameter_names;
  Eigen::VectorXd beta;
  double gamma = 0.0;
  double gamma3 = 0.0;
  double gamma4 = 0.0;
  bool gamma3_free = false;
  bool gamma4_free = false;
  Eigen::VectorXd theta;       // unconstrained optimum
  Eigen::MatrixXd covariance;  // natural scale (observed information)
  Eigen::VectorXd se;
  bool se_valid = false;
  double loglik = 0.0;  // unpenalized
  double aic = 0.0;
  int n_free_parameters = 0;
  bool converged = false;
  int iterations = 0;
  double min_cell = 1.0;          // at the optimum, over observed patterns
  bool boundary_active = false;   // optimizer pressed against validity edge
  std::vector<std::string> diagnostics;
};

// Exact multinomial maximum likelihood under the Bahadur representation.
// Subjects with missing occasions contribute their observed sub-pattern
// (the marginal of the representation is the representation on the
// sub-grid). Needs m_i <= 7.
BahadurFit fit_bahadur_ml(const Dataset& dataset,
                          const BahadurFitOptions& options = {},
                          const std::vector<std::string>& names = {});

}  // namespace bglmm
