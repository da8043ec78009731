#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bglmm/copula.hpp"
#include "bglmm/data.hpp"
#include "bglmm/likelihood.hpp"

namespace bglmm {

// Step function: iteration -> Monte Carlo draws. Stages must start at
// iteration 1 and have nondecreasing draw counts.
struct DrawSchedule {
  struct Stage {
    int first_iteration;
    int draws;
  };
  std::vector<Stage> stages = {{1, 50}, {20, 100}, {40, 1000}};

  int draws_at(int iteration) const;
  int max_draws() const;
  // First iteration of the stage after the one containing `iteration`,
  // or 0 when it is already the last stage.
  int next_stage_start(int iteration) const;
  void validate() const;

  static DrawSchedule parse(const std::string& text);  // "1:50,20:100,40:1000"
  std::string to_string() const;
};

struct FitOptions {
  int max_outer_iterations = 50;
  DrawSchedule schedule;
  double step_tol = 1e-5;      // relative parameter step
  double grad_tol = 1e-4;      // infinity norm of the gradient
  double fd_step = 1e-4;       // finite-difference step scale
  std::uint64_t seed = 0;
  double proposal_inflation = 1.2;
  std::optional<double> fix_phi;
  double initial_assoc = 0.3;
  int threads = 1;
};

struct IdentifiabilityCheck {
  bool ok = true;
  std::string violation;  // empty when ok
};

// The association layer is only identified jointly with phi when there are
// enough distinct time pairs: with at most two occasions either phi or the
// association parameter must be fixed, and with one occasion no association
// parameter is estimable.
IdentifiabilityCheck check_identifiability(int m_max,
                                           const AssociationStructure& structure,
                                           bool phi_free);

struct IterationRecord {
  int iteration = 0;
  int draws = 0;
  double loglik = 0.0;
  double step_norm = 0.0;
  double grad_norm = 0.0;
};

struct FitResult {
  std::vector<std::string> parameter_names;  // betas, then phi, then assoc
  Eigen::VectorXd beta;                      // marginal scale
  double phi = 0.0;
  bool phi_fixed = false;
  AssociationKind structure = AssociationKind::SingleIntercept;
  std::optional<double> assoc;  // rho or tau on the natural scale

  Eigen::VectorXd theta;       // unconstrained optimum (free parameters)
  Eigen::MatrixXd covariance;  // natural scale, free parameters
  Eigen::VectorXd se;          // natural scale, free parameters
  bool se_valid = false;

  double loglik = 0.0;
  double aic = 0.0;
  int n_free_parameters = 0;
  bool converged = false;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> trace;
  std::vector<std::string> diagnostics;

  // Conditional (subject-specific) coefficients beta / phi.
  Eigen::VectorXd conditional_beta() const { return beta / phi; }
};

// Starting values: pooled ordinary logistic regression for beta (ignoring
// the correlation), phi = 0.5 and association = 0.3, all returned on the
// unconstrained scale. Throws DesignError for rank-deficient designs.
Eigen::VectorXd initial_values(const Dataset& dataset,
                               const AssociationStructure& structure,
                               const FitOptions& options,
                               const std::vector<std::string>& names = {},
                               std::vector<std::string>* notes = nullptr);

// Maximum likelihood for (beta, phi, association) by staged Newton-Raphson
// on the common-random-numbers Monte Carlo likelihood.
FitResult fit_bridge_model(const Dataset& dataset,
                           const AssociationStructure& structure,
                           const FitOptions& options,
                           const std::vector<std::string>& names = {});

// -2 loglik + 2 (number of free parameters).
double aic(double loglik, int n_free_parameters);

}  // namespace bglmm
