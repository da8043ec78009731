#pragma once

#include <Eigen/Core>

#include "bglmm/bridge.hpp"
#include "bglmm/copula.hpp"

namespace bglmm {

// Marginal-scale model specification: the conditional (subject-specific)
// coefficients are beta / phi, never stored separately.
struct BridgeModelSpec {
  Eigen::VectorXd beta;  // marginal log-odds scale, length J (J >= 0)
  BridgeParam phi;
  AssociationStructure structure;
};

// P(Y=1 | b, x) = expit(b + x'beta / phi).
double conditional_prob(double b, const Eigen::VectorXd& x_row,
                        const BridgeModelSpec& spec);

// The closed-form marginal implied by the bridge construction:
// P(Y=1 | x) = expit(x'beta).
double marginal_prob(const Eigen::VectorXd& x_row, const Eigen::VectorXd& beta);

}  // namespace bglmm
