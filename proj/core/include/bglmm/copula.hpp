#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <span>
#include <vector>

#include "bglmm/bridge.hpp"
#include "bglmm/rng.hpp"

namespace bglmm {

enum class AssociationKind { SingleIntercept, AR1Rho, AR1Tau };

// Association model for the latent random intercepts: one shared intercept
// per subject (the Wang-Louis model), AR(1) on the latent-normal correlation,
// or AR(1) on Kendall's tau with the sin(pi tau / 2) back-transform.
struct AssociationStructure {
  AssociationKind kind = AssociationKind::SingleIntercept;
  double param = 0.0;  // rho or tau; unused for SingleIntercept

  static AssociationStructure single_intercept();
  static AssociationStructure ar1_rho(double rho);
  static AssociationStructure ar1_tau(double tau);

  bool has_parameter() const { return kind != AssociationKind::SingleIntercept; }
  const char* name() const;
};

// Latent-normal correlation matrix with unit diagonal, together with the
// observation times its rows refer to. Construct through build_correlation
// so the invariants (symmetry, positive definiteness) are checked once.
struct CorrelationMatrix {
  Eigen::MatrixXd entries;
  std::vector<double> times;

  int dim() const { return static_cast<int>(entries.rows()); }
};

// Kendall's tau of a bivariate normal pair: 2 arcsin(rho) / pi.
double tau_from_rho(double rho);

// Inverse transform sin(pi tau / 2).
double rho_from_tau(double tau);

// Builds the correlation matrix for strictly increasing times. AR1Rho uses
// rho^{|t-s|}; AR1Tau applies the power on the tau scale first. Negative
// parameters are only defined for integer lags. SingleIntercept has no
// matrix representation (the shared-intercept path is one-dimensional) and
// is signalled with a StructureError.
CorrelationMatrix build_correlation(const AssociationStructure& structure,
                                    std::span<const double> times);

// Lower Cholesky factor; throws StructureError when the matrix is not
// positive definite (no repair is attempted).
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma);

// One multivariate normal draw given the lower Cholesky factor.
Eigen::VectorXd sample_latent_normal(const Eigen::MatrixXd& chol_lower,
                                     Rng& rng);

// One correlated bridge random-effect vector: Z ~ N(0, Sigma) transformed
// elementwise through the probability integral transform.
Eigen::VectorXd sample_effect_vector(const CorrelationMatrix& sigma,
                                     BridgeParam phi, Rng& rng);

// Latent-normal to bridge marginal transform b = F_b^{-1}(Phi(z)).
double bridge_from_normal(double z, BridgeParam phi);

}  // namespace bglmm
