#include "bglmm/copula.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bglmm/errors.hpp"
#include "bglmm/normal.hpp"

namespace bglmm {

namespace {
constexpr double kPi = std::numbers::pi;

bool is_integer_lag(double lag) {
  return std::fabs(lag - std::round(lag)) < 1e-9;
}

// param^lag for possibly negative param; negative bases are only defined for
// integer lags, which callers have validated.
double signed_power(double param, double lag) {
  if (param >= 0.0) return std::pow(param, lag);
  const double mag = std::pow(-param, lag);
  const long long k = static_cast<long long>(std::llround(lag));
  return (k % 2 == 0) ? mag : -mag;
}
}  // namespace

AssociationStructure AssociationStructure::single_intercept() {
  return {AssociationKind::SingleIntercept, 0.0};
}

AssociationStructure AssociationStructure::ar1_rho(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) {
    throw std::domain_error("AssociationStructure: rho must lie in (-1,1)");
  }
  return {AssociationKind::AR1Rho, rho};
}

AssociationStructure AssociationStructure::ar1_tau(double tau) {
  if (!(tau > -1.0 && tau < 1.0)) {
    throw std::domain_error("AssociationStructure: tau must lie in (-1,1)");
  }
  return {AssociationKind::AR1Tau, tau};
}

const char* AssociationStructure::name() const {
  switch (kind) {
    case AssociationKind::SingleIntercept: return "single";
    case AssociationKind::AR1Rho: return "ar1-rho";
    case AssociationKind::AR1Tau: return "ar1-tau";
  }
  return "?";
}

double tau_from_rho(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) {
    throw std::domain_error("tau_from_rho: rho must lie in (-1,1)");
  }
  return 2.0 * std::asin(rho) / kPi;
}

double rho_from_tau(double tau) {
  if (!(tau > -1.0 && tau < 1.0)) {
    throw std::domain_error("rho_from_tau: tau must lie in (-1,1)");
  }
  return std::sin(kPi * tau / 2.0);
}

CorrelationMatrix build_correlation(const AssociationStructure& structure,
                                    std::span<const double> times) {
  if (structure.kind == AssociationKind::SingleIntercept) {
    throw StructureError(
        "build_correlation: the single-intercept model has no correlation "
        "matrix; use the dedicated shared-intercept path");
  }
  const int m = static_cast<int>(times.size());
  if (m < 1) throw StructureError("build_correlation: need at least one time");
  for (int i = 1; i < m; ++i) {
    if (!(times[i] > times[i - 1])) {
      throw StructureError("build_correlation: times must be strictly increasing");
    }
  }
  const double p = structure.param;
  if (!(p > -1.0 && p < 1.0)) {
    throw StructureError("build_correlation: association parameter out of range");
  }
  if (p < 0.0) {
    for (int s = 0; s < m; ++s) {
      for (int t = s + 1; t < m; ++t) {
        if (!is_integer_lag(times[t] - times[s])) {
          throw StructureError(
              "build_correlation: negative association parameters are only "
              "defined for integer time lags");
        }
      }
    }
  }

  CorrelationMatrix out;
  out.times.assign(times.begin(), times.end());
  out.entries = Eigen::MatrixXd::Identity(m, m);
  for (int s = 0; s < m; ++s) {
    for (int t = s + 1; t < m; ++t) {
      const double lag = times[t] - times[s];
      double r;
      if (structure.kind == AssociationKind::AR1Rho) {
        r = signed_power(p, lag);
      } else {
        r = rho_from_tau(signed_power(p, lag));
      }
      out.entries(s, t) = r;
      out.entries(t, s) = r;
    }
  }
  // Positive definiteness is part of the invariant; check now so downstream
  // code can rely on it.
  (void)cholesky_lower(out.entries);
  return out;
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw StructureError("cholesky_lower: matrix is not positive definite");
  }
  return llt.matrixL();
}

Eigen::VectorXd sample_latent_normal(const Eigen::MatrixXd& chol_lower,
                                     Rng& rng) {
  const int m = static_cast<int>(chol_lower.rows());
  Eigen::VectorXd eps(m);
  for (int i = 0; i < m; ++i) eps(i) = rng.normal();
  return chol_lower.triangularView<Eigen::Lower>() * eps;
}

double bridge_from_normal(double z, BridgeParam phi) {
  // Work in the nearer tail and reflect: both laws are symmetric, and the
  // normal CDF loses all precision (rounds to 1.0) beyond z ~ 8.3. Past
  // |z| = 37 the tail probability underflows entirely, so clamp there; the
  // corresponding bridge quantile is already ~ -700/phi.
  const double za = std::min(std::fabs(z), 37.0);
  const double tail = normal_cdf(-za);
  const double b = bridge_inv_cdf(tail, phi);
  return z < 0.0 ? b : -b;
}

Eigen::VectorXd sample_effect_vector(const CorrelationMatrix& sigma,
                                     BridgeParam phi, Rng& rng) {
  const Eigen::MatrixXd chol = cholesky_lower(sigma.entries);
  Eigen::VectorXd z = sample_latent_normal(chol, rng);
  for (int i = 0; i < z.size(); ++i) z(i) = bridge_from_normal(z(i), phi);
  return z;
}

}  // namespace bglmm
