#pragma once

#include <span>
#include <vector>

namespace bglmm {

// Attenuation parameter of the bridge random-effect distribution.
// Valid range is [1e-6, 1 - 1e-6]; both limits are degenerate (infinite
// variance at 0, a point mass at 1), so boundary values are rejected.
class BridgeParam {
 public:
  explicit BridgeParam(double phi);
  double value() const { return phi_; }

  static constexpr double kMin = 1e-6;
  static constexpr double kMax = 1.0 - 1e-6;

 private:
  double phi_;
};

// Density (1/2pi) sin(phi pi) / (cosh(phi b) + cos(phi pi)).
double bridge_pdf(double b, BridgeParam phi);

// Log-density; switches to the asymptotic form for large |phi b| so it is
// finite wherever the density would underflow.
double bridge_log_pdf(double b, BridgeParam phi);

// Distribution function; evaluated through the upper-tail form so both tails
// keep full relative precision.
double bridge_cdf(double b, BridgeParam phi);

// Quantile function (1/phi) log[ sin(phi pi u) / sin(phi pi (1-u)) ].
// Throws std::domain_error unless 0 < u < 1.
double bridge_inv_cdf(double u, BridgeParam phi);

// Var(b) = pi^2/3 (1/phi^2 - 1).
double bridge_variance(BridgeParam phi);

// Inversion sampling: applies the quantile function to each uniform variate.
std::vector<double> sample_bridge(std::span<const double> u_stream,
                                  BridgeParam phi);

}  // namespace bglmm
