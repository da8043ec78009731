#include "bglmm/bridge.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bglmm {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

BridgeParam::BridgeParam(double phi) : phi_(phi) {
  if (!(phi >= kMin && phi <= kMax)) {
    throw std::domain_error(
        "BridgeParam: phi must lie in [1e-6, 1 - 1e-6], got " +
        std::to_string(phi));
  }
}

double bridge_log_pdf(double b, BridgeParam phi) {
  const double p = phi.value();
  const double a = std::fabs(p * b);
  const double cospp = std::cos(p * kPi);
  const double log_sin = std::log(std::sin(p * kPi));
  if (a < 30.0) {
    return log_sin - std::log(kTwoPi) - std::log(std::cosh(a) + cospp);
  }
  // cosh(a) + c = e^a/2 * (1 + e^{-2a} + 2 c e^{-a})
  const double ea = std::exp(-a);
  const double corr = std::log1p(ea * ea + 2.0 * cospp * ea);
  return log_sin - std::log(kTwoPi) - (a - std::log(2.0) + corr);
}

double bridge_pdf(double b, BridgeParam phi) {
  return std::exp(bridge_log_pdf(b, phi));
}

double bridge_cdf(double b, BridgeParam phi) {
  const double p = phi.value();
  // Upper tail for x >= 0:
  //   Q(x) = (1/(pi phi)) * [pi/2 - arctan((e^{phi x} + cos(phi pi)) / sin(phi pi))]
  //        = (1/(pi phi)) * arctan(sin(phi pi) / (e^{phi x} + cos(phi pi)))
  // (the argument is positive for all x >= 0). The reflection F(b) = 1 - F(-b)
  // keeps the lower tail accurate.
  auto upper_tail = [p](double x) {
    const double ex = std::exp(p * x);
    return std::atan2(std::sin(p * kPi), ex + std::cos(p * kPi)) / (kPi * p);
  };
  if (b >= 0.0) return 1.0 - upper_tail(b);
  return upper_tail(-b);
}

double bridge_inv_cdf(double u, BridgeParam phi) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("bridge_inv_cdf: u must lie strictly in (0,1)");
  }
  const double p = phi.value();
  const double a = p * kPi;
  // log sin(a u): for tiny arguments sin(x) = x to double precision, so the
  // log-space form below never cancels.
  auto log_sin_scaled = [a](double v) {
    const double x = a * v;
    return x < 1e-8 ? std::log(x) : std::log(std::sin(x));
  };
  return (log_sin_scaled(u) - log_sin_scaled(1.0 - u)) / p;
}

double bridge_variance(BridgeParam phi) {
  const double p = phi.value();
  return kPi * kPi / 3.0 * (1.0 / (p * p) - 1.0);
}

std::vector<double> sample_bridge(std::span<const double> u_stream,
                                  BridgeParam phi) {
  std::vector<double> out;
  out.reserve(u_stream.size());
  for (double u : u_stream) out.push_back(bridge_inv_cdf(u, phi));
  return out;
}

}  // namespace bglmm
