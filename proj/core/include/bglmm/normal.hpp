#pragma once

namespace bglmm {

// Standard normal CDF, absolute error below 1e-15 over the full range.
double normal_cdf(double z);

// Standard normal density and log-density.
double normal_pdf(double z);
double normal_log_pdf(double z);

// Inverse standard normal CDF (Wichura's AS 241, PPND16).
// Throws std::domain_error for u outside (0, 1).
double normal_quantile(double u);

}  // namespace bglmm
