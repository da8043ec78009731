#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bglmm {

// ---- scalar helpers --------------------------------------------------------

// Logistic function, stable at both extremes.
double expit(double x);

double logit(double p);

// log(1 + exp(x)) without overflow.
double log1pexp(double x);

// log(sum(exp(v))) over a span.
double log_sum_exp(std::span<const double> v);

// ---- compensated summation -------------------------------------------------

// Neumaier variant of Kahan summation; used wherever a sum must be
// independent of chunking (parallel reductions are merged in index order).
class NeumaierSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double neumaier_total(std::span<const double> v);

// ---- moments ---------------------------------------------------------------

double mean(std::span<const double> v);

// Population variance (divides by n).
double variance_population(std::span<const double> v);

// Sample variance (divides by n-1).
double variance_sample(std::span<const double> v);

// ---- Kendall's tau ---------------------------------------------------------

// Kendall's tau-a: (concordant - discordant) / (n(n-1)/2). Ties contribute
// zero to the numerator. O(n log n) via merge-sort inversion counting.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Tau-a for paired binary data from the 2x2 table counts
// (n11*n00 - n10*n01) / (n(n-1)/2).
double kendall_tau_binary(long long n00, long long n01, long long n10,
                          long long n11);

// ---- distribution checks ---------------------------------------------------

// Kolmogorov-Smirnov statistic of a sample against a CDF. Sorts a copy.
double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf);

// Mean of per-batch statistics and its standard error; generic tool for
// Monte Carlo tolerance checks.
struct BatchEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  int batches = 0;
};

BatchEstimate batch_estimate(std::span<const double> per_batch_values);

}  // namespace bglmm
