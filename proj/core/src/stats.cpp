#include "bglmm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bglmm {

double expit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("logit: p must lie strictly in (0,1)");
  }
  return std::log(p) - std::log1p(-p);
}

double log1pexp(double x) {
  if (x > 37.0) return x + std::exp(-x);
  if (x < -37.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::domain_error("log_sum_exp: empty input");
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  NeumaierSum s;
  for (double x : v) s.add(std::exp(x - m));
  return m + std::log(s.value());
}

void NeumaierSum::add(double x) {
  const double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

double neumaier_total(std::span<const double> v) {
  NeumaierSum s;
  for (double x : v) s.add(x);
  return s.value();
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::domain_error("mean: empty input");
  return neumaier_total(v) / static_cast<double>(v.size());
}

double variance_population(std::span<const double> v) {
  const double m = mean(v);
  NeumaierSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(v.size());
}

double variance_sample(std::span<const double> v) {
  if (v.size() < 2) throw std::domain_error("variance_sample: need n >= 2");
  const double m = mean(v);
  NeumaierSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(v.size() - 1);
}

namespace {

// Counts inversions (pairs out of order) in v by merge sort. v is consumed.
long long count_inversions(std::vector<double>& v, std::vector<double>& buf,
                           std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long count = count_inversions(v, buf, lo, mid) +
                    count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      count += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

// Number of tied pairs: sum over tie groups of g*(g-1)/2.
long long tied_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  long long total = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i + 1;
    while (j < v.size() && v[j] == v[i]) ++j;
    const long long g = static_cast<long long>(j - i);
    total += g * (g - 1) / 2;
    i = j;
  }
  return total;
}

}  // namespace

// Knight (1966): sort by x, count swaps needed to sort y. Pairs tied in x or
// in both need separate accounting so they do not enter the swap count as
// discordances.
double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) throw std::domain_error("kendall_tau: length mismatch");
  if (n < 2) throw std::domain_error("kendall_tau: need n >= 2");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];

  // Pairs tied in x (and pairs tied in both) counted from runs of equal x.
  long long ties_x = 0, ties_xy = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && x[idx[j]] == x[idx[i]]) ++j;
      const long long g = static_cast<long long>(j - i);
      ties_x += g * (g - 1) / 2;
      std::size_t k = i;
      while (k < j) {
        std::size_t l = k + 1;
        while (l < j && ys[l] == ys[k]) ++l;
        const long long h = static_cast<long long>(l - k);
        ties_xy += h * (h - 1) / 2;
        k = l;
      }
      i = j;
    }
  }
  const long long ties_y = tied_pairs(ys);

  std::vector<double> buf(n);
  const long long swaps = count_inversions(ys, buf, 0, n);

  const long long total = static_cast<long long>(n) *
                          static_cast<long long>(n - 1) / 2;
  // swaps counts discordant pairs among pairs not tied in x.
  const long long discordant = swaps;
  const long long concordant =
      total - ties_x - (ties_y - ties_xy) - discordant;
  return static_cast<double>(concordant - discordant) /
         static_cast<double>(total);
}

double kendall_tau_binary(long long n00, long long n01, long long n10,
                          long long n11) {
  const long long n = n00 + n01 + n10 + n11;
  if (n < 2) throw std::domain_error("kendall_tau_binary: need n >= 2");
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return (static_cast<double>(n11) * static_cast<double>(n00) -
          static_cast<double>(n10) * static_cast<double>(n01)) /
         total;
}

double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::domain_error("ks_statistic: empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::fabs(f - lo), std::fabs(hi - f)));
  }
  return d;
}

BatchEstimate batch_estimate(std::span<const double> per_batch_values) {
  BatchEstimate out;
  out.batches = static_cast<int>(per_batch_values.size());
  out.estimate = mean(per_batch_values);
  if (out.batches > 1) {
    out.standard_error = std::sqrt(variance_sample(per_batch_values) /
                                   static_cast<double>(out.batches));
  }
  return out;
}

}  // namespace bglmm
