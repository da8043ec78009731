#pragma once

#include <functional>
#include <vector>

namespace bglmm {

// Gauss-Legendre rule on [-1, 1]; nodes ascending.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  static const GaussLegendre& rule(int n);  // cached per order
};

// Adaptive Gauss-Kronrod (G7,K15) on a finite interval. Subdivides until the
// local error estimate meets abs_tol + rel_tol * |integral|.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-12,
                 int max_depth = 60);

// Integral over the whole real line via the rational map x = t / (1 - t^2).
// Requires f to decay at infinity (exponential tails are plenty).
double integrate_real_line(const std::function<double(double)>& f,
                           double abs_tol = 1e-12, double rel_tol = 1e-12);

}  // namespace bglmm
