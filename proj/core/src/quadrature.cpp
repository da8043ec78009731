#include "bglmm/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "bglmm/errors.hpp"

namespace bglmm {

namespace {

// Newton iteration on Legendre polynomials (standard Golub-Welsch
// alternative; adequate to machine precision for the orders used here).
GaussLegendre make_rule(int n) {
  if (n < 1) throw std::domain_error("GaussLegendre: order must be >= 1");
  GaussLegendre r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

// Kronrod 15-point nodes/weights with embedded Gauss 7-point rule.
constexpr double kKronrodNodes[8] = {
    0.000000000000000000000000000000000e+00,
    2.077849550078984676006894037732449e-01,
    4.058451513773971669066064120769615e-01,
    5.860872354676911302941448382587296e-01,
    7.415311855993944398638647732807884e-01,
    8.648644233597690727897127886409262e-01,
    9.491079123427585245261896840478513e-01,
    9.914553711208126392068546975263285e-01};
constexpr double kKronrodWeights[8] = {
    2.094821410847278280129991748917143e-01,
    2.044329400752988924141619992346491e-01,
    1.903505780647854099132564024210137e-01,
    1.690047266392679028265834265985503e-01,
    1.406532597155259187451895905102379e-01,
    1.047900103222501838398763225415180e-01,
    6.309209262997855329070066318920429e-02,
    2.293532201052922496373200805896959e-02};
constexpr double kGaussWeights[4] = {
    4.179591836734693877551020408163265e-01,
    3.818300505051189449503697754889751e-01,
    2.797053914892766679014677714237796e-01,
    1.294849661688696932706114326790820e-01};

struct Gk15Result {
  double integral;
  double error;
};

Gk15Result gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = kKronrodWeights[0] * fc;
  double gauss = kGaussWeights[0] * fc;
  for (int i = 1; i < 8; ++i) {
    const double dx = h * kKronrodNodes[i];
    const double fsum = f(c - dx) + f(c + dx);
    kron += kKronrodWeights[i] * fsum;
    if (i % 2 == 0) gauss += kGaussWeights[i / 2] * fsum;
  }
  kron *= h;
  gauss *= h;
  return {kron, std::fabs(kron - gauss)};
}

double integrate_recursive(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, double rel_tol,
                           int depth) {
  const Gk15Result r = gk15(f, a, b);
  const double tol = std::max(abs_tol, rel_tol * std::fabs(r.integral));
  if (r.error <= tol || depth <= 0) {
    if (depth <= 0 && r.error > 64.0 * std::max(tol, 1e-300)) {
      throw NumericError("integrate: subdivision limit reached");
    }
    return r.integral;
  }
  const double m = 0.5 * (a + b);
  return integrate_recursive(f, a, m, 0.5 * abs_tol, rel_tol, depth - 1) +
         integrate_recursive(f, m, b, 0.5 * abs_tol, rel_tol, depth - 1);
}

}  // namespace

const GaussLegendre& GaussLegendre::rule(int n) {
  static std::map<int, GaussLegendre> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol, int max_depth) {
  if (!(a < b)) throw std::domain_error("integrate: need a < b");
  return integrate_recursive(f, a, b, abs_tol, rel_tol, max_depth);
}

double integrate_real_line(const std::function<double(double)>& f,
                           double abs_tol, double rel_tol) {
  // x = t/(1-t^2) maps (-1,1) onto the real line; dx = (1+t^2)/(1-t^2)^2 dt.
  auto g = [&f](double t) {
    const double s = 1.0 - t * t;
    const double x = t / s;
    const double jac = (1.0 + t * t) / (s * s);
    const double v = f(x);
    return v == 0.0 ? 0.0 : v * jac;
  };
  // Stay a hair inside the endpoints; the integrand vanishes there for any
  // exponentially decaying f.
  const double edge = 1.0 - 1e-14;
  return integrate(g, -edge, edge, abs_tol, rel_tol);
}

}  // namespace bglmm
