#include "bglmm/optim.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "bglmm/errors.hpp"

namespace bglmm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double step) {
  const int p = static_cast<int>(x.size());
  Eigen::VectorXd g(p);
  Eigen::VectorXd xt = x;
  for (int i = 0; i < p; ++i) {
    const double h = step * (1.0 + std::fabs(x(i)));
    xt(i) = x(i) + h;
    const double fp = f(xt);
    xt(i) = x(i) - h;
    const double fm = f(xt);
    xt(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian_forward(const Objective& f, const Eigen::VectorXd& x,
                                   double f_x, double step) {
  const int p = static_cast<int>(x.size());
  Eigen::VectorXd h(p);
  Eigen::VectorXd fi(p);
  Eigen::VectorXd xt = x;
  for (int i = 0; i < p; ++i) {
    h(i) = step * (1.0 + std::fabs(x(i)));
    xt(i) = x(i) + h(i);
    fi(i) = f(xt);
    xt(i) = x(i);
  }
  Eigen::MatrixXd hess(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      xt(i) = x(i) + h(i);
      xt(j) += h(j);  // handles i == j as x_i + 2 h_i
      const double fij = f(xt);
      xt(i) = x(i);
      xt(j) = x(j);
      const double v = (fij - fi(i) - fi(j) + f_x) / (h(i) * h(j));
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

Eigen::MatrixXd fd_hessian_central(const Objective& f, const Eigen::VectorXd& x,
                                   double step) {
  const int p = static_cast<int>(x.size());
  Eigen::VectorXd h(p);
  for (int i = 0; i < p; ++i) h(i) = step * (1.0 + std::fabs(x(i)));
  const double f0 = f(x);
  Eigen::MatrixXd hess(p, p);
  Eigen::VectorXd xt = x;
  for (int i = 0; i < p; ++i) {
    xt(i) = x(i) + h(i);
    const double fp = f(xt);
    xt(i) = x(i) - h(i);
    const double fm = f(xt);
    xt(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) {
      xt(i) = x(i) + h(i);
      xt(j) = x(j) + h(j);
      const double fpp = f(xt);
      xt(j) = x(j) - h(j);
      const double fpm = f(xt);
      xt(i) = x(i) - h(i);
      const double fmm = f(xt);
      xt(j) = x(j) + h(j);
      const double fmp = f(xt);
      xt(i) = x(i);
      xt(j) = x(j);
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * h(i) * h(j));
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

Eigen::VectorXd ascent_direction(const Eigen::MatrixXd& hessian,
                                 const Eigen::VectorXd& gradient) {
  Eigen::MatrixXd a = -hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  double ridge = 1e-8 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  int attempts = 0;
  while (llt.info() != Eigen::Success) {
    if (++attempts > 30) {
      throw NumericError("ascent_direction: cannot stabilize Hessian");
    }
    a.diagonal().array() += ridge;
    ridge *= 10.0;
    llt.compute(a);
  }
  return llt.solve(gradient);
}

NewtonReport newton_maximize(const Objective& f, const Eigen::VectorXd& x0,
                             const NewtonOptions& options) {
  NewtonReport rep;
  rep.x = x0;
  rep.value = f(x0);
  if (!std::isfinite(rep.value)) {
    throw NumericError("newton_maximize: objective not finite at start");
  }
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    rep.iterations = iter;
    rep.gradient = fd_gradient(f, rep.x, 1e-6);
    if (rep.gradient.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      rep.converged = true;
      return rep;
    }
    const Eigen::MatrixXd hess =
        fd_hessian_forward(f, rep.x, rep.value, options.fd_step);
    const Eigen::VectorXd delta = ascent_direction(hess, rep.gradient);
    double step = 1.0;
    double new_value = kNegInf;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int h = 0; h <= options.max_step_halvings; ++h) {
      x_new = rep.x + step * delta;
      new_value = f(x_new);
      if (std::isfinite(new_value) && new_value >= rep.value - 1e-12) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      rep.notes.push_back("line search failed at iteration " +
                          std::to_string(iter));
      return rep;
    }
    const double rel_step = (x_new - rep.x).norm() /
                            std::max(1.0, rep.x.norm());
    rep.x = x_new;
    rep.value = new_value;
    if (rel_step <= options.step_tol) {
      rep.converged = true;
      rep.gradient = fd_gradient(f, rep.x, 1e-6);
      return rep;
    }
  }
  rep.notes.push_back("maximum iterations reached");
  return rep;
}

}  // namespace bglmm
