#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace bglmm {

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Central-difference gradient with per-coordinate step h_i = step * (1+|x_i|).
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double step = 1e-6);

// Forward-offset Hessian: cheap (1 + p + p(p+1)/2 evaluations beyond f(x))
// and accurate enough for search directions.
Eigen::MatrixXd fd_hessian_forward(const Objective& f, const Eigen::VectorXd& x,
                                   double f_x, double step = 1e-4);

// Central-difference Hessian, used once at the optimum for standard errors.
Eigen::MatrixXd fd_hessian_central(const Objective& f, const Eigen::VectorXd& x,
                                   double step = 1e-4);

// Ascent direction (-H)^{-1} g with an escalating ridge when -H is not
// positive definite.
Eigen::VectorXd ascent_direction(const Eigen::MatrixXd& hessian,
                                 const Eigen::VectorXd& gradient);

struct NewtonOptions {
  int max_iterations = 100;
  double step_tol = 1e-6;   // relative parameter step
  double grad_tol = 1e-6;   // infinity norm
  double fd_step = 1e-4;
  int max_step_halvings = 10;
};

struct NewtonReport {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> notes;
};

// Maximizes a fixed smooth objective by damped Newton-Raphson with
// finite-difference derivatives. Objectives may return -inf to mark
// infeasible points; the line search backs away from them.
NewtonReport newton_maximize(const Objective& f, const Eigen::VectorXd& x0,
                             const NewtonOptions& options = {});

}  // namespace bglmm
