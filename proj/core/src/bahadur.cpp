#include "bglmm/bahadur.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bglmm/errors.hpp"
#include "bglmm/glm.hpp"
#include "bglmm/model.hpp"
#include "bglmm/optim.hpp"
#include "bglmm/stats.hpp"

namespace bglmm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxOccasions = 7;
}  // namespace

double standardized_residual(int y, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("standardized_residual: p must lie strictly in (0,1)");
  }
  if (y != 0 && y != 1) {
    throw std::domain_error("standardized_residual: y must be 0 or 1");
  }
  return (y - p) / std::sqrt(p * (1.0 - p));
}

namespace {

// Correlation correction factor of the representation:
// 1 + sum_{s<t} G_st s_s s_t + gamma3 sum_{s<t<u} s_s s_t s_u
//   + gamma4 sum_{s<t<u<v} s_s s_t s_u s_v.
double correction_factor(std::span<const double> s,
                         std::span<const double> times, double gamma,
                         double gamma3, double gamma4) {
  const int m = static_cast<int>(s.size());
  double total = 1.0;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      total += std::pow(gamma, std::fabs(times[b] - times[a])) * s[a] * s[b];
    }
  }
  if (gamma3 != 0.0 && m >= 3) {
    double sum3 = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        for (int c = b + 1; c < m; ++c) sum3 += s[a] * s[b] * s[c];
    total += gamma3 * sum3;
  }
  if (gamma4 != 0.0 && m >= 4) {
    double sum4 = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        for (int c = b + 1; c < m; ++c)
          for (int d = c + 1; d < m; ++d) sum4 += s[a] * s[b] * s[c] * s[d];
    total += gamma4 * sum4;
  }
  return total;
}

}  // namespace

double bahadur_cell_prob(std::span<const int> pattern,
                         std::span<const double> marginals,
                         std::span<const double> times, double gamma,
                         double gamma3, double gamma4) {
  const int m = static_cast<int>(pattern.size());
  if (static_cast<int>(marginals.size()) != m ||
      static_cast<int>(times.size()) != m) {
    throw std::domain_error("bahadur_cell_prob: size mismatch");
  }
  if (m > kMaxOccasions) {
    throw std::domain_error("bahadur_cell_prob: at most 7 occasions supported");
  }
  double base = 1.0;
  double s[kMaxOccasions];
  for (int t = 0; t < m; ++t) {
    const double p = marginals[t];
    const int y = pattern[t];
    base *= y ? p : (1.0 - p);
    s[t] = standardized_residual(y, p);
  }
  return base * correction_factor({s, static_cast<std::size_t>(m)}, times,
                                  gamma, gamma3, gamma4);
}

std::vector<double> enumerate_bahadur_cells(std::span<const double> marginals,
                                            std::span<const double> times,
                                            double gamma, double gamma3,
                                            double gamma4) {
  const int m = static_cast<int>(marginals.size());
  if (m > kMaxOccasions) {
    throw std::domain_error("enumerate_bahadur_cells: at most 7 occasions");
  }
  std::vector<double> cells(static_cast<std::size_t>(1) << m);
  std::vector<int> pattern(static_cast<std::size_t>(m));
  for (std::size_t k = 0; k < cells.size(); ++k) {
    for (int t = 0; t < m; ++t) {
      pattern[static_cast<std::size_t>(t)] = static_cast<int>((k >> t) & 1U);
    }
    cells[k] = bahadur_cell_prob(pattern, marginals, times, gamma, gamma3,
                                 gamma4);
  }
  return cells;
}

BahadurValidity check_bahadur_validity(std::span<const double> marginals,
                                       std::span<const double> times,
                                       double gamma, double gamma3,
                                       double gamma4) {
  const std::vector<double> cells =
      enumerate_bahadur_cells(marginals, times, gamma, gamma3, gamma4);
  BahadurValidity out;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (cells[k] < out.min_cell) {
      out.min_cell = cells[k];
      out.worst_cell = static_cast<int>(k);
    }
  }
  out.ok = out.min_cell >= 0.0;
  return out;
}

BahadurFit fit_bahadur_ml(const Dataset& dataset,
                          const BahadurFitOptions& options,
                          const std::vector<std::string>& names) {
  validate_dataset(dataset);
  const DatasetSummary sum = summarize(dataset);
  if (sum.m_max > kMaxOccasions) {
    throw DesignError("fit_bahadur_ml: subjects with more than 7 occasions");
  }
  const int j = sum.n_covariates;
  if (j == 0) throw DesignError("fit_bahadur_ml: empty design");

  const bool g3_free =
      options.fit_gamma3 >= 0 ? options.fit_gamma3 != 0 : sum.m_max >= 3;
  const bool g4_free =
      options.fit_gamma4 >= 0 ? options.fit_gamma4 != 0 : sum.m_max >= 4;
  const int p = j + 1 + (g3_free ? 1 : 0) + (g4_free ? 1 : 0);

  // theta = [beta, atanh(gamma), gamma3?, gamma4?]
  auto unpack = [&](const Eigen::VectorXd& th, BahadurParams& params) {
    params.beta = th.head(j);
    params.gamma = std::tanh(th(j));
    int k = j + 1;
    params.gamma3 = g3_free ? th(k++) : 0.0;
    params.gamma4 = g4_free ? th(k) : 0.0;
  };

  // Unpenalized log-likelihood with the smallest observed-pattern cell as a
  // byproduct. Infeasible parameters give -inf.
  auto loglik_and_min_cell = [&](const BahadurParams& params,
                                 double& min_cell) -> double {
    NeumaierSum ll;
    min_cell = 1.0;
    double marg[kMaxOccasions];
    for (const auto& subj : dataset) {
      const int m = subj.occasions();
      for (int t = 0; t < m; ++t) {
        marg[t] = marginal_prob(subj.x.row(t), params.beta);
        if (!(marg[t] > 0.0 && marg[t] < 1.0)) return kNegInf;
      }
      // Every cell of the subject's observed grid must be a probability, not
      // just the observed one; scan them all.
      const std::vector<double> cells = enumerate_bahadur_cells(
          {marg, static_cast<std::size_t>(m)}, subj.times, params.gamma,
          params.gamma3, params.gamma4);
      for (double c : cells) {
        if (!std::isfinite(c)) return kNegInf;
        min_cell = std::min(min_cell, c);
      }
      if (min_cell <= 0.0) return kNegInf;
      std::size_t idx = 0;
      for (int t = 0; t < m; ++t) {
        if (subj.outcomes[static_cast<std::size_t>(t)]) idx |= (1ULL << t);
      }
      ll.add(std::log(cells[idx]));
    }
    return ll.value();
  };

  auto objective = [&](const Eigen::VectorXd& th) -> double {
    BahadurParams params;
    unpack(th, params);
    double min_cell = 1.0;
    const double ll = loglik_and_min_cell(params, min_cell);
    if (!std::isfinite(ll)) return kNegInf;
    return ll + options.barrier_weight * std::log(min_cell);
  };

  // Starting values: pooled logistic for beta, lag-1 moment for gamma.
  Eigen::MatrixXd x_all(sum.n_observations, j);
  Eigen::VectorXd y_all(sum.n_observations);
  {
    int row = 0;
    for (const auto& s : dataset) {
      for (int t = 0; t < s.occasions(); ++t) {
        x_all.row(row) = s.x.row(t);
        y_all(row) = s.outcomes[static_cast<std::size_t>(t)];
        ++row;
      }
    }
  }
  const LogisticFit pooled = logistic_irls(x_all, y_all, names);
  double gamma0 = 0.0;
  {
    NeumaierSum num;
    long long pairs = 0;
    for (const auto& s : dataset) {
      for (int t = 0; t + 1 < s.occasions(); ++t) {
        if (std::fabs(s.times[static_cast<std::size_t>(t + 1)] -
                      s.times[static_cast<std::size_t>(t)] - 1.0) > 1e-9) {
          continue;
        }
        const double p1 = expit(s.x.row(t).dot(pooled.beta));
        const double p2 = expit(s.x.row(t + 1).dot(pooled.beta));
        num.add(standardized_residual(s.outcomes[static_cast<std::size_t>(t)], p1) *
                standardized_residual(s.outcomes[static_cast<std::size_t>(t + 1)], p2));
        ++pairs;
      }
    }
    if (pairs > 0) gamma0 = std::clamp(num.value() / pairs, -0.3, 0.3);
  }

  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(p);
  theta0.head(j) = pooled.beta;
  theta0(j) = std::atanh(gamma0);

  // Back off toward independence until the start is feasible.
  double shrink = 1.0;
  while (!std::isfinite(objective(theta0)) && shrink > 1e-4) {
    shrink *= 0.5;
    theta0.head(j) = pooled.beta * shrink;
    theta0(j) = std::atanh(gamma0 * shrink);
  }
  if (!std::isfinite(objective(theta0))) {
    throw NumericError("fit_bahadur_ml: no feasible starting point found");
  }

  NewtonOptions nopt;
  nopt.max_iterations = options.max_iterations;
  nopt.step_tol = options.step_tol;
  nopt.grad_tol = options.grad_tol;
  const NewtonReport rep = newton_maximize(objective, theta0, nopt);

  BahadurFit fit;
  fit.n_free_parameters = p;
  fit.converged = rep.converged;
  fit.iterations = rep.iterations;
  fit.theta = rep.x;
  fit.gamma3_free = g3_free;
  fit.gamma4_free = g4_free;
  BahadurParams params;
  unpack(rep.x, params);
  fit.beta = params.beta;
  fit.gamma = params.gamma;
  fit.gamma3 = params.gamma3;
  fit.gamma4 = params.gamma4;
  fit.loglik = loglik_and_min_cell(params, fit.min_cell);
  fit.aic = -2.0 * fit.loglik + 2.0 * p;
  for (const auto& note : rep.notes) fit.diagnostics.push_back(note);

  fit.parameter_names.clear();
  for (int i = 0; i < j; ++i) {
    fit.parameter_names.push_back(
        i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)]
                                           : "beta" + std::to_string(i));
  }
  fit.parameter_names.push_back("gamma");
  if (g3_free) fit.parameter_names.push_back("gamma3");
  if (g4_free) fit.parameter_names.push_back("gamma4");

  // A tiny minimum cell means the estimate sits against the validity
  // boundary (the data-dependent cap on gamma the barrier enforces).
  fit.boundary_active = fit.min_cell < 1e-3;
  if (fit.boundary_active) {
    fit.diagnostics.push_back(
        "estimate is near the validity boundary (min cell probability " +
        std::to_string(fit.min_cell) + ")");
  }

  // Observed information of the unpenalized likelihood, natural scale.
  auto loglik_only = [&](const Eigen::VectorXd& th) -> double {
    BahadurParams prm;
    unpack(th, prm);
    double mc = 1.0;
    return loglik_and_min_cell(prm, mc);
  };
  const Eigen::MatrixXd h = fd_hessian_central(loglik_only, rep.x, 1e-4);
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(-h));
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(p, p));
    cov = 0.5 * (cov + cov.transpose());
    Eigen::VectorXd jac = Eigen::VectorXd::Ones(p);
    jac(j) = 1.0 - params.gamma * params.gamma;
    fit.covariance = jac.asDiagonal() * cov * jac.asDiagonal();
    fit.se = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.se_valid = true;
  } else {
    fit.covariance = Eigen::MatrixXd::Constant(
        p, p, std::numeric_limits<double>::quiet_NaN());
    fit.se =
        Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
    fit.se_valid = false;
    fit.diagnostics.push_back(
        "observed information not positive definite; standard errors "
        "unavailable");
  }
  return fit;
}

}  // namespace bglmm
