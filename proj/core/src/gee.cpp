#include "bglmm/gee.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "bglmm/bahadur.hpp"
#include "bglmm/errors.hpp"
#include "bglmm/glm.hpp"
#include "bglmm/stats.hpp"

namespace bglmm {

namespace {

Eigen::MatrixXd working_correlation(const SubjectRecord& subject, double rho) {
  const int m = subject.occasions();
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(m, m);
  for (int s = 0; s < m; ++s) {
    for (int t = s + 1; t < m; ++t) {
      const double lag = std::fabs(subject.times[static_cast<std::size_t>(t)] -
                                   subject.times[static_cast<std::size_t>(s)]);
      const double v = std::pow(std::fabs(rho), lag) *
                       (rho < 0.0 && std::llround(lag) % 2 != 0 ? -1.0 : 1.0);
      r(s, t) = v;
      r(t, s) = v;
    }
  }
  return r;
}

}  // namespace

GeeResult fit_gee(const Dataset& dataset, const GeeOptions& options,
                  const std::vector<std::string>& names) {
  validate_dataset(dataset);
  const DatasetSummary sum = summarize(dataset);
  const int j = sum.n_covariates;
  if (j == 0) throw DesignError("fit_gee: empty design");

  // Pooled stack for the rank check and starting values.
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
  check_full_rank(x_all, names);

  GeeResult out;
  out.beta = Eigen::VectorXd::Zero(j);
  out.rho = options.fix_rho.value_or(0.0);

  Eigen::MatrixXd bread(j, j);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    out.iterations = iter;

    // Fisher scoring step for beta at the current working rho.
    bread.setZero();
    Eigen::VectorXd score = Eigen::VectorXd::Zero(j);
    for (const auto& subj : dataset) {
      const int m = subj.occasions();
      Eigen::VectorXd mu(m), sd(m), resid(m);
      for (int t = 0; t < m; ++t) {
        const double eta = subj.x.row(t).dot(out.beta);
        mu(t) = expit(eta);
        sd(t) = std::sqrt(mu(t) * (1.0 - mu(t)));
        resid(t) = subj.outcomes[static_cast<std::size_t>(t)] - mu(t);
      }
      const Eigen::MatrixXd r = working_correlation(subj, out.rho);
      Eigen::LLT<Eigen::MatrixXd> llt(r);
      if (llt.info() != Eigen::Success) {
        throw NumericError("fit_gee: working correlation not positive definite");
      }
      // D = A X with A = diag(mu (1-mu)); V^{-1} = A^{-1/2} R^{-1} A^{-1/2}.
      // D' V^{-1} = X' A^{1/2} R^{-1} A^{-1/2}... assembled via scaled rows.
      Eigen::MatrixXd xs(m, j);
      for (int t = 0; t < m; ++t) xs.row(t) = subj.x.row(t) * sd(t);
      const Eigen::VectorXd rs = llt.solve(resid.cwiseQuotient(sd));
      score += xs.transpose() * rs;
      bread += xs.transpose() * llt.solve(xs);
    }
    Eigen::LLT<Eigen::MatrixXd> bread_llt(bread);
    if (bread_llt.info() != Eigen::Success) {
      throw NumericError("fit_gee: singular weighted information");
    }
    const Eigen::VectorXd delta = bread_llt.solve(score);
    out.beta += delta;

    // Moment update of rho from lag-one standardized residual products,
    // divided by (number of pairs - number of regression parameters).
    if (!options.fix_rho) {
      NeumaierSum num;
      long long pairs = 0;
      for (const auto& subj : dataset) {
        const int m = subj.occasions();
        for (int t = 0; t + 1 < m; ++t) {
          const double lag = subj.times[static_cast<std::size_t>(t + 1)] -
                             subj.times[static_cast<std::size_t>(t)];
          if (std::fabs(lag - 1.0) > 1e-9) continue;
          const double p1 = expit(subj.x.row(t).dot(out.beta));
          const double p2 = expit(subj.x.row(t + 1).dot(out.beta));
          num.add(standardized_residual(
                      subj.outcomes[static_cast<std::size_t>(t)], p1) *
                  standardized_residual(
                      subj.outcomes[static_cast<std::size_t>(t + 1)], p2));
          ++pairs;
        }
      }
      if (pairs <= j) {
        throw DataError(
            "fit_gee: not enough adjacent observation pairs to estimate the "
            "AR(1) working parameter");
      }
      out.rho = std::clamp(num.value() / static_cast<double>(pairs - j),
                           -0.99, 0.99);
    }

    if (delta.lpNorm<Eigen::Infinity>() < options.tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    out.diagnostics.push_back("did not converge within " +
                              std::to_string(options.max_iterations) +
                              " iterations");
  }

  // Final estimating function, bread and meat at the solution.
  bread.setZero();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(j, j);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(j);
  for (const auto& subj : dataset) {
    const int m = subj.occasions();
    Eigen::VectorXd mu(m), sd(m), resid(m);
    for (int t = 0; t < m; ++t) {
      const double eta = subj.x.row(t).dot(out.beta);
      mu(t) = expit(eta);
      sd(t) = std::sqrt(mu(t) * (1.0 - mu(t)));
      resid(t) = subj.outcomes[static_cast<std::size_t>(t)] - mu(t);
    }
    const Eigen::MatrixXd r = working_correlation(subj, out.rho);
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success) {
      throw NumericError("fit_gee: working correlation not positive definite");
    }
    Eigen::MatrixXd xs(m, j);
    for (int t = 0; t < m; ++t) xs.row(t) = subj.x.row(t) * sd(t);
    const Eigen::VectorXd u = xs.transpose() * llt.solve(resid.cwiseQuotient(sd));
    score += u;
    meat += u * u.transpose();
    bread += xs.transpose() * llt.solve(xs);
  }
  out.estimating_fn_norm = score.lpNorm<Eigen::Infinity>();

  Eigen::LLT<Eigen::MatrixXd> bread_llt(bread);
  if (bread_llt.info() != Eigen::Success) {
    throw NumericError("fit_gee: singular weighted information at the solution");
  }
  const Eigen::MatrixXd bread_inv =
      bread_llt.solve(Eigen::MatrixXd::Identity(j, j));
  out.cov_model = 0.5 * (bread_inv + bread_inv.transpose());
  Eigen::MatrixXd sandwich = bread_inv * meat * bread_inv;
  out.cov_sandwich = 0.5 * (sandwich + sandwich.transpose());
  out.se_model = out.cov_model.diagonal().cwiseMax(0.0).cwiseSqrt();
  out.se_sandwich = out.cov_sandwich.diagonal().cwiseMax(0.0).cwiseSqrt();

  out.parameter_names.clear();
  for (int i = 0; i < j; ++i) {
    out.parameter_names.push_back(
        i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)]
                                           : "beta" + std::to_string(i));
  }
  return out;
}

}  // namespace bglmm
