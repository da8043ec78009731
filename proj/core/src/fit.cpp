#include "bglmm/fit.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bglmm/errors.hpp"
#include "bglmm/glm.hpp"
#include "bglmm/optim.hpp"
#include "bglmm/stats.hpp"

namespace bglmm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

int DrawSchedule::draws_at(int iteration) const {
  int d = stages.front().draws;
  for (const auto& s : stages) {
    if (iteration >= s.first_iteration) d = s.draws;
  }
  return d;
}

int DrawSchedule::max_draws() const { return stages.back().draws; }

int DrawSchedule::next_stage_start(int iteration) const {
  for (const auto& s : stages) {
    if (s.first_iteration > iteration) return s.first_iteration;
  }
  return 0;
}

void DrawSchedule::validate() const {
  if (stages.empty()) throw std::domain_error("draw schedule: no stages");
  if (stages.front().first_iteration != 1) {
    throw std::domain_error("draw schedule: first stage must start at iteration 1");
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].draws < 1) {
      throw std::domain_error("draw schedule: draws must be positive");
    }
    if (i > 0) {
      if (stages[i].first_iteration <= stages[i - 1].first_iteration) {
        throw std::domain_error("draw schedule: stages must be increasing");
      }
      if (stages[i].draws < stages[i - 1].draws) {
        throw std::domain_error("draw schedule: draw counts must be nondecreasing");
      }
    }
  }
}

DrawSchedule DrawSchedule::parse(const std::string& text) {
  DrawSchedule out;
  out.stages.clear();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) {
        // Bare number: single flat stage.
        out.stages.push_back({1, std::stoi(item)});
      } else {
        out.stages.push_back({std::stoi(item.substr(0, colon)),
                              std::stoi(item.substr(colon + 1))});
      }
    } catch (const std::exception&) {
      throw std::domain_error("draw schedule: cannot parse '" + item + "'");
    }
  }
  out.validate();
  return out;
}

std::string DrawSchedule::to_string() const {
  std::string out;
  for (const auto& s : stages) {
    if (!out.empty()) out += ",";
    out += std::to_string(s.first_iteration) + ":" + std::to_string(s.draws);
  }
  return out;
}

IdentifiabilityCheck check_identifiability(int m_max,
                                           const AssociationStructure& structure,
                                           bool phi_free) {
  IdentifiabilityCheck out;
  if (!structure.has_parameter()) return out;
  if (m_max <= 1) {
    out.ok = false;
    out.violation =
        "an association parameter requires at least two occasions per subject "
        "(every subject has a single observation)";
    return out;
  }
  if (m_max == 2 && phi_free) {
    out.ok = false;
    out.violation =
        "with at most two occasions the model is not identified when phi and "
        "the association parameter are both free; fix phi (--fix-phi) or use "
        "the single-intercept structure";
  }
  return out;
}

namespace {

struct ParameterLayout {
  int n_beta = 0;
  bool phi_free = true;
  double phi_fixed_value = 0.0;
  bool assoc_free = false;
  bool assoc_positive_only = false;  // used with non-integer lags
  AssociationKind kind = AssociationKind::SingleIntercept;

  int size() const { return n_beta + (phi_free ? 1 : 0) + (assoc_free ? 1 : 0); }
  int phi_index() const { return n_beta; }
  int assoc_index() const { return n_beta + (phi_free ? 1 : 0); }

  double phi_of(const Eigen::VectorXd& theta) const {
    if (!phi_free) return phi_fixed_value;
    return std::clamp(expit(theta(phi_index())), BridgeParam::kMin,
                      BridgeParam::kMax);
  }

  double assoc_of(const Eigen::VectorXd& theta) const {
    const double t = theta(assoc_index());
    const double a = assoc_positive_only ? expit(t) : std::tanh(t);
    return std::clamp(a, -1.0 + 1e-9, 1.0 - 1e-9);
  }

  BridgeModelSpec spec_of(const Eigen::VectorXd& theta) const {
    BridgeModelSpec spec{theta.head(n_beta), BridgeParam(phi_of(theta)),
                         AssociationStructure{kind, 0.0}};
    if (assoc_free) spec.structure.param = assoc_of(theta);
    return spec;
  }

  // Derivatives of the natural-scale parameters in the free ones (diagonal).
  Eigen::VectorXd natural_jacobian(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd j = Eigen::VectorXd::Ones(size());
    if (phi_free) {
      const double phi = phi_of(theta);
      j(phi_index()) = phi * (1.0 - phi);
    }
    if (assoc_free) {
      const double a = assoc_of(theta);
      j(assoc_index()) = assoc_positive_only ? a * (1.0 - a) : 1.0 - a * a;
    }
    return j;
  }
};

bool has_non_integer_lag(const Dataset& dataset) {
  for (const auto& s : dataset) {
    for (std::size_t i = 1; i < s.times.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const double lag = s.times[i] - s.times[j];
        if (std::fabs(lag - std::round(lag)) >= 1e-9) return true;
      }
    }
  }
  return false;
}

}  // namespace

Eigen::VectorXd initial_values(const Dataset& dataset,
                               const AssociationStructure& structure,
                               const FitOptions& options,
                               const std::vector<std::string>& names,
                               std::vector<std::string>* notes) {
  validate_dataset(dataset);
  const DatasetSummary sum = summarize(dataset);
  const int j = sum.n_covariates;

  ParameterLayout layout;
  layout.n_beta = j;
  layout.phi_free = !options.fix_phi.has_value();
  layout.assoc_free = structure.has_parameter();
  layout.assoc_positive_only = layout.assoc_free && has_non_integer_lag(dataset);
  layout.kind = structure.kind;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout.size());
  if (j > 0) {
    Eigen::MatrixXd x(sum.n_observations, j);
    Eigen::VectorXd y(sum.n_observations);
    int row = 0;
    for (const auto& s : dataset) {
      for (int t = 0; t < s.occasions(); ++t) {
        x.row(row) = s.x.row(t);
        y(row) = s.outcomes[static_cast<std::size_t>(t)];
        ++row;
      }
    }
    const LogisticFit pooled = logistic_irls(x, y, names);
    if (pooled.separation && notes) {
      notes->push_back(
          "pooled logistic starting values hit separation; coefficients capped");
    }
    theta.head(j) = pooled.beta;
  }
  if (layout.phi_free) theta(layout.phi_index()) = 0.0;  // logit(0.5)
  if (layout.assoc_free) {
    const double a0 = options.initial_assoc;
    theta(layout.assoc_index()) =
        layout.assoc_positive_only ? logit(a0) : std::atanh(a0);
  }
  return theta;
}

double aic(double loglik, int n_free_parameters) {
  return -2.0 * loglik + 2.0 * n_free_parameters;
}

FitResult fit_bridge_model(const Dataset& dataset,
                           const AssociationStructure& structure,
                           const FitOptions& options,
                           const std::vector<std::string>& names) {
  validate_dataset(dataset);
  options.schedule.validate();
  const DatasetSummary sum = summarize(dataset);

  if (options.fix_phi) {
    (void)BridgeParam(*options.fix_phi);  // range check
  }
  const IdentifiabilityCheck id =
      check_identifiability(sum.m_max, structure, !options.fix_phi.has_value());
  if (!id.ok) throw DesignError("model not identified: " + id.violation);

  ParameterLayout layout;
  layout.n_beta = sum.n_covariates;
  layout.phi_free = !options.fix_phi.has_value();
  layout.phi_fixed_value = options.fix_phi.value_or(0.0);
  layout.assoc_free = structure.has_parameter();
  layout.assoc_positive_only = layout.assoc_free && has_non_integer_lag(dataset);
  layout.kind = structure.kind;
  const int p = layout.size();
  if (p == 0) throw DesignError("no free parameters to estimate");

  FitResult result;
  result.seed = options.seed;
  result.structure = structure.kind;
  result.phi_fixed = !layout.phi_free;
  result.n_free_parameters = p;
  if (layout.assoc_positive_only) {
    result.diagnostics.push_back(
        "non-integer time lags present; association parameter restricted to "
        "(0,1)");
  }

  Eigen::VectorXd theta =
      initial_values(dataset, structure, options, names, &result.diagnostics);

  const CrnCache cache(dataset, options.seed, options.schedule.max_draws(),
                       structure.kind == AssociationKind::SingleIntercept);
  int draws = options.schedule.draws_at(1);
  auto objective = [&](const Eigen::VectorXd& th) -> double {
    try {
      const BridgeModelSpec spec = layout.spec_of(th);
      return dataset_loglik_cached(dataset, spec,
                                   {draws, options.seed,
                                    options.proposal_inflation,
                                    options.threads},
                                   cache);
    } catch (const NumericError&) {
      return kNegInf;
    } catch (const StructureError&) {
      return kNegInf;
    } catch (const std::domain_error&) {
      return kNegInf;
    }
  };

  double f = objective(theta);
  if (!std::isfinite(f)) {
    throw NumericError("fit_bridge_model: likelihood not finite at the "
                       "starting values");
  }

  const int max_draws = options.schedule.max_draws();
  int iter = 1;
  bool converged = false;

  // A transformed parameter whose natural value has saturated at its clamp
  // leaves a flat direction; such coordinates are dropped from the Newton
  // step while the outward pressure lasts.
  auto boundary_frozen = [&](const Eigen::VectorXd& th,
                             const Eigen::VectorXd& grad,
                             int i) -> bool {
    double threshold = 0.0;
    if (layout.phi_free && i == layout.phi_index()) {
      threshold = 13.8;  // expit(13.8) ~ 1 - 1e-6, the BridgeParam clamp
    } else if (layout.assoc_free && i == layout.assoc_index()) {
      threshold = layout.assoc_positive_only ? 13.8 : 10.4;  // |tanh| ~ 1-1e-9
    } else {
      return false;
    }
    return (th(i) >= threshold && grad(i) >= -1e-8) ||
           (th(i) <= -threshold && grad(i) <= 1e-8);
  };
  std::vector<int> frozen_at_end;

  while (iter <= options.max_outer_iterations) {
    const int stage_draws = options.schedule.draws_at(iter);
    if (stage_draws != draws) {
      draws = stage_draws;
      f = objective(theta);
    }
    Eigen::VectorXd grad = fd_gradient(objective, theta, 1e-5);
    std::vector<int> active;
    frozen_at_end.clear();
    for (int i = 0; i < p; ++i) {
      if (boundary_frozen(theta, grad, i)) {
        grad(i) = 0.0;
        frozen_at_end.push_back(i);
      } else {
        active.push_back(i);
      }
    }
    const double grad_inf = grad.lpNorm<Eigen::Infinity>();

    // Early stages only position the search for the final-draw surface, so
    // they exit at a 10x looser tolerance; the convergence flag itself is
    // only ever granted at the largest draw count.
    const bool final_stage = draws == max_draws;
    const double stage_grad_tol =
        final_stage ? options.grad_tol : 10.0 * options.grad_tol;
    const double stage_step_tol =
        final_stage ? options.step_tol : 10.0 * options.step_tol;

    if (grad_inf <= stage_grad_tol) {
      result.trace.push_back({iter, draws, f, 0.0, grad_inf});
      if (final_stage) {
        converged = true;
        break;
      }
      const int next = options.schedule.next_stage_start(iter);
      iter = next > iter ? next : iter + 1;
      continue;
    }

    if (active.empty()) {
      result.trace.push_back({iter, draws, f, 0.0, grad_inf});
      converged = draws == max_draws;
      break;
    }
    const Eigen::MatrixXd hessian =
        fd_hessian_forward(objective, theta, f, options.fd_step);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(p);
    try {
      if (static_cast<int>(active.size()) == p) {
        delta = ascent_direction(hessian, grad);
      } else {
        const int na = static_cast<int>(active.size());
        Eigen::MatrixXd ha(na, na);
        Eigen::VectorXd ga(na);
        for (int r = 0; r < na; ++r) {
          ga(r) = grad(active[static_cast<std::size_t>(r)]);
          for (int c = 0; c < na; ++c) {
            ha(r, c) = hessian(active[static_cast<std::size_t>(r)],
                               active[static_cast<std::size_t>(c)]);
          }
        }
        const Eigen::VectorXd da = ascent_direction(ha, ga);
        for (int r = 0; r < na; ++r) {
          delta(active[static_cast<std::size_t>(r)]) = da(r);
        }
      }
    } catch (const NumericError&) {
      result.diagnostics.push_back("Hessian breakdown at iteration " +
                                   std::to_string(iter));
      break;
    }

    double step = 1.0;
    bool accepted = false;
    double f_new = kNegInf;
    Eigen::VectorXd theta_new;
    for (int halvings = 0; halvings <= 10; ++halvings) {
      theta_new = theta + step * delta;
      f_new = objective(theta_new);
      if (std::isfinite(f_new) && f_new >= f - 1e-12) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.diagnostics.push_back("line search exhausted at iteration " +
                                   std::to_string(iter));
      break;
    }

    const double rel_step =
        (theta_new - theta).norm() / std::max(1.0, theta.norm());
    theta = theta_new;
    f = f_new;
    result.trace.push_back({iter, draws, f, rel_step, grad_inf});

    if (rel_step <= stage_step_tol) {
      if (final_stage) {
        converged = true;
        break;
      }
      const int next = options.schedule.next_stage_start(iter);
      iter = next > iter ? next : iter + 1;
      continue;
    }
    ++iter;
  }

  result.converged = converged;
  result.iterations = result.trace.empty() ? 0 : result.trace.back().iteration;
  if (!converged) {
    result.diagnostics.push_back(
        "did not converge within " + std::to_string(options.max_outer_iterations) +
        " iterations");
  }

  // Final evaluation and curvature at the largest draw count.
  draws = max_draws;
  result.theta = theta;
  result.loglik = objective(theta);
  result.aic = aic(result.loglik, p);

  const BridgeModelSpec final_spec = layout.spec_of(theta);
  result.beta = final_spec.beta;
  result.phi = final_spec.phi.value();
  if (layout.assoc_free) result.assoc = final_spec.structure.param;

  result.parameter_names.clear();
  for (int i = 0; i < layout.n_beta; ++i) {
    result.parameter_names.push_back(
        i < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(i)]
                                           : "beta" + std::to_string(i));
  }
  if (layout.phi_free) result.parameter_names.push_back("phi");
  if (layout.assoc_free) {
    result.parameter_names.push_back(
        structure.kind == AssociationKind::AR1Tau ? "tau" : "rho");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  result.covariance = Eigen::MatrixXd::Constant(p, p, nan);
  result.se = Eigen::VectorXd::Constant(p, nan);

  std::vector<int> active;
  for (int i = 0; i < p; ++i) {
    if (std::find(frozen_at_end.begin(), frozen_at_end.end(), i) ==
        frozen_at_end.end()) {
      active.push_back(i);
    }
  }
  for (int i : frozen_at_end) {
    result.diagnostics.push_back(
        "parameter '" + result.parameter_names[static_cast<std::size_t>(i)] +
        "' pinned at its boundary; no standard error reported");
  }
  const int na = static_cast<int>(active.size());
  if (na > 0) {
    Eigen::VectorXd theta_a(na);
    for (int r = 0; r < na; ++r) theta_a(r) = theta(active[static_cast<std::size_t>(r)]);
    auto objective_active = [&](const Eigen::VectorXd& ta) -> double {
      Eigen::VectorXd full = theta;
      for (int r = 0; r < na; ++r) full(active[static_cast<std::size_t>(r)]) = ta(r);
      return objective(full);
    };
    const Eigen::MatrixXd h_final =
        fd_hessian_central(objective_active, theta_a, options.fd_step);
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(-h_final));
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd cov_free = llt.solve(Eigen::MatrixXd::Identity(na, na));
      cov_free = 0.5 * (cov_free + cov_free.transpose());
      const Eigen::VectorXd jac = layout.natural_jacobian(theta);
      for (int r = 0; r < na; ++r) {
        for (int c = 0; c < na; ++c) {
          const int i = active[static_cast<std::size_t>(r)];
          const int j = active[static_cast<std::size_t>(c)];
          result.covariance(i, j) = jac(i) * cov_free(r, c) * jac(j);
        }
      }
      for (int r = 0; r < na; ++r) {
        const int i = active[static_cast<std::size_t>(r)];
        result.se(i) = std::sqrt(std::max(0.0, result.covariance(i, i)));
      }
      result.se_valid = true;
    } else {
      result.se_valid = false;
      result.diagnostics.push_back(
          "observed information not positive definite; standard errors "
          "unavailable");
    }
  } else {
    result.se_valid = false;
  }
  return result;
}

}  // namespace bglmm
