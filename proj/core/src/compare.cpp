#include "bglmm/compare.hpp"

#include <cmath>
#include <limits>

#include "bglmm/copula.hpp"

namespace bglmm {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

EstimatorSummary from_bridge(const std::string& label, const FitResult& fit) {
  EstimatorSummary s;
  s.estimator = label;
  s.beta = fit.beta;
  s.se = fit.se.head(fit.beta.size());
  s.converged = fit.converged;
  s.loglik = fit.loglik;
  s.aic = fit.aic;
  s.extra["phi"] = fit.phi;
  if (fit.assoc) {
    s.extra[fit.structure == AssociationKind::AR1Tau ? "tau" : "rho"] =
        *fit.assoc;
  }
  s.diagnostics = fit.diagnostics;
  return s;
}
}  // namespace

CompareReport run_compare(const Dataset& dataset,
                          const std::vector<std::string>& names,
                          const CompareOptions& options) {
  CompareReport report;
  report.coefficient_names = names;

  FitOptions bridge = options.bridge;
  bridge.seed = options.seed;

  report.estimators.push_back(from_bridge(
      "bridge-single",
      fit_bridge_model(dataset, AssociationStructure::single_intercept(),
                       bridge, names)));
  report.estimators.push_back(from_bridge(
      "bridge-ar1-rho",
      fit_bridge_model(dataset, AssociationStructure::ar1_rho(0.3), bridge,
                       names)));
  report.estimators.push_back(from_bridge(
      "bridge-ar1-tau",
      fit_bridge_model(dataset, AssociationStructure::ar1_tau(0.3), bridge,
                       names)));

  {
    const BahadurFit fit = fit_bahadur_ml(dataset, options.bahadur, names);
    EstimatorSummary s;
    s.estimator = "bahadur";
    s.beta = fit.beta;
    s.se = fit.se.head(fit.beta.size());
    s.converged = fit.converged;
    s.loglik = fit.loglik;
    s.aic = fit.aic;
    s.extra["gamma"] = fit.gamma;
    if (fit.gamma3_free) s.extra["gamma3"] = fit.gamma3;
    if (fit.gamma4_free) s.extra["gamma4"] = fit.gamma4;
    s.diagnostics = fit.diagnostics;
    report.estimators.push_back(std::move(s));
  }
  {
    const GeeResult fit = fit_gee(dataset, options.gee, names);
    EstimatorSummary s;
    s.estimator = "gee";
    s.beta = fit.beta;
    s.se = fit.se_sandwich;
    s.converged = fit.converged;
    s.loglik = kNaN;
    s.aic = kNaN;
    s.extra["rho"] = fit.rho;
    s.diagnostics = fit.diagnostics;
    report.estimators.push_back(std::move(s));
  }

  const int p = static_cast<int>(names.size());
  report.max_pairwise_z.assign(static_cast<std::size_t>(p), 0.0);
  for (std::size_t a = 0; a < report.estimators.size(); ++a) {
    for (std::size_t b = a + 1; b < report.estimators.size(); ++b) {
      const auto& ea = report.estimators[a];
      const auto& eb = report.estimators[b];
      for (int c = 0; c < p; ++c) {
        const double joint =
            std::sqrt(ea.se(c) * ea.se(c) + eb.se(c) * eb.se(c));
        if (!(joint > 0.0)) continue;
        const double z = std::fabs(ea.beta(c) - eb.beta(c)) / joint;
        report.max_pairwise_z[static_cast<std::size_t>(c)] =
            std::max(report.max_pairwise_z[static_cast<std::size_t>(c)], z);
      }
    }
  }
  return report;
}

}  // namespace bglmm
