#include "bglmm/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "bglmm/normal.hpp"
#include "bglmm/version.hpp"

namespace bglmm {

namespace {

using nlohmann::json;

json context_json(const RunContext& ctx) {
  json j;
  j["version"] = kVersion;
  j["schema"] = kOutputSchemaVersion;
  j["command"] = ctx.command;
  j["seed"] = ctx.seed;
  j["inputs"] = ctx.inputs;
  j["options"] = ctx.options;
  return j;
}

// NaN/inf are not representable in JSON; emit null.
json number_or_null(double v) {
  if (std::isfinite(v)) return json(v);
  return json(nullptr);
}

json coefficient_table(const std::vector<std::string>& names,
                       const Eigen::VectorXd& beta, const Eigen::VectorXd& se) {
  json j = json::object();
  for (int i = 0; i < beta.size(); ++i) {
    json row;
    row["estimate"] = number_or_null(beta(i));
    const double s = i < se.size() ? se(i) : NAN;
    row["se"] = number_or_null(s);
    if (std::isfinite(s) && s > 0.0) {
      const double z = beta(i) / s;
      row["z"] = number_or_null(z);
      row["p"] = number_or_null(2.0 * normal_cdf(-std::fabs(z)));
    } else {
      row["z"] = nullptr;
      row["p"] = nullptr;
    }
    j[names[static_cast<std::size_t>(i)]] = row;
  }
  return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(number_or_null(m(i, c)));
    rows.push_back(row);
  }
  return rows;
}

std::string fmt(double v, int width = 12) {
  char buf[64];
  if (std::isfinite(v)) {
    std::snprintf(buf, sizeof(buf), "%*.*g", width, 10, v);
  } else {
    std::snprintf(buf, sizeof(buf), "%*s", width, "--");
  }
  return buf;
}

}  // namespace

std::string fit_result_json(const FitResult& fit, const RunContext& ctx) {
  json j = context_json(ctx);
  j["model"]["structure"] = [&] {
    switch (fit.structure) {
      case AssociationKind::SingleIntercept: return "single";
      case AssociationKind::AR1Rho: return "ar1-rho";
      case AssociationKind::AR1Tau: return "ar1-tau";
    }
    return "?";
  }();
  j["model"]["phi_fixed"] = fit.phi_fixed;
  j["fit"]["converged"] = fit.converged;
  j["fit"]["iterations"] = fit.iterations;
  j["fit"]["loglik"] = number_or_null(fit.loglik);
  j["fit"]["aic"] = number_or_null(fit.aic);
  j["fit"]["n_free_parameters"] = fit.n_free_parameters;
  j["fit"]["se_valid"] = fit.se_valid;

  const int n_beta = static_cast<int>(fit.beta.size());
  std::vector<std::string> beta_names(
      fit.parameter_names.begin(), fit.parameter_names.begin() + n_beta);
  j["fit"]["coefficients"] = coefficient_table(beta_names, fit.beta,
                                               fit.se.head(n_beta));
  {
    json phi;
    phi["estimate"] = number_or_null(fit.phi);
    if (!fit.phi_fixed && fit.se_valid) {
      // phi follows the betas in the free-parameter order.
      phi["se"] = number_or_null(fit.se(n_beta));
    } else {
      phi["se"] = nullptr;
    }
    phi["fixed"] = fit.phi_fixed;
    j["fit"]["phi"] = phi;
  }
  if (fit.assoc) {
    json assoc;
    assoc["kind"] = fit.structure == AssociationKind::AR1Tau ? "tau" : "rho";
    assoc["estimate"] = number_or_null(*fit.assoc);
    const int idx = n_beta + (fit.phi_fixed ? 0 : 1);
    assoc["se"] = fit.se_valid ? number_or_null(fit.se(idx)) : json(nullptr);
    j["fit"]["assoc"] = assoc;
  }
  j["fit"]["conditional_coefficients"] = [&] {
    json out = json::object();
    const Eigen::VectorXd cond = fit.conditional_beta();
    for (int i = 0; i < cond.size(); ++i) {
      out[beta_names[static_cast<std::size_t>(i)]] = number_or_null(cond(i));
    }
    return out;
  }();
  j["fit"]["covariance"] = matrix_json(fit.covariance);
  j["fit"]["parameter_names"] = fit.parameter_names;
  j["fit"]["diagnostics"] = fit.diagnostics;
  return j.dump(2) + "\n";
}

std::string bahadur_fit_json(const BahadurFit& fit, const RunContext& ctx) {
  json j = context_json(ctx);
  j["fit"]["converged"] = fit.converged;
  j["fit"]["iterations"] = fit.iterations;
  j["fit"]["loglik"] = number_or_null(fit.loglik);
  j["fit"]["aic"] = number_or_null(fit.aic);
  j["fit"]["n_free_parameters"] = fit.n_free_parameters;
  j["fit"]["se_valid"] = fit.se_valid;
  const int n_beta = static_cast<int>(fit.beta.size());
  std::vector<std::string> beta_names(
      fit.parameter_names.begin(), fit.parameter_names.begin() + n_beta);
  j["fit"]["coefficients"] =
      coefficient_table(beta_names, fit.beta, fit.se.head(n_beta));
  j["fit"]["gamma"]["estimate"] = number_or_null(fit.gamma);
  j["fit"]["gamma"]["se"] =
      fit.se_valid ? number_or_null(fit.se(n_beta)) : json(nullptr);
  if (fit.gamma3_free) j["fit"]["gamma3"] = number_or_null(fit.gamma3);
  if (fit.gamma4_free) j["fit"]["gamma4"] = number_or_null(fit.gamma4);
  j["fit"]["min_cell"] = number_or_null(fit.min_cell);
  j["fit"]["boundary_active"] = fit.boundary_active;
  j["fit"]["diagnostics"] = fit.diagnostics;
  return j.dump(2) + "\n";
}

std::string gee_result_json(const GeeResult& fit, const RunContext& ctx) {
  json j = context_json(ctx);
  j["fit"]["converged"] = fit.converged;
  j["fit"]["iterations"] = fit.iterations;
  j["fit"]["rho"] = number_or_null(fit.rho);
  j["fit"]["estimating_fn_norm"] = number_or_null(fit.estimating_fn_norm);
  j["fit"]["coefficients"] =
      coefficient_table(fit.parameter_names, fit.beta, fit.se_sandwich);
  j["fit"]["se_model_based"] = [&] {
    json out = json::object();
    for (int i = 0; i < fit.beta.size(); ++i) {
      out[fit.parameter_names[static_cast<std::size_t>(i)]] =
          number_or_null(fit.se_model(i));
    }
    return out;
  }();
  j["fit"]["covariance_sandwich"] = matrix_json(fit.cov_sandwich);
  j["fit"]["covariance_model"] = matrix_json(fit.cov_model);
  j["fit"]["diagnostics"] = fit.diagnostics;
  return j.dump(2) + "\n";
}

std::string simulation_report_json(const SimulationReport& report,
                                   const RunContext& ctx) {
  json j = context_json(ctx);
  j["scenario"]["true_model"] = true_model_name(report.config.true_model);
  j["scenario"]["n_subjects"] = report.config.n_subjects;
  j["scenario"]["occasions"] = report.config.occasions;
  j["scenario"]["replications"] = report.config.replications;
  j["scenario"]["base_seed"] = report.config.base_seed;
  j["scenario"]["beta"] = {report.config.beta(0), report.config.beta(1),
                           report.config.beta(2)};
  if (report.config.true_model == TrueModel::Bridge) {
    j["scenario"]["phi"] = report.config.phi;
  }
  json cells = json::array();
  for (const auto& cell : report.cells) {
    json c;
    c["true_model"] = true_model_name(cell.true_model);
    c["assoc"] = cell.assoc;
    c["estimator"] = estimator_name(cell.estimator);
    c["n_failed"] = cell.n_failed;
    c["n_replications"] = cell.n_replications;
    c["unreliable"] = cell.unreliable;
    json coef = json::object();
    for (const auto& [name, r] : cell.coefficients) {
      json v;
      v["mean"] = number_or_null(r.mean);
      v["bias"] = number_or_null(r.bias);
      v["mse"] = number_or_null(r.mse);
      v["variance"] = number_or_null(r.variance);
      v["coverage"] = number_or_null(r.coverage);
      v["mc_se_mean"] = number_or_null(r.mc_se_mean);
      v["mc_se_mse"] = number_or_null(r.mc_se_mse);
      v["mc_se_coverage"] = number_or_null(r.mc_se_coverage);
      v["n_used"] = r.n_used;
      coef[name] = v;
    }
    c["coefficients"] = coef;
    cells.push_back(c);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string tau_curve_json(
    const std::map<double, std::vector<TauCurvePoint>>& curves_by_phi,
    const RunContext& ctx) {
  json j = context_json(ctx);
  json curves = json::array();
  for (const auto& [phi, points] : curves_by_phi) {
    json c;
    c["phi"] = phi;
    json pts = json::array();
    for (const auto& p : points) {
      pts.push_back({{"tau_b", p.tau_b}, {"tau_y", p.tau_y}});
    }
    c["points"] = pts;
    curves.push_back(c);
  }
  j["curves"] = curves;
  return j.dump(2) + "\n";
}

std::string compare_report_json(const CompareReport& report,
                                const RunContext& ctx) {
  json j = context_json(ctx);
  json ests = json::array();
  for (const auto& e : report.estimators) {
    json je;
    je["estimator"] = e.estimator;
    je["converged"] = e.converged;
    je["loglik"] = number_or_null(e.loglik);
    je["aic"] = number_or_null(e.aic);
    je["coefficients"] =
        coefficient_table(report.coefficient_names, e.beta, e.se);
    je["association"] = e.extra;
    je["diagnostics"] = e.diagnostics;
    ests.push_back(je);
  }
  j["estimators"] = ests;
  json z = json::object();
  for (std::size_t c = 0; c < report.coefficient_names.size(); ++c) {
    z[report.coefficient_names[c]] = number_or_null(report.max_pairwise_z[c]);
  }
  j["max_pairwise_z"] = z;
  return j.dump(2) + "\n";
}

// ---- text renderings -------------------------------------------------------

namespace {

std::string coef_text(const std::vector<std::string>& names,
                      const Eigen::VectorXd& beta, const Eigen::VectorXd& se) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "  %-16s %12s %12s %8s %10s\n", "term",
                "estimate", "se", "z", "p");
  out << line;
  for (int i = 0; i < beta.size(); ++i) {
    const double s = i < se.size() ? se(i) : NAN;
    std::string z = "--", p = "--";
    if (std::isfinite(s) && s > 0.0) {
      char zb[32], pb[32];
      std::snprintf(zb, sizeof(zb), "%8.2f", beta(i) / s);
      std::snprintf(pb, sizeof(pb), "%10.4f",
                    2.0 * normal_cdf(-std::fabs(beta(i) / s)));
      z = zb;
      p = pb;
    }
    std::snprintf(line, sizeof(line), "  %-16s %s %s %8s %10s\n",
                  names[static_cast<std::size_t>(i)].c_str(),
                  fmt(beta(i)).c_str(), fmt(s).c_str(), z.c_str(), p.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace

std::string fit_result_text(const FitResult& fit) {
  std::ostringstream out;
  out << "bridge GLMM fit (" << [&] {
    switch (fit.structure) {
      case AssociationKind::SingleIntercept: return "single intercept";
      case AssociationKind::AR1Rho: return "AR(1) on rho";
      case AssociationKind::AR1Tau: return "AR(1) on tau";
    }
    return "?";
  }() << ")\n";
  out << "  converged: " << (fit.converged ? "yes" : "NO")
      << "   iterations: " << fit.iterations << "   seed: " << fit.seed << "\n";
  out << "  loglik: " << fmt(fit.loglik) << "   AIC: " << fmt(fit.aic) << "\n";
  const int n_beta = static_cast<int>(fit.beta.size());
  std::vector<std::string> beta_names(
      fit.parameter_names.begin(), fit.parameter_names.begin() + n_beta);
  out << coef_text(beta_names, fit.beta, fit.se.head(n_beta));
  out << "  phi: " << fmt(fit.phi)
      << (fit.phi_fixed ? "  (fixed)" : "") << "\n";
  if (fit.assoc) {
    out << "  " << (fit.structure == AssociationKind::AR1Tau ? "tau" : "rho")
        << ": " << fmt(*fit.assoc) << "\n";
  }
  for (const auto& d : fit.diagnostics) out << "  note: " << d << "\n";
  return out.str();
}

std::string bahadur_fit_text(const BahadurFit& fit) {
  std::ostringstream out;
  out << "Bahadur ML fit (AR(1) pairwise correlation)\n";
  out << "  converged: " << (fit.converged ? "yes" : "NO")
      << "   iterations: " << fit.iterations << "\n";
  out << "  loglik: " << fmt(fit.loglik) << "   AIC: " << fmt(fit.aic) << "\n";
  const int n_beta = static_cast<int>(fit.beta.size());
  std::vector<std::string> beta_names(
      fit.parameter_names.begin(), fit.parameter_names.begin() + n_beta);
  out << coef_text(beta_names, fit.beta, fit.se.head(n_beta));
  out << "  gamma: " << fmt(fit.gamma) << "\n";
  if (fit.gamma3_free) out << "  gamma3: " << fmt(fit.gamma3) << "\n";
  if (fit.gamma4_free) out << "  gamma4: " << fmt(fit.gamma4) << "\n";
  out << "  min cell probability: " << fmt(fit.min_cell) << "\n";
  for (const auto& d : fit.diagnostics) out << "  note: " << d << "\n";
  return out.str();
}

std::string gee_result_text(const GeeResult& fit) {
  std::ostringstream out;
  out << "GEE fit (AR(1) working correlation, sandwich SEs)\n";
  out << "  converged: " << (fit.converged ? "yes" : "NO")
      << "   iterations: " << fit.iterations << "\n";
  out << coef_text(fit.parameter_names, fit.beta, fit.se_sandwich);
  out << "  working rho: " << fmt(fit.rho) << "\n";
  for (const auto& d : fit.diagnostics) out << "  note: " << d << "\n";
  return out.str();
}

std::string simulation_report_text(const SimulationReport& report) {
  std::ostringstream out;
  out << "simulation study: true model = "
      << true_model_name(report.config.true_model)
      << ", n = " << report.config.n_subjects
      << ", m = " << report.config.occasions
      << ", replications = " << report.config.replications << "\n";
  char line[200];
  std::snprintf(line, sizeof(line), "  %-8s %-12s %-10s %12s %12s %12s %6s\n",
                "assoc", "estimator", "coef", "mean", "mse", "coverage",
                "fail");
  out << line;
  for (const auto& cell : report.cells) {
    for (const auto& [name, r] : cell.coefficients) {
      std::snprintf(line, sizeof(line),
                    "  %-8.3g %-12s %-10s %s %s %s %6d%s\n", cell.assoc,
                    estimator_name(cell.estimator), name.c_str(),
                    fmt(r.mean).c_str(), fmt(r.mse).c_str(),
                    fmt(r.coverage).c_str(), cell.n_failed,
                    cell.unreliable ? "  UNRELIABLE" : "");
      out << line;
    }
  }
  return out.str();
}

std::string tau_curve_text(
    const std::map<double, std::vector<TauCurvePoint>>& curves_by_phi) {
  std::ostringstream out;
  char line[120];
  std::snprintf(line, sizeof(line), "  %-8s %12s %12s %12s\n", "phi", "tau_b",
                "tau_y", "gap");
  out << line;
  for (const auto& [phi, points] : curves_by_phi) {
    for (const auto& p : points) {
      std::snprintf(line, sizeof(line), "  %-8.3g %s %s %s\n", phi,
                    fmt(p.tau_b).c_str(), fmt(p.tau_y).c_str(),
                    fmt(p.tau_y - p.tau_b).c_str());
      out << line;
    }
  }
  return out.str();
}

std::string compare_report_text(const CompareReport& report) {
  std::ostringstream out;
  out << "estimator comparison\n";
  char line[200];
  std::snprintf(line, sizeof(line), "  %-16s %-16s %12s %12s %8s\n", "term",
                "estimator", "estimate", "se", "z");
  out << line;
  for (std::size_t c = 0; c < report.coefficient_names.size(); ++c) {
    for (const auto& e : report.estimators) {
      const double se = e.se(static_cast<int>(c));
      const double z = se > 0.0 ? e.beta(static_cast<int>(c)) / se : NAN;
      std::snprintf(line, sizeof(line), "  %-16s %-16s %s %s %8.2f\n",
                    report.coefficient_names[c].c_str(), e.estimator.c_str(),
                    fmt(e.beta(static_cast<int>(c))).c_str(), fmt(se).c_str(),
                    z);
      out << line;
    }
  }
  out << "  association / fit summaries:\n";
  for (const auto& e : report.estimators) {
    out << "    " << e.estimator << ": converged="
        << (e.converged ? "yes" : "NO");
    if (std::isfinite(e.aic)) out << ", AIC=" << fmt(e.aic, 0);
    for (const auto& [k, v] : e.extra) out << ", " << k << "=" << fmt(v, 0);
    out << "\n";
  }
  out << "  max pairwise |z| per coefficient:\n";
  for (std::size_t c = 0; c < report.coefficient_names.size(); ++c) {
    out << "    " << report.coefficient_names[c] << ": "
        << fmt(report.max_pairwise_z[c], 0) << "\n";
  }
  return out.str();
}

}  // namespace bglmm
