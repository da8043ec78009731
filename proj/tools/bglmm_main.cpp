// Command-line front end: fits the bridge GLMM and the benchmark estimators,
// runs simulation studies and emits the tau correspondence curve.
//
// Exit codes: 0 success, 1 usage error, 2 data/design error, 3 numeric
// failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bglmm/compare.hpp"
#include "bglmm/data_io.hpp"
#include "bglmm/errors.hpp"
#include "bglmm/fit.hpp"
#include "bglmm/report.hpp"
#include "bglmm/version.hpp"

namespace {

using namespace bglmm;

struct DesignFlags {
  std::string data_path;
  std::string subject_col = "id";
  std::string time_col = "time";
  std::string outcome_col = "y";
  std::vector<std::string> covariates;
  std::vector<std::string> interactions;
  bool no_intercept = false;
  bool standardize = false;
  std::string lag = "occasion";
};

void add_design_flags(CLI::App* cmd, DesignFlags& flags) {
  cmd->add_option("--data", flags.data_path, "long-format CSV input")
      ->required();
  cmd->add_option("--subject", flags.subject_col, "subject id column");
  cmd->add_option("--time", flags.time_col, "time column");
  cmd->add_option("--outcome", flags.outcome_col, "binary outcome column");
  cmd->add_option("--covariates", flags.covariates,
                  "covariate columns, in model order (use 'time' for the "
                  "time trend)")
      ->delimiter(',');
  cmd->add_option("--interactions", flags.interactions,
                  "interaction terms a:b over columns/time")
      ->delimiter(',');
  cmd->add_flag("--no-intercept", flags.no_intercept, "drop the intercept");
  cmd->add_flag("--standardize", flags.standardize,
                "center and scale non-constant design columns");
  cmd->add_option("--lag", flags.lag,
                  "AR(1) lag convention: occasion (index in the pooled time "
                  "grid) or time (raw time units)")
      ->check(CLI::IsMember({"occasion", "time"}));
}

BuiltDesign load_design(const DesignFlags& flags,
                        std::map<std::string, std::string>* inputs) {
  CsvColumns cols;
  cols.subject = flags.subject_col;
  cols.time = flags.time_col;
  cols.outcome = flags.outcome_col;
  const LongDataset raw = read_long_csv(flags.data_path, cols);
  DesignSpec spec;
  spec.intercept = !flags.no_intercept;
  spec.covariates = flags.covariates;
  spec.interactions = flags.interactions;
  spec.standardize = flags.standardize;
  spec.lag = flags.lag == "time" ? LagConvention::RealTime
                                 : LagConvention::OccasionIndex;
  if (inputs) {
    (*inputs)["data"] = flags.data_path;
    (*inputs)["subject"] = flags.subject_col;
    (*inputs)["time"] = flags.time_col;
    (*inputs)["outcome"] = flags.outcome_col;
    (*inputs)["lag"] = flags.lag;
  }
  return build_design(raw, spec);
}

// Writes the JSON document and prints the text rendering. --out '-' swaps
// the JSON onto stdout.
void emit(const std::string& json_doc, const std::string& text,
          const std::string& out_path) {
  if (out_path == "-") {
    std::fputs(json_doc.c_str(), stdout);
    return;
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + out_path + "' for writing");
    out << json_doc;
  }
  std::fputs(text.c_str(), stdout);
}

int dispatch(int argc, char** argv) {
  CLI::App app{"marginal-logit GLMMs for longitudinal binary data via "
               "correlated bridge random intercepts"};
  app.set_version_flag("--version", std::string("bglmm ") + kVersion);
  app.require_subcommand(1);

  // ---- fit ----
  auto* fit_cmd = app.add_subcommand(
      "fit", "maximum likelihood for the bridge random-intercept model");
  DesignFlags fit_design;
  add_design_flags(fit_cmd, fit_design);
  std::string structure_name = "ar1-rho";
  std::optional<double> fix_phi;
  std::string schedule_text;
  std::uint64_t seed = 0;
  int max_iter = 50;
  int threads = 1;
  double inflation = 1.2;
  std::string out_path;
  fit_cmd->add_option("--structure", structure_name,
                      "association structure: single | ar1-rho | ar1-tau")
      ->check(CLI::IsMember({"single", "ar1-rho", "ar1-tau"}));
  fit_cmd->add_option("--fix-phi", fix_phi,
                      "hold the attenuation parameter fixed at this value");
  fit_cmd->add_option("--draws-schedule", schedule_text,
                      "Monte Carlo draw schedule, e.g. 1:50,20:100,40:1000");
  fit_cmd->add_option("--max-iter", max_iter, "Newton-Raphson iteration cap");
  fit_cmd->add_option("--seed", seed, "RNG seed");
  fit_cmd->add_option("--threads", threads, "worker threads");
  fit_cmd->add_option("--inflation", inflation,
                      "importance proposal covariance inflation");
  fit_cmd->add_option("--out", out_path, "JSON output path ('-' for stdout)");

  // ---- fit-bahadur ----
  auto* bah_cmd = app.add_subcommand(
      "fit-bahadur", "exact ML under the Bahadur representation, AR(1) "
                     "pairwise correlations");
  DesignFlags bah_design;
  add_design_flags(bah_cmd, bah_design);
  std::string bah_out;
  int gamma3_flag = -1, gamma4_flag = -1;
  bah_cmd->add_option("--gamma3", gamma3_flag,
                      "-1 auto, 0 fix at zero, 1 estimate");
  bah_cmd->add_option("--gamma4", gamma4_flag,
                      "-1 auto, 0 fix at zero, 1 estimate");
  bah_cmd->add_option("--out", bah_out, "JSON output path ('-' for stdout)");

  // ---- fit-gee ----
  auto* gee_cmd = app.add_subcommand(
      "fit-gee", "GEE with AR(1) working correlation and sandwich SEs");
  DesignFlags gee_design;
  add_design_flags(gee_cmd, gee_design);
  std::string gee_out;
  std::optional<double> fix_rho;
  gee_cmd->add_option("--fix-rho", fix_rho,
                      "hold the working correlation fixed (0 = independence)");
  gee_cmd->add_option("--out", gee_out, "JSON output path ('-' for stdout)");

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand(
      "simulate", "replicated estimator comparison from a scenario file");
  std::string scenario_path, sim_out;
  int sim_threads = 0;
  sim_cmd->add_option("--config", scenario_path, "scenario file")->required();
  sim_cmd->add_option("--threads", sim_threads,
                      "worker threads (overrides the scenario file)");
  sim_cmd->add_option("--out", sim_out, "JSON output path ('-' for stdout)");

  // ---- tau-curve ----
  auto* tau_cmd = app.add_subcommand(
      "tau-curve", "Monte Carlo curve of binary-pair Kendall's tau against "
                   "the latent-pair tau");
  std::vector<double> tau_phis = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> tau_grid;
  int tau_pairs = 200000;
  std::uint64_t tau_seed = 0;
  std::string tau_out;
  tau_cmd->add_option("--phi", tau_phis, "attenuation values")->delimiter(',');
  tau_cmd->add_option("--grid", tau_grid,
                      "tau_b grid (default 0,0.1,...,0.9)")
      ->delimiter(',');
  tau_cmd->add_option("--pairs", tau_pairs, "Monte Carlo pairs per point");
  tau_cmd->add_option("--seed", tau_seed, "RNG seed");
  tau_cmd->add_option("--out", tau_out, "JSON output path ('-' for stdout)");

  // ---- compare ----
  auto* cmp_cmd = app.add_subcommand(
      "compare", "fit all estimators on one dataset and tabulate them");
  DesignFlags cmp_design;
  add_design_flags(cmp_cmd, cmp_design);
  std::string cmp_out, cmp_schedule;
  std::uint64_t cmp_seed = 0;
  int cmp_threads = 1;
  cmp_cmd->add_option("--draws-schedule", cmp_schedule,
                      "Monte Carlo draw schedule for the bridge fits");
  cmp_cmd->add_option("--seed", cmp_seed, "RNG seed");
  cmp_cmd->add_option("--threads", cmp_threads, "worker threads");
  cmp_cmd->add_option("--out", cmp_out, "JSON output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint to stderr
    return 1;
  }

  if (fit_cmd->parsed()) {
    RunContext ctx;
    ctx.command = "fit";
    ctx.seed = seed;
    const BuiltDesign design = load_design(fit_design, &ctx.inputs);
    AssociationStructure structure = AssociationStructure::single_intercept();
    if (structure_name == "ar1-rho") {
      structure = AssociationStructure::ar1_rho(0.3);
    } else if (structure_name == "ar1-tau") {
      structure = AssociationStructure::ar1_tau(0.3);
    }
    FitOptions options;
    options.seed = seed;
    options.max_outer_iterations = max_iter;
    options.threads = threads;
    options.proposal_inflation = inflation;
    options.fix_phi = fix_phi;
    if (!schedule_text.empty()) {
      options.schedule = DrawSchedule::parse(schedule_text);
    }
    ctx.options["structure"] = structure_name;
    ctx.options["draws_schedule"] = options.schedule.to_string();
    ctx.options["max_iter"] = std::to_string(max_iter);
    if (fix_phi) ctx.options["fix_phi"] = std::to_string(*fix_phi);
    const FitResult fit =
        fit_bridge_model(design.dataset, structure, options, design.column_names);
    emit(fit_result_json(fit, ctx), fit_result_text(fit), out_path);
    return 0;
  }

  if (bah_cmd->parsed()) {
    RunContext ctx;
    ctx.command = "fit-bahadur";
    const BuiltDesign design = load_design(bah_design, &ctx.inputs);
    BahadurFitOptions options;
    options.fit_gamma3 = gamma3_flag;
    options.fit_gamma4 = gamma4_flag;
    const BahadurFit fit =
        fit_bahadur_ml(design.dataset, options, design.column_names);
    emit(bahadur_fit_json(fit, ctx), bahadur_fit_text(fit), bah_out);
    return 0;
  }

  if (gee_cmd->parsed()) {
    RunContext ctx;
    ctx.command = "fit-gee";
    const BuiltDesign design = load_design(gee_design, &ctx.inputs);
    GeeOptions options;
    options.fix_rho = fix_rho;
    const GeeResult fit = fit_gee(design.dataset, options, design.column_names);
    emit(gee_result_json(fit, ctx), gee_result_text(fit), gee_out);
    return 0;
  }

  if (sim_cmd->parsed()) {
    RunContext ctx;
    ctx.command = "simulate";
    ScenarioConfig config = read_scenario_file(scenario_path);
    if (sim_threads > 0) config.threads = sim_threads;
    ctx.seed = config.base_seed;
    ctx.inputs["config"] = scenario_path;
    const SimulationReport report = run_study(config);
    emit(simulation_report_json(report, ctx), simulation_report_text(report),
         sim_out);
    return 0;
  }

  if (tau_cmd->parsed()) {
    RunContext ctx;
    ctx.command = "tau-curve";
    ctx.seed = tau_seed;
    if (tau_grid.empty()) {
      for (int i = 0; i <= 9; ++i) tau_grid.push_back(0.1 * i);
    }
    std::map<double, std::vector<TauCurvePoint>> curves;
    for (double phi : tau_phis) {
      curves[phi] = tau_correspondence_curve(BridgeParam(phi), tau_grid,
                                             tau_pairs, tau_seed);
    }
    ctx.options["pairs"] = std::to_string(tau_pairs);
    emit(tau_curve_json(curves, ctx), tau_curve_text(curves), tau_out);
    return 0;
  }

  if (cmp_cmd->parsed()) {
    RunContext ctx;
    ctx.command = "compare";
    ctx.seed = cmp_seed;
    const BuiltDesign design = load_design(cmp_design, &ctx.inputs);
    CompareOptions options;
    options.seed = cmp_seed;
    options.bridge.threads = cmp_threads;
    if (!cmp_schedule.empty()) {
      options.bridge.schedule = DrawSchedule::parse(cmp_schedule);
    }
    ctx.options["draws_schedule"] = options.bridge.schedule.to_string();
    const CompareReport report =
        run_compare(design.dataset, design.column_names, options);
    emit(compare_report_json(report, ctx), compare_report_text(report),
         cmp_out);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const StructureError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
