#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bglmm/bahadur.hpp"
#include "bglmm/data.hpp"
#include "bglmm/fit.hpp"
#include "bglmm/gee.hpp"

namespace bglmm {

enum class TrueModel { Bridge, Bahadur };

enum class Estimator { BridgeML, BahadurML, Gee };

const char* estimator_name(Estimator e);
const char* true_model_name(TrueModel m);

// Two-group longitudinal design: occasions t = 1..m, covariate row
// (1, t, group), marginal logit beta0 + beta_time * t + beta_group * group.
struct ScenarioConfig {
  TrueModel true_model = TrueModel::Bridge;
  int n_subjects = 100;
  int occasions = 3;
  double treat_fraction = 0.5;
  Eigen::Vector3d beta{-1.0, -0.5, 1.0};  // intercept, time, group
  std::vector<double> assoc_values;       // rho (bridge) or gamma (bahadur)
  double phi = 0.7;                       // bridge truth only
  double gamma3 = 0.0;                    // bahadur truth third-order
  int replications = 1;
  std::uint64_t base_seed = 1;
  std::vector<Estimator> estimators = {Estimator::BridgeML,
                                       Estimator::BahadurML, Estimator::Gee};
  FitOptions bridge_fit;    // seed is overridden per replication
  BahadurFitOptions bahadur_fit;
  GeeOptions gee;
  int threads = 1;

  void validate() const;
};

// One dataset from the bridge GLMM truth: correlated bridge intercepts via
// the Gaussian copula with AR(1)-rho latent correlation, Bernoulli outcomes
// from the conditional model. assoc is the scenario's rho.
Dataset generate_bridge_dataset(const ScenarioConfig& config, double assoc,
                                std::uint64_t rep_seed);

// One dataset from the Bahadur truth: per-group cells enumerated once, each
// subject's pattern drawn from the categorical law. Rejects scenarios with
// a negative cell.
Dataset generate_bahadur_dataset(const ScenarioConfig& config, double assoc,
                                 std::uint64_t rep_seed);

struct CellReport {
  double mean = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double variance = 0.0;    // population variance of the estimates
  double coverage = 0.0;    // Wald 95%
  double mc_se_mean = 0.0;
  double mc_se_mse = 0.0;
  double mc_se_coverage = 0.0;
  int n_used = 0;
};

struct ScenarioCell {
  TrueModel true_model;
  double assoc = 0.0;
  Estimator estimator;
  // Keyed by coefficient name: intercept, time, group.
  std::map<std::string, CellReport> coefficients;
  int n_failed = 0;
  int n_replications = 0;
  bool unreliable = false;  // more than 10% failed replications
};

struct SimulationReport {
  ScenarioConfig config;
  std::vector<ScenarioCell> cells;
};

// Runs the replicated comparison; replication r uses seed base_seed + r.
// Failed fits (exceptions, non-convergence, unusable standard errors) are
// excluded from the aggregates and counted.
SimulationReport run_study(const ScenarioConfig& config);

// Kendall's tau correspondence between the latent pair and the binary pair
// for the fixed two-occasion design with conditional logit b_t + (3-2t)/phi.
struct TauCurvePoint {
  double tau_b = 0.0;
  double tau_y = 0.0;
};

std::vector<TauCurvePoint> tau_correspondence_curve(
    BridgeParam phi, std::span<const double> tau_b_grid, int n_pairs,
    std::uint64_t seed);

}  // namespace bglmm
