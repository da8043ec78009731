#include "bglmm/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "bglmm/copula.hpp"
#include "bglmm/errors.hpp"
#include "bglmm/model.hpp"
#include "bglmm/stats.hpp"
#include "bglmm/threading.hpp"

namespace bglmm {

namespace {
// Substream labels inside one replication seed.
constexpr std::uint64_t kGenLabel = 0x67656E64;  // data generation
constexpr std::uint64_t kFitLabel = 0x6669747A;  // estimator randomness
}  // namespace

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::BridgeML: return "bridge-ml";
    case Estimator::BahadurML: return "bahadur-ml";
    case Estimator::Gee: return "gee";
  }
  return "?";
}

const char* true_model_name(TrueModel m) {
  return m == TrueModel::Bridge ? "bridge" : "bahadur";
}

void ScenarioConfig::validate() const {
  if (n_subjects < 2) throw DataError("scenario: need at least 2 subjects");
  if (occasions < 1) throw DataError("scenario: need at least 1 occasion");
  if (replications < 1) throw DataError("scenario: need at least 1 replication");
  if (!(treat_fraction >= 0.0 && treat_fraction <= 1.0)) {
    throw DataError("scenario: treat_fraction must lie in [0,1]");
  }
  if (assoc_values.empty()) {
    throw DataError("scenario: no association values given");
  }
  if (estimators.empty()) throw DataError("scenario: no estimators requested");
  for (double a : assoc_values) {
    if (!(a > -1.0 && a < 1.0)) {
      throw DataError("scenario: association values must lie in (-1,1)");
    }
  }
  if (true_model == TrueModel::Bridge) {
    (void)BridgeParam(phi);  // range check
  }
}

namespace {

// Covariate row (1, t, group) and subject ids shared by both generators.
// Group sizes are fixed, not resampled: the first ceil(n * (1-f)) subjects
// are controls.
struct DesignInfo {
  Eigen::MatrixXd x0;  // occasions x 3, group = 0
  Eigen::MatrixXd x1;  // group = 1
  std::vector<double> times;
  int n_group0 = 0;
};

DesignInfo make_design(const ScenarioConfig& config) {
  DesignInfo d;
  const int m = config.occasions;
  d.x0.resize(m, 3);
  d.x1.resize(m, 3);
  d.times.resize(static_cast<std::size_t>(m));
  for (int t = 0; t < m; ++t) {
    const double time = t + 1.0;
    d.times[static_cast<std::size_t>(t)] = time;
    d.x0.row(t) << 1.0, time, 0.0;
    d.x1.row(t) << 1.0, time, 1.0;
  }
  const int n1 = static_cast<int>(std::lround(config.n_subjects *
                                              config.treat_fraction));
  d.n_group0 = config.n_subjects - n1;
  return d;
}

std::string subject_label(int i) { return "s" + std::to_string(i + 1); }

}  // namespace

Dataset generate_bridge_dataset(const ScenarioConfig& config, double assoc,
                                std::uint64_t rep_seed) {
  if (config.true_model != TrueModel::Bridge) {
    throw DataError("generate_bridge_dataset: scenario is not a bridge truth");
  }
  const DesignInfo design = make_design(config);
  const BridgeParam phi(config.phi);
  const AssociationStructure structure = AssociationStructure::ar1_rho(assoc);
  const Eigen::VectorXd beta = config.beta;
  const double inv_phi = 1.0 / phi.value();

  Eigen::MatrixXd chol;
  if (config.occasions == 1) {
    chol = Eigen::MatrixXd::Identity(1, 1);
  } else {
    chol = cholesky_lower(build_correlation(structure, design.times).entries);
  }

  Rng rng = labelled_stream(rep_seed, kGenLabel);
  Dataset out;
  out.reserve(static_cast<std::size_t>(config.n_subjects));
  for (int i = 0; i < config.n_subjects; ++i) {
    const bool treated = i >= design.n_group0;
    const Eigen::MatrixXd& x = treated ? design.x1 : design.x0;
    SubjectRecord subj;
    subj.id = subject_label(i);
    subj.times = design.times;
    subj.x = x;
    subj.outcomes.resize(static_cast<std::size_t>(config.occasions));
    const Eigen::VectorXd z = sample_latent_normal(chol, rng);
    for (int t = 0; t < config.occasions; ++t) {
      const double b = bridge_from_normal(z(t), phi);
      const double p = expit(b + x.row(t).dot(beta) * inv_phi);
      subj.outcomes[static_cast<std::size_t>(t)] = rng.bernoulli(p) ? 1 : 0;
    }
    out.push_back(std::move(subj));
  }
  return out;
}

Dataset generate_bahadur_dataset(const ScenarioConfig& config, double assoc,
                                 std::uint64_t rep_seed) {
  if (config.true_model != TrueModel::Bahadur) {
    throw DataError("generate_bahadur_dataset: scenario is not a Bahadur truth");
  }
  const int m = config.occasions;
  if (m > 7) throw DataError("generate_bahadur_dataset: at most 7 occasions");
  const DesignInfo design = make_design(config);

  // Cell tables per group; cumulative sums drive the categorical sampling.
  auto build_cells = [&](const Eigen::MatrixXd& x) {
    std::vector<double> marg(static_cast<std::size_t>(m));
    for (int t = 0; t < m; ++t) {
      marg[static_cast<std::size_t>(t)] = marginal_prob(x.row(t), config.beta);
    }
    std::vector<double> cells = enumerate_bahadur_cells(
        marg, design.times, assoc, config.gamma3, 0.0);
    double worst = 1.0;
    int worst_idx = -1;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells[k] < worst) {
        worst = cells[k];
        worst_idx = static_cast<int>(k);
      }
    }
    if (worst < 0.0) {
      throw DataError(
          "generate_bahadur_dataset: parameters outside the validity region "
          "(cell " + std::to_string(worst_idx) + " has probability " +
          std::to_string(worst) + ")");
    }
    std::vector<double> cumulative(cells.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      acc += cells[k];
      cumulative[k] = acc;
    }
    return cumulative;
  };
  const std::vector<double> cum0 = build_cells(design.x0);
  const std::vector<double> cum1 = build_cells(design.x1);

  Rng rng = labelled_stream(rep_seed, kGenLabel);
  Dataset out;
  out.reserve(static_cast<std::size_t>(config.n_subjects));
  const int n_cells = 1 << m;
  for (int i = 0; i < config.n_subjects; ++i) {
    const bool treated = i >= design.n_group0;
    SubjectRecord subj;
    subj.id = subject_label(i);
    subj.times = design.times;
    subj.x = treated ? design.x1 : design.x0;
    subj.outcomes.resize(static_cast<std::size_t>(m));
    const int cell = rng.categorical_from_cumulative(
        (treated ? cum1 : cum0).data(), n_cells);
    for (int t = 0; t < m; ++t) {
      subj.outcomes[static_cast<std::size_t>(t)] = (cell >> t) & 1;
    }
    out.push_back(std::move(subj));
  }
  return out;
}

namespace {

struct RepEstimate {
  bool ok = false;
  // Per design coefficient: estimate and standard error.
  Eigen::Vector3d est = Eigen::Vector3d::Zero();
  Eigen::Vector3d se = Eigen::Vector3d::Zero();
};

RepEstimate run_estimator(Estimator which, const Dataset& data,
                          const ScenarioConfig& config, std::uint64_t rep_seed) {
  RepEstimate out;
  const std::vector<std::string> names = {"intercept", "time", "group"};
  try {
    if (which == Estimator::BridgeML) {
      FitOptions fopt = config.bridge_fit;
      std::uint64_t mix = rep_seed ^ (kFitLabel * 0x9E3779B97F4A7C15ULL);
      fopt.seed = splitmix64(mix);
      const FitResult fit = fit_bridge_model(
          data, AssociationStructure::ar1_rho(0.3), fopt, names);
      if (!fit.converged || !fit.se_valid) return out;
      out.est = fit.beta.head(3);
      out.se = fit.se.head(3);
      out.ok = true;
    } else if (which == Estimator::BahadurML) {
      const BahadurFit fit = fit_bahadur_ml(data, config.bahadur_fit, names);
      if (!fit.converged || !fit.se_valid) return out;
      out.est = fit.beta.head(3);
      out.se = fit.se.head(3);
      out.ok = true;
    } else {
      const GeeResult fit = fit_gee(data, config.gee, names);
      if (!fit.converged) return out;
      out.est = fit.beta.head(3);
      out.se = fit.se_sandwich.head(3);
      out.ok = true;
    }
  } catch (const std::exception&) {
    out.ok = false;
  }
  return out;
}

}  // namespace

SimulationReport run_study(const ScenarioConfig& config) {
  config.validate();
  SimulationReport report;
  report.config = config;

  const std::vector<std::string> coef_names = {"intercept", "time", "group"};
  const Eigen::Vector3d truth = config.beta;

  for (double assoc : config.assoc_values) {
    const int n_est = static_cast<int>(config.estimators.size());
    const int reps = config.replications;
    // est-major storage of per-replication results.
    std::vector<std::vector<RepEstimate>> results(
        static_cast<std::size_t>(n_est),
        std::vector<RepEstimate>(static_cast<std::size_t>(reps)));

    parallel_for(reps, config.threads, [&](int r) {
      const std::uint64_t rep_seed = config.base_seed + static_cast<std::uint64_t>(r);
      const Dataset data =
          config.true_model == TrueModel::Bridge
              ? generate_bridge_dataset(config, assoc, rep_seed)
              : generate_bahadur_dataset(config, assoc, rep_seed);
      for (int e = 0; e < n_est; ++e) {
        results[static_cast<std::size_t>(e)][static_cast<std::size_t>(r)] =
            run_estimator(config.estimators[static_cast<std::size_t>(e)], data,
                          config, rep_seed);
      }
    });

    for (int e = 0; e < n_est; ++e) {
      ScenarioCell cell;
      cell.true_model = config.true_model;
      cell.assoc = assoc;
      cell.estimator = config.estimators[static_cast<std::size_t>(e)];
      cell.n_replications = reps;
      std::vector<double> est_ok[3], cover_ok[3], sqerr_ok[3];
      for (int r = 0; r < reps; ++r) {
        const RepEstimate& re =
            results[static_cast<std::size_t>(e)][static_cast<std::size_t>(r)];
        if (!re.ok) {
          ++cell.n_failed;
          continue;
        }
        for (int c = 0; c < 3; ++c) {
          est_ok[c].push_back(re.est(c));
          sqerr_ok[c].push_back((re.est(c) - truth(c)) * (re.est(c) - truth(c)));
          const bool covered =
              std::fabs(re.est(c) - truth(c)) <= 1.959963984540054 * re.se(c);
          cover_ok[c].push_back(covered ? 1.0 : 0.0);
        }
      }
      const int used = reps - cell.n_failed;
      cell.unreliable = cell.n_failed * 10 > reps;
      for (int c = 0; c < 3; ++c) {
        CellReport cr;
        cr.n_used = used;
        if (used > 0) {
          cr.mean = mean(est_ok[c]);
          cr.bias = cr.mean - truth(c);
          cr.mse = mean(sqerr_ok[c]);
          cr.variance = variance_population(est_ok[c]);
          cr.coverage = mean(cover_ok[c]);
          if (used > 1) {
            cr.mc_se_mean = std::sqrt(variance_sample(est_ok[c]) / used);
            cr.mc_se_mse = std::sqrt(variance_sample(sqerr_ok[c]) / used);
            cr.mc_se_coverage =
                std::sqrt(cr.coverage * (1.0 - cr.coverage) / used);
          }
        }
        cell.coefficients[coef_names[static_cast<std::size_t>(c)]] = cr;
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::vector<TauCurvePoint> tau_correspondence_curve(
    BridgeParam phi, std::span<const double> tau_b_grid, int n_pairs,
    std::uint64_t seed) {
  if (n_pairs < 2) throw std::domain_error("tau_correspondence_curve: n_pairs");
  std::vector<TauCurvePoint> out;
  out.reserve(tau_b_grid.size());
  const double inv_phi = 1.0 / phi.value();
  for (std::size_t g = 0; g < tau_b_grid.size(); ++g) {
    const double tau_b = tau_b_grid[g];
    if (!(tau_b > -1.0 && tau_b < 1.0)) {
      throw std::domain_error("tau_correspondence_curve: tau grid in (-1,1)");
    }
    const double rho = rho_from_tau(tau_b);
    // 2x2 latent correlation via direct mixing (Cholesky of [[1,rho],[rho,1]]).
    const double c21 = rho;
    const double c22 = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    Rng rng = labelled_stream(seed, 0xC0FFEE ^ g);
    long long n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (int k = 0; k < n_pairs; ++k) {
      const double e1 = rng.normal();
      const double e2 = rng.normal();
      const double z1 = e1;
      const double z2 = c21 * e1 + c22 * e2;
      // Conditional logit b_t + (3 - 2t)/phi for t = 1, 2.
      const double b1 = bridge_from_normal(z1, phi);
      const double b2 = bridge_from_normal(z2, phi);
      const int y1 = rng.bernoulli(expit(b1 + 1.0 * inv_phi)) ? 1 : 0;
      const int y2 = rng.bernoulli(expit(b2 - 1.0 * inv_phi)) ? 1 : 0;
      if (y1) {
        if (y2) ++n11; else ++n10;
      } else {
        if (y2) ++n01; else ++n00;
      }
    }
    out.push_back({tau_b, kendall_tau_binary(n00, n01, n10, n11)});
  }
  return out;
}

}  // namespace bglmm
