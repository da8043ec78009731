#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "bglmm/data.hpp"
#include "bglmm/model.hpp"
#include "bglmm/rng.hpp"

namespace bglmm {

// Normal importance proposal for one subject's random-effect integral,
// located at the mode of the log-integrand on the latent-normal scale with
// curvature-based covariance inflated by `inflation`. (The integral is
// evaluated in latent-normal coordinates; the probability integral transform
// makes this the same integral as over the bridge effects, and it keeps the
// importance weights well behaved.)
struct ImportanceProposal {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int mode_iterations = 0;
};

ImportanceProposal importance_proposal(const SubjectRecord& subject,
                                       const BridgeModelSpec& spec,
                                       double inflation = 1.2);

// Log of the importance-sampling estimate of the subject's marginal
// likelihood over its observed occasions. Deterministic given the
// generator's state.
double subject_loglik_mc(const SubjectRecord& subject,
                         const BridgeModelSpec& spec, int draws, Rng& rng,
                         double inflation = 1.2);

// Same estimate plus Monte Carlo diagnostics computed from the weights.
struct McLoglik {
  double loglik = 0.0;
  double se = 0.0;   // delta-method standard error of the log estimate
  double ess = 0.0;  // effective sample size of the normalized weights
};

McLoglik subject_loglik_mc_detail(const SubjectRecord& subject,
                                  const BridgeModelSpec& spec, int draws,
                                  Rng& rng, double inflation = 1.2);

// Dense tensor-product Gauss-Legendre evaluation of the same integral;
// verification oracle, available for dimensions up to 4 only.
// nodes_per_dim == 0 picks a default based on the dimension.
double subject_loglik_quadrature(const SubjectRecord& subject,
                                 const BridgeModelSpec& spec,
                                 int nodes_per_dim = 0);

struct LoglikOptions {
  int draws = 1000;
  std::uint64_t seed = 0;
  double inflation = 1.2;
  int threads = 1;
};

// Precomputed common-random-numbers variates: for each subject, the first
// max_draws * dim standard normals of its (seed, subject id) substream in
// draw-major order. Evaluating through the cache is bit-identical to the
// stateless path and skips regenerating variates on every call; repeated
// subject ids get identical streams either way.
class CrnCache {
 public:
  CrnCache(const Dataset& dataset, std::uint64_t seed, int max_draws,
           bool single_intercept);

  std::uint64_t seed() const { return seed_; }
  int max_draws() const { return max_draws_; }
  bool single_intercept() const { return single_; }
  const double* stream(int subject_index) const {
    return streams_[static_cast<std::size_t>(subject_index)].data();
  }

 private:
  std::uint64_t seed_;
  int max_draws_;
  bool single_;
  std::vector<std::vector<double>> streams_;
};

// Same value as dataset_loglik (bitwise), fed from the cache.
double dataset_loglik_cached(const Dataset& dataset,
                             const BridgeModelSpec& spec,
                             const LoglikOptions& options,
                             const CrnCache& cache);

// Sum of per-subject Monte Carlo log-likelihoods under common random
// numbers: every subject's draws come from a substream keyed by
// (seed, subject id), so for a fixed seed the value is a smooth
// deterministic function of the model spec. Terms are accumulated in sorted
// (id, value) order, which makes the result independent of subject order
// and of the number of threads.
double dataset_loglik(const Dataset& dataset, const BridgeModelSpec& spec,
                      const LoglikOptions& options);

}  // namespace bglmm
