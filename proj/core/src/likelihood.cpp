#include "bglmm/likelihood.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bglmm/copula.hpp"
#include "bglmm/errors.hpp"
#include "bglmm/normal.hpp"
#include "bglmm/quadrature.hpp"
#include "bglmm/stats.hpp"
#include "bglmm/threading.hpp"

namespace bglmm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxDim = 16;

// Latent-normal to bridge transform with the derivatives the mode search
// needs. Mirrors bridge_from_normal but keeps per-phi constants around.
struct ZTransform {
  double phi;
  double a;        // phi * pi
  double cos_a;    // cos(phi * pi)
  double log_sin;  // log sin(phi * pi)
  double inv_phi;
  double two_inv_phi;
  double cot_half;  // cot(phi pi / 2)

  explicit ZTransform(double phi_in)
      : phi(phi_in),
        a(phi_in * kPi),
        cos_a(std::cos(phi_in * kPi)),
        log_sin(std::log(std::sin(phi_in * kPi))),
        inv_phi(1.0 / phi_in),
        two_inv_phi(2.0 / phi_in),
        cot_half(1.0 / std::tan(0.5 * phi_in * kPi)) {}

  double b_of_z(double z) const {
    const double za = std::min(std::fabs(z), 37.0);
    const double u = normal_cdf(-za);  // near tail, full relative precision
    double b;
    if (u > 1e-6) {
      // sin(a u)/sin(a (1-u)) = (1 + w)/(1 - w) with w = cot(a/2) tan(a (u - 1/2)),
      // so the quantile is (2/phi) atanh(w): one tan and one log.
      const double w = cot_half * std::tan(a * (u - 0.5));
      b = two_inv_phi * std::atanh(w);
    } else {
      // Deep tail: evaluate the two log factors directly; sin(x) = x to
      // double precision when x is this small.
      const double x = a * u;
      const double log_num = x < 1e-8 ? std::log(x) : std::log(std::sin(x));
      const double log_den = std::log(std::sin(a * (1.0 - u)));
      b = (log_num - log_den) * inv_phi;
    }
    return z < 0.0 ? b : -b;
  }

  // log f_b(b) without ever underflowing.
  double log_pdf(double b) const {
    const double ab = std::fabs(phi * b);
    if (ab < 30.0) {
      return log_sin - std::log(2.0 * kPi) - std::log(std::cosh(ab) + cos_a);
    }
    const double ea = std::exp(-ab);
    return log_sin - std::log(2.0 * kPi) -
           (ab - std::log(2.0) + std::log1p(ea * ea + 2.0 * cos_a * ea));
  }

  // b, db/dz and d2b/dz2 at z.
  void derivs(double z, double& b, double& db, double& d2b) const {
    b = b_of_z(z);
    db = std::exp(normal_log_pdf(z) - log_pdf(b));
    // d(log f_b)/db = -phi sinh(phi b) / (cosh(phi b) + cos(phi pi)),
    // saturating at -phi sign(b) in the tails.
    const double ab = phi * b;
    double ratio;
    if (std::fabs(ab) < 30.0) {
      ratio = std::sinh(ab) / (std::cosh(ab) + cos_a);
    } else {
      ratio = ab > 0.0 ? 1.0 : -1.0;
    }
    d2b = -z * db + phi * ratio * db * db;
  }
};

// Everything that is fixed for one (subject, spec) pair.
struct SubjectPrep {
  int m = 0;           // observed occasions
  int dim = 0;         // integration dimension (1 for the shared intercept)
  bool single = false;
  Eigen::VectorXd c;         // x_t' beta / phi per occasion
  Eigen::MatrixXd chol;      // lower Cholesky factor of Sigma (dim x dim)
  Eigen::MatrixXd w;         // Sigma^{-1}
  double logdet_sigma = 0.0;
  ZTransform transform;

  SubjectPrep(const SubjectRecord& subject, const BridgeModelSpec& spec)
      : transform(spec.phi.value()) {
    m = subject.occasions();
    if (m < 1) throw DataError("subject '" + subject.id + "' has no occasions");
    single = spec.structure.kind == AssociationKind::SingleIntercept;
    dim = single ? 1 : m;
    if (dim > kMaxDim) {
      throw DataError("subject '" + subject.id + "' has too many occasions");
    }
    c.resize(m);
    const double inv_phi = 1.0 / spec.phi.value();
    for (int t = 0; t < m; ++t) {
      const double xb =
          spec.beta.size() > 0 ? subject.x.row(t).dot(spec.beta) : 0.0;
      c(t) = xb * inv_phi;
    }
    if (single || m == 1) {
      chol = Eigen::MatrixXd::Identity(dim, dim);
      w = Eigen::MatrixXd::Identity(dim, dim);
      logdet_sigma = 0.0;
    } else {
      const CorrelationMatrix sigma =
          build_correlation(spec.structure, subject.times);
      chol = cholesky_lower(sigma.entries);
      logdet_sigma = 0.0;
      for (int i = 0; i < dim; ++i) logdet_sigma += 2.0 * std::log(chol(i, i));
      w = Eigen::MatrixXd::Identity(dim, dim);
      chol.triangularView<Eigen::Lower>().solveInPlace(w);
      w = w.transpose() * w;  // Sigma^{-1} = L^{-T} L^{-1}
    }
  }
};

// Bernoulli log-likelihood of the subject at latent point z, with optional
// gradient/Hessian information for the mode search. For the shared-intercept
// model z has one coordinate feeding every occasion.
double bernoulli_loglik(const SubjectPrep& prep,
                        const std::vector<int>& outcomes, const double* z,
                        double* grad, double* curv) {
  double total = 0.0;
  if (grad) {
    std::fill(grad, grad + prep.dim, 0.0);
    std::fill(curv, curv + prep.dim, 0.0);
  }
  for (int t = 0; t < prep.m; ++t) {
    const int j = prep.single ? 0 : t;
    double b, db = 0.0, d2b = 0.0;
    if (grad) {
      prep.transform.derivs(z[j], b, db, d2b);
    } else {
      b = prep.transform.b_of_z(z[j]);
    }
    const double eta = b + prep.c(t);
    const int y = outcomes[static_cast<std::size_t>(t)];
    total += y ? -log1pexp(-eta) : -log1pexp(eta);
    if (grad) {
      const double p = expit(eta);
      grad[j] += (y - p) * db;
      curv[j] += (y - p) * d2b - p * (1.0 - p) * db * db;
    }
  }
  return total;
}

// Log-integrand g(z) = Bernoulli loglik + log N(z; 0, Sigma) (up to the
// constant), with gradient and Hessian when requested.
double log_integrand(const SubjectPrep& prep, const std::vector<int>& outcomes,
                     const Eigen::VectorXd& z, Eigen::VectorXd* grad,
                     Eigen::MatrixXd* hess) {
  double gcurv[kMaxDim];
  double gbern[kMaxDim];
  const double ll = bernoulli_loglik(prep, outcomes, z.data(),
                                     grad ? gbern : nullptr,
                                     grad ? gcurv : nullptr);
  const Eigen::VectorXd wz = prep.w * z;
  const double quad = z.dot(wz);
  if (grad) {
    *grad = -wz;
    for (int j = 0; j < prep.dim; ++j) (*grad)(j) += gbern[j];
    *hess = -prep.w;
    for (int j = 0; j < prep.dim; ++j) (*hess)(j, j) += gcurv[j];
  }
  return ll - 0.5 * quad;
}

struct ModeResult {
  Eigen::VectorXd mode;
  Eigen::MatrixXd neg_hessian;
  int iterations = 0;
};

ModeResult find_mode(const SubjectPrep& prep, const std::vector<int>& outcomes,
                     const std::string& subject_id) {
  const int d = prep.dim;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad(d);
  Eigen::MatrixXd hess(d, d);
  double g = log_integrand(prep, outcomes, z, &grad, &hess);
  ModeResult out;
  for (int iter = 1; iter <= 100; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < 1e-10) {
      out.mode = z;
      out.neg_hessian = -hess;
      out.iterations = iter - 1;
      return out;
    }
    Eigen::MatrixXd a = -hess;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    double ridge = 1e-8 * std::max(1.0, a.diagonal().maxCoeff());
    while (llt.info() != Eigen::Success) {
      a.diagonal().array() += ridge;
      ridge *= 10.0;
      llt.compute(a);
      if (ridge > 1e12) {
        throw NumericError("importance_proposal: mode search Hessian breakdown"
                           " for subject '" + subject_id + "'");
      }
    }
    const Eigen::VectorXd delta = llt.solve(grad);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      const Eigen::VectorXd z_new = z + step * delta;
      Eigen::VectorXd grad_new(d);
      Eigen::MatrixXd hess_new(d, d);
      const double g_new =
          log_integrand(prep, outcomes, z_new, &grad_new, &hess_new);
      if (g_new >= g - 1e-12) {
        z = z_new;
        g = g_new;
        grad = grad_new;
        hess = hess_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No ascent direction left; accept the current point if the gradient
      // is small enough to be noise.
      if (grad.lpNorm<Eigen::Infinity>() < 1e-6) break;
      throw NumericError("importance_proposal: damped Newton stalled for "
                         "subject '" + subject_id + "'");
    }
  }
  if (grad.lpNorm<Eigen::Infinity>() >= 1e-6) {
    throw NumericError(
        "importance_proposal: mode search did not converge within 100 "
        "iterations for subject '" + subject_id + "'");
  }
  out.mode = z;
  out.neg_hessian = -hess;
  out.iterations = 100;
  return out;
}

struct ProposalPrep {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol;     // lower factor of cov
  Eigen::MatrixXd cov_inv;  // precision of the adaptive component
  double logdet_chol = 0.0;
  int iterations = 0;
};

// Every fourth draw comes from the prior instead of the Laplace component.
// The defensive part caps the importance weights (at 1/kPriorShare times the
// Bernoulli factor), so a noisy proposal can never manufacture large
// spurious likelihood values.
constexpr int kPriorEvery = 4;
inline int prior_draw_count(int draws) { return draws / kPriorEvery; }
inline bool is_prior_draw(int k) { return k % kPriorEvery == kPriorEvery - 1; }

ProposalPrep make_proposal(const SubjectPrep& prep,
                           const std::vector<int>& outcomes,
                           const std::string& subject_id, double inflation) {
  if (!(inflation > 0.0)) {
    throw std::domain_error("importance proposal inflation must be positive");
  }
  const ModeResult mode = find_mode(prep, outcomes, subject_id);
  const int d = prep.dim;
  Eigen::MatrixXd a = mode.neg_hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  double ridge = 1e-10 * std::max(1.0, a.diagonal().maxCoeff());
  int attempts = 0;
  while (llt.info() != Eigen::Success) {
    if (++attempts > 24) {
      throw NumericError(
          "importance_proposal: degenerate proposal covariance for subject '" +
          subject_id + "'");
    }
    a.diagonal().array() += ridge;
    ridge *= 10.0;
    llt.compute(a);
  }
  ProposalPrep out;
  out.mean = mode.mode;
  out.iterations = mode.iterations;
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(d, d);
  llt.solveInPlace(inv);
  Eigen::MatrixXd cov = inflation * 0.5 * (inv + inv.transpose());

  // The Bernoulli factor is flat on one side, so the integrand's tails there
  // decay exactly like the prior. Floor the proposal, in prior-whitened
  // coordinates, at 1.05x the prior spread; this keeps the importance
  // weights bounded for every parameter value.
  const Eigen::MatrixXd& lp = prep.chol;  // prior Cholesky factor
  Eigen::MatrixXd white = lp.triangularView<Eigen::Lower>().solve(cov);
  white = lp.triangularView<Eigen::Lower>()
              .solve(white.transpose())
              .transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (white + white.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NumericError(
        "importance_proposal: degenerate proposal covariance for subject '" +
        subject_id + "'");
  }
  const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(1.05);
  const Eigen::MatrixXd basis =
      lp.triangularView<Eigen::Lower>() * eig.eigenvectors();
  out.cov = basis * lam.asDiagonal() * basis.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());

  Eigen::LLT<Eigen::MatrixXd> cov_llt(out.cov);
  if (cov_llt.info() != Eigen::Success) {
    throw NumericError(
        "importance_proposal: degenerate proposal covariance for subject '" +
        subject_id + "'");
  }
  out.chol = cov_llt.matrixL();
  out.logdet_chol = 0.0;
  for (int i = 0; i < d; ++i) out.logdet_chol += std::log(out.chol(i, i));
  out.cov_inv = cov_llt.solve(Eigen::MatrixXd::Identity(d, d));
  out.cov_inv = 0.5 * (out.cov_inv + out.cov_inv.transpose());
  return out;
}

// One of rng / eps_stream is set: eps_stream supplies draws * dim cached
// variates in the exact order the rng path would generate them.
McLoglik mc_estimate(const SubjectRecord& subject, const BridgeModelSpec& spec,
                     int draws, Rng* rng, const double* eps_stream,
                     double inflation) {
  if (draws < 1) throw std::domain_error("subject_loglik_mc: draws must be >= 1");
  const SubjectPrep prep(subject, spec);
  const ProposalPrep prop = make_proposal(prep, subject.outcomes, subject.id,
                                          inflation);
  const int d = prep.dim;
  const int n_prior = prior_draw_count(draws);
  const double share_prior = static_cast<double>(n_prior) / draws;
  const double share_adapt = 1.0 - share_prior;
  // log N(z; 0, Sigma) already carries -d/2 log 2pi in both places, so the
  // constants cancel inside the mixture ratio below.
  const double logdet_half_prior = 0.5 * prep.logdet_sigma;

  double eps[kMaxDim];
  double z[kMaxDim];
  std::vector<double> logw(static_cast<std::size_t>(draws));
  for (int k = 0; k < draws; ++k) {
    const bool from_prior = n_prior > 0 && is_prior_draw(k);
    double eps_sq = 0.0;
    for (int j = 0; j < d; ++j) {
      eps[j] = eps_stream ? eps_stream[k * d + j] : rng->normal();
      eps_sq += eps[j] * eps[j];
    }
    if (from_prior) {
      // z = L_sigma eps (prior component).
      for (int j = d - 1; j >= 0; --j) {
        double acc = 0.0;
        for (int l = 0; l <= j; ++l) acc += prep.chol(j, l) * eps[l];
        z[j] = acc;
      }
    } else {
      for (int j = d - 1; j >= 0; --j) {
        double acc = prop.mean(j);
        for (int l = 0; l <= j; ++l) acc += prop.chol(j, l) * eps[l];
        z[j] = acc;
      }
    }
    const double ll = bernoulli_loglik(prep, subject.outcomes, z, nullptr,
                                       nullptr);
    // Quadratic forms under both components; the one matching the sampled
    // component equals ||eps||^2 and is reused.
    double quad_prior, quad_adapt;
    if (from_prior) {
      quad_prior = eps_sq;
      quad_adapt = 0.0;
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int l = 0; l < d; ++l) {
          acc += prop.cov_inv(j, l) * (z[l] - prop.mean(l));
        }
        quad_adapt += (z[j] - prop.mean(j)) * acc;
      }
    } else {
      quad_adapt = eps_sq;
      quad_prior = 0.0;
      for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int l = 0; l < d; ++l) acc += prep.w(j, l) * z[l];
        quad_prior += z[j] * acc;
      }
    }
    const double log_n_prior = -0.5 * quad_prior - logdet_half_prior;
    const double log_n_adapt = -0.5 * quad_adapt - prop.logdet_chol;
    // w = Bern * N0 / (share_adapt * N_adapt + share_prior * N0)
    //   = Bern / (share_adapt * exp(log N_adapt - log N0) + share_prior).
    double denom;
    if (n_prior > 0) {
      const double delta = log_n_adapt - log_n_prior;
      if (delta > 500.0) {
        denom = std::log(share_adapt) + delta;
      } else {
        denom = std::log(share_adapt * std::exp(delta) + share_prior);
      }
    } else {
      denom = log_n_adapt - log_n_prior;
    }
    logw[static_cast<std::size_t>(k)] = ll - denom;
  }
  double max_lw = logw[0];
  for (double v : logw) max_lw = std::max(max_lw, v);
  NeumaierSum s1, s2;
  for (double v : logw) {
    const double wi = std::exp(v - max_lw);
    s1.add(wi);
    s2.add(wi * wi);
  }
  const double sum_w = s1.value();
  const double sum_w2 = s2.value();
  McLoglik out;
  out.loglik = max_lw + std::log(sum_w) - std::log(static_cast<double>(draws));
  const double mean_w = sum_w / draws;
  const double var_w = std::max(0.0, sum_w2 / draws - mean_w * mean_w);
  out.se = std::sqrt(var_w / draws) / mean_w;
  out.ess = sum_w * sum_w / std::max(sum_w2, 1e-300);
  return out;
}

}  // namespace

ImportanceProposal importance_proposal(const SubjectRecord& subject,
                                       const BridgeModelSpec& spec,
                                       double inflation) {
  const SubjectPrep prep(subject, spec);
  const ProposalPrep prop =
      make_proposal(prep, subject.outcomes, subject.id, inflation);
  return {prop.mean, prop.cov, prop.iterations};
}

double subject_loglik_mc(const SubjectRecord& subject,
                         const BridgeModelSpec& spec, int draws, Rng& rng,
                         double inflation) {
  return mc_estimate(subject, spec, draws, &rng, nullptr, inflation).loglik;
}

McLoglik subject_loglik_mc_detail(const SubjectRecord& subject,
                                  const BridgeModelSpec& spec, int draws,
                                  Rng& rng, double inflation) {
  return mc_estimate(subject, spec, draws, &rng, nullptr, inflation);
}

CrnCache::CrnCache(const Dataset& dataset, std::uint64_t seed, int max_draws,
                   bool single_intercept)
    : seed_(seed), max_draws_(max_draws), single_(single_intercept) {
  streams_.reserve(dataset.size());
  for (const auto& subject : dataset) {
    const int dim = single_intercept ? 1 : subject.occasions();
    Rng rng = subject_stream(seed, subject.id);
    std::vector<double> stream(static_cast<std::size_t>(max_draws) *
                               static_cast<std::size_t>(dim));
    for (double& v : stream) v = rng.normal();
    streams_.push_back(std::move(stream));
  }
}

double subject_loglik_quadrature(const SubjectRecord& subject,
                                 const BridgeModelSpec& spec,
                                 int nodes_per_dim) {
  const SubjectPrep prep(subject, spec);
  const int d = prep.dim;
  if (d > 4) {
    throw std::domain_error(
        "subject_loglik_quadrature: tensor rule is limited to 4 dimensions");
  }
  int n = nodes_per_dim;
  if (n <= 0) n = d <= 2 ? 64 : (d == 3 ? 48 : 32);

  const GaussLegendre& gl = GaussLegendre::rule(n);
  constexpr double kHalfWidth = 8.5;
  std::vector<double> node(static_cast<std::size_t>(n));
  std::vector<double> wphi(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    node[static_cast<std::size_t>(k)] = kHalfWidth * gl.nodes[static_cast<std::size_t>(k)];
    wphi[static_cast<std::size_t>(k)] =
        kHalfWidth * gl.weights[static_cast<std::size_t>(k)] *
        normal_pdf(node[static_cast<std::size_t>(k)]);
  }

  NeumaierSum total;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  double zbuf[kMaxDim];
  double xbuf[kMaxDim];
  while (true) {
    double weight = 1.0;
    for (int j = 0; j < d; ++j) {
      weight *= wphi[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      xbuf[j] = node[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
    }
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int l = 0; l <= j; ++l) acc += prep.chol(j, l) * xbuf[l];
      zbuf[j] = acc;
    }
    const double ll =
        bernoulli_loglik(prep, subject.outcomes, zbuf, nullptr, nullptr);
    total.add(weight * std::exp(ll));
    int j = 0;
    for (; j < d; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < n) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
    if (j == d) break;
  }
  return std::log(total.value());
}

namespace {

double sum_subject_values(const Dataset& dataset,
                          const std::vector<double>& values) {
  // Sort by (id, value) so the compensated sum is invariant to subject order
  // and thread count.
  const int n = static_cast<int>(dataset.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ida = dataset[static_cast<std::size_t>(a)].id;
    const auto& idb = dataset[static_cast<std::size_t>(b)].id;
    if (ida != idb) return ida < idb;
    return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
  });
  NeumaierSum total;
  for (int i : order) total.add(values[static_cast<std::size_t>(i)]);
  return total.value();
}

}  // namespace

double dataset_loglik(const Dataset& dataset, const BridgeModelSpec& spec,
                      const LoglikOptions& options) {
  if (dataset.empty()) throw DataError("dataset_loglik: empty dataset");
  const int n = static_cast<int>(dataset.size());
  std::vector<double> values(static_cast<std::size_t>(n));
  parallel_for(n, options.threads, [&](int i) {
    Rng rng = subject_stream(options.seed, dataset[static_cast<std::size_t>(i)].id);
    values[static_cast<std::size_t>(i)] =
        subject_loglik_mc(dataset[static_cast<std::size_t>(i)], spec,
                          options.draws, rng, options.inflation);
  });
  return sum_subject_values(dataset, values);
}

double dataset_loglik_cached(const Dataset& dataset,
                             const BridgeModelSpec& spec,
                             const LoglikOptions& options,
                             const CrnCache& cache) {
  if (dataset.empty()) throw DataError("dataset_loglik: empty dataset");
  if (options.draws > cache.max_draws()) {
    throw std::domain_error("dataset_loglik_cached: cache holds fewer draws");
  }
  if (options.seed != cache.seed() ||
      cache.single_intercept() !=
          (spec.structure.kind == AssociationKind::SingleIntercept)) {
    throw std::domain_error("dataset_loglik_cached: cache mismatch");
  }
  const int n = static_cast<int>(dataset.size());
  std::vector<double> values(static_cast<std::size_t>(n));
  parallel_for(n, options.threads, [&](int i) {
    values[static_cast<std::size_t>(i)] =
        mc_estimate(dataset[static_cast<std::size_t>(i)], spec, options.draws,
                    nullptr, cache.stream(i), options.inflation)
            .loglik;
  });
  return sum_subject_values(dataset, values);
}

}  // namespace bglmm
