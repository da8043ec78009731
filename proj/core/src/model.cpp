#include "bglmm/model.hpp"

#include "bglmm/stats.hpp"

namespace bglmm {

double conditional_prob(double b, const Eigen::VectorXd& x_row,
                        const BridgeModelSpec& spec) {
  const double xb = spec.beta.size() > 0 ? x_row.dot(spec.beta) : 0.0;
  return expit(b + xb / spec.phi.value());
}

double marginal_prob(const Eigen::VectorXd& x_row,
                     const Eigen::VectorXd& beta) {
  const double xb = beta.size() > 0 ? x_row.dot(beta) : 0.0;
  return expit(xb);
}

}  // namespace bglmm
