#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace bglmm {

// One subject's observed occasions in long form. Occasions with a missing
// outcome are simply absent (missing-at-random handling happens by dropping
// the corresponding rows of the latent correlation matrix downstream).
struct SubjectRecord {
  std::string id;
  std::vector<double> times;  // strictly increasing; used for AR(1) lags
  std::vector<int> outcomes;  // each 0 or 1
  Eigen::MatrixXd x;          // m_i rows of covariates (J columns, J >= 0)

  int occasions() const { return static_cast<int>(times.size()); }
};

using Dataset = std::vector<SubjectRecord>;

// Throws DataError when a record violates its invariants (empty, times not
// strictly increasing, outcome not 0/1, non-finite covariates, row-count
// mismatches).
void validate_subject(const SubjectRecord& subject);

void validate_dataset(const Dataset& dataset);

struct DatasetSummary {
  int n_subjects = 0;
  int n_observations = 0;
  int m_max = 0;
  int n_covariates = 0;
};

DatasetSummary summarize(const Dataset& dataset);

}  // namespace bglmm
