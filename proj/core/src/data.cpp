#include "bglmm/data.hpp"

#include <cmath>

#include "bglmm/errors.hpp"

namespace bglmm {

void validate_subject(const SubjectRecord& subject) {
  const int m = subject.occasions();
  if (m < 1) {
    throw DataError("subject '" + subject.id + "': no observed occasions");
  }
  if (static_cast<int>(subject.outcomes.size()) != m ||
      static_cast<int>(subject.x.rows()) != m) {
    throw DataError("subject '" + subject.id +
                    "': times, outcomes and covariate rows must align");
  }
  for (int i = 1; i < m; ++i) {
    if (!(subject.times[static_cast<std::size_t>(i)] >
          subject.times[static_cast<std::size_t>(i - 1)])) {
      throw DataError("subject '" + subject.id +
                      "': times must be strictly increasing");
    }
  }
  for (int y : subject.outcomes) {
    if (y != 0 && y != 1) {
      throw DataError("subject '" + subject.id + "': outcomes must be 0 or 1");
    }
  }
  if (!subject.x.allFinite()) {
    throw DataError("subject '" + subject.id + "': covariates must be finite");
  }
}

void validate_dataset(const Dataset& dataset) {
  if (dataset.empty()) throw DataError("dataset is empty");
  const auto cols = dataset.front().x.cols();
  for (const auto& s : dataset) {
    validate_subject(s);
    if (s.x.cols() != cols) {
      throw DataError("subject '" + s.id +
                      "': covariate dimension differs from the rest of the dataset");
    }
  }
}

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary out;
  out.n_subjects = static_cast<int>(dataset.size());
  for (const auto& s : dataset) {
    out.n_observations += s.occasions();
    out.m_max = std::max(out.m_max, s.occasions());
  }
  if (!dataset.empty()) {
    out.n_covariates = static_cast<int>(dataset.front().x.cols());
  }
  return out;
}

}  // namespace bglmm
