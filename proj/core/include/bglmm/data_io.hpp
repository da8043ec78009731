#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bglmm/data.hpp"
#include "bglmm/simulate.hpp"

namespace bglmm {

// Long-format table keyed by (subject, time) with named numeric covariate
// columns; outcomes may be missing ("", "NA" or "--"), covariates may not be
// missing on rows whose outcome is observed.
struct LongSubject {
  std::string id;
  std::vector<double> times;       // sorted, strictly increasing
  std::vector<int> outcomes;
  Eigen::MatrixXd covariates;      // one row per retained occasion
};

struct LongDataset {
  std::vector<std::string> covariate_names;
  std::vector<LongSubject> subjects;  // in order of first appearance
};

struct CsvColumns {
  std::string subject = "id";
  std::string time = "time";
  std::string outcome = "y";
};

// Reads a long-format CSV. Rows with a missing outcome are dropped (the MAR
// contribution is handled downstream by subsetting the correlation matrix).
// Errors carry 1-based line numbers.
LongDataset read_long_csv(const std::string& path, const CsvColumns& columns = {});
LongDataset read_long_csv(std::istream& in, const CsvColumns& columns,
                          const std::string& origin);

// Writes the same layout back; read/write round-trips are semantically
// identical (same subjects, occasions and values).
void write_long_csv(const LongDataset& data, const std::string& path,
                    const CsvColumns& columns = {});
std::string long_csv_string(const LongDataset& data,
                            const CsvColumns& columns = {});

enum class LagConvention { OccasionIndex, RealTime };

// Design request: which columns enter the model, in order, plus pairwise
// interactions written as "a:b" over covariate columns or the time column.
struct DesignSpec {
  bool intercept = true;
  std::vector<std::string> covariates;     // column names; may include time
  std::vector<std::string> interactions;   // "a:b"
  bool standardize = false;                // center/scale non-constant terms
  LagConvention lag = LagConvention::OccasionIndex;
};

struct BuiltDesign {
  Dataset dataset;
  std::vector<std::string> column_names;
  // Present when standardize was requested: per-column centers and scales.
  std::vector<double> centers;
  std::vector<double> scales;
};

// Materializes the model dataset: builds covariate rows (intercept, columns,
// interactions), maps subject times to correlation coordinates per the lag
// convention, and checks the design for full rank.
BuiltDesign build_design(const LongDataset& data, const DesignSpec& spec);

// Key-value scenario file (keys documented in the README); '#' comments.
ScenarioConfig read_scenario_file(const std::string& path);
ScenarioConfig parse_scenario(std::istream& in, const std::string& origin);

}  // namespace bglmm
