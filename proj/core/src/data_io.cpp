#include "bglmm/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bglmm/errors.hpp"
#include "bglmm/glm.hpp"

namespace bglmm {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "--";
}

double parse_number(const std::string& s, const std::string& what,
                    const std::string& origin, long line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(origin + ":" + std::to_string(line_no) +
                    ": cannot parse " + what + " value '" + s + "'");
  }
}

struct RawRow {
  double time;
  int outcome;
  std::vector<double> covariates;
};

}  // namespace

LongDataset read_long_csv(std::istream& in, const CsvColumns& columns,
                          const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(origin + ": no rows (empty file)");
  }
  const std::vector<std::string> header = split_csv_line(line);
  int subject_col = -1, time_col = -1, outcome_col = -1;
  std::vector<int> covariate_cols;
  LongDataset data;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const std::string& name = header[static_cast<std::size_t>(i)];
    if (name == columns.subject) {
      subject_col = i;
    } else if (name == columns.time) {
      time_col = i;
    } else if (name == columns.outcome) {
      outcome_col = i;
    } else {
      covariate_cols.push_back(i);
      data.covariate_names.push_back(name);
    }
  }
  if (subject_col < 0) {
    throw DataError(origin + ": missing subject column '" + columns.subject + "'");
  }
  if (time_col < 0) {
    throw DataError(origin + ": missing time column '" + columns.time + "'");
  }
  if (outcome_col < 0) {
    throw DataError(origin + ": missing outcome column '" + columns.outcome + "'");
  }

  std::map<std::string, std::map<double, RawRow>> by_subject;
  std::vector<std::string> order;
  long line_no = 1;
  long data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(origin + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    ++data_rows;
    const std::string id = fields[static_cast<std::size_t>(subject_col)];
    if (id.empty()) {
      throw DataError(origin + ":" + std::to_string(line_no) +
                      ": empty subject id");
    }
    const double time = parse_number(fields[static_cast<std::size_t>(time_col)],
                                     "time", origin, line_no);
    const std::string outcome_str = fields[static_cast<std::size_t>(outcome_col)];

    auto& rows = by_subject[id];
    if (rows.empty() && by_subject.size() > order.size()) order.push_back(id);
    if (rows.count(time) > 0) {
      throw DataError(origin + ":" + std::to_string(line_no) +
                      ": duplicate (subject, time) = ('" + id + "', " +
                      fields[static_cast<std::size_t>(time_col)] + ")");
    }

    if (is_missing_token(outcome_str)) {
      // Missing outcome: occasion dropped (handled as MAR downstream), but
      // the (subject, time) key still may not repeat.
      rows.emplace(time, RawRow{time, -1, {}});
      continue;
    }
    const double y = parse_number(outcome_str, "outcome", origin, line_no);
    if (y != 0.0 && y != 1.0) {
      throw DataError(origin + ":" + std::to_string(line_no) +
                      ": outcome must be 0 or 1, got '" + outcome_str + "'");
    }
    RawRow row;
    row.time = time;
    row.outcome = static_cast<int>(y);
    row.covariates.reserve(covariate_cols.size());
    for (int c : covariate_cols) {
      const std::string& field = fields[static_cast<std::size_t>(c)];
      if (is_missing_token(field)) {
        throw DataError(origin + ":" + std::to_string(line_no) +
                        ": missing covariate '" +
                        data.covariate_names[row.covariates.size()] +
                        "' on a retained row");
      }
      row.covariates.push_back(parse_number(field, "covariate", origin, line_no));
    }
    rows.insert_or_assign(time, std::move(row));
  }
  if (data_rows == 0) throw DataError(origin + ": no rows");

  for (const std::string& id : order) {
    const auto& rows = by_subject[id];
    LongSubject subj;
    subj.id = id;
    std::vector<const RawRow*> kept;
    for (const auto& [time, row] : rows) {
      if (row.outcome >= 0) kept.push_back(&row);
    }
    if (kept.empty()) continue;  // subject with no observed outcomes
    subj.times.reserve(kept.size());
    subj.outcomes.reserve(kept.size());
    subj.covariates.resize(static_cast<int>(kept.size()),
                           static_cast<int>(data.covariate_names.size()));
    for (std::size_t r = 0; r < kept.size(); ++r) {
      subj.times.push_back(kept[r]->time);
      subj.outcomes.push_back(kept[r]->outcome);
      for (std::size_t c = 0; c < kept[r]->covariates.size(); ++c) {
        subj.covariates(static_cast<int>(r), static_cast<int>(c)) =
            kept[r]->covariates[c];
      }
    }
    data.subjects.push_back(std::move(subj));
  }
  if (data.subjects.empty()) {
    throw DataError(origin + ": no subjects with observed outcomes");
  }
  return data;
}

LongDataset read_long_csv(const std::string& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_long_csv(in, columns, path);
}

namespace {
std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::stod(probe) == v) return probe;
  }
  return buf;
}
}  // namespace

std::string long_csv_string(const LongDataset& data, const CsvColumns& columns) {
  std::ostringstream out;
  out << columns.subject << ',' << columns.time << ',' << columns.outcome;
  for (const auto& name : data.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& subj : data.subjects) {
    for (std::size_t r = 0; r < subj.times.size(); ++r) {
      out << subj.id << ',' << format_number(subj.times[r]) << ','
          << subj.outcomes[r];
      for (int c = 0; c < subj.covariates.cols(); ++c) {
        out << ',' << format_number(subj.covariates(static_cast<int>(r), c));
      }
      out << '\n';
    }
  }
  return out.str();
}

void write_long_csv(const LongDataset& data, const std::string& path,
                    const CsvColumns& columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << long_csv_string(data, columns);
}

BuiltDesign build_design(const LongDataset& data, const DesignSpec& spec) {
  if (data.subjects.empty()) throw DataError("build_design: no subjects");

  // Resolve term names to column producers. The time column participates by
  // its reserved name "time".
  auto column_index = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < data.covariate_names.size(); ++i) {
      if (data.covariate_names[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  struct Term {
    std::string name;
    int col_a;  // -1 = intercept, -2 = time
    int col_b;  // -1 = none (main effect)
  };
  std::vector<Term> terms;
  if (spec.intercept) terms.push_back({"intercept", -1, -1});
  auto resolve = [&](const std::string& name) -> int {
    if (name == "time") return -2;
    const int idx = column_index(name);
    if (idx < 0) throw DesignError("build_design: unknown column '" + name + "'");
    return idx;
  };
  for (const auto& name : spec.covariates) {
    terms.push_back({name, resolve(name), -1});
  }
  for (const auto& inter : spec.interactions) {
    const auto colon = inter.find(':');
    if (colon == std::string::npos) {
      throw DesignError("build_design: interaction '" + inter +
                        "' must be written as a:b");
    }
    const std::string a = trim(inter.substr(0, colon));
    const std::string b = trim(inter.substr(colon + 1));
    terms.push_back({a + ":" + b, resolve(a), resolve(b)});
  }
  if (terms.empty()) throw DesignError("build_design: empty design");

  // Occasion-index lag convention: map times to their rank in the pooled
  // grid of distinct observation times.
  std::vector<double> grid;
  if (spec.lag == LagConvention::OccasionIndex) {
    std::set<double> unique_times;
    for (const auto& subj : data.subjects) {
      unique_times.insert(subj.times.begin(), subj.times.end());
    }
    grid.assign(unique_times.begin(), unique_times.end());
  }
  auto lag_coordinate = [&](double time) -> double {
    if (spec.lag == LagConvention::RealTime) return time;
    const auto it = std::lower_bound(grid.begin(), grid.end(), time);
    return static_cast<double>(it - grid.begin());
  };

  BuiltDesign out;
  for (const auto& term : terms) out.column_names.push_back(term.name);
  out.dataset.reserve(data.subjects.size());
  for (const auto& subj : data.subjects) {
    SubjectRecord rec;
    rec.id = subj.id;
    const int m = static_cast<int>(subj.times.size());
    rec.outcomes = subj.outcomes;
    rec.times.reserve(static_cast<std::size_t>(m));
    for (double t : subj.times) rec.times.push_back(lag_coordinate(t));
    rec.x.resize(m, static_cast<int>(terms.size()));
    for (int r = 0; r < m; ++r) {
      auto value_of = [&](int col) -> double {
        if (col == -1) return 1.0;
        if (col == -2) return subj.times[static_cast<std::size_t>(r)];
        return subj.covariates(r, col);
      };
      for (std::size_t k = 0; k < terms.size(); ++k) {
        const Term& term = terms[k];
        double v = value_of(term.col_a);
        if (term.col_b != -1) v *= value_of(term.col_b);
        rec.x(r, static_cast<int>(k)) = v;
      }
    }
    out.dataset.push_back(std::move(rec));
  }

  if (spec.standardize) {
    const int p = static_cast<int>(terms.size());
    out.centers.assign(static_cast<std::size_t>(p), 0.0);
    out.scales.assign(static_cast<std::size_t>(p), 1.0);
    long long n = 0;
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(p);
    for (const auto& rec : out.dataset) {
      for (int r = 0; r < rec.x.rows(); ++r) {
        sums += rec.x.row(r).transpose();
        sq += rec.x.row(r).cwiseProduct(rec.x.row(r)).transpose();
        ++n;
      }
    }
    for (int k = 0; k < p; ++k) {
      const double mean = sums(k) / static_cast<double>(n);
      const double var = sq(k) / static_cast<double>(n) - mean * mean;
      if (var > 1e-12) {  // leave constant columns (intercept) untouched
        out.centers[static_cast<std::size_t>(k)] = mean;
        out.scales[static_cast<std::size_t>(k)] = std::sqrt(var);
      }
    }
    for (auto& rec : out.dataset) {
      for (int r = 0; r < rec.x.rows(); ++r) {
        for (int k = 0; k < p; ++k) {
          rec.x(r, k) = (rec.x(r, k) - out.centers[static_cast<std::size_t>(k)]) /
                        out.scales[static_cast<std::size_t>(k)];
        }
      }
    }
  }

  // Rank check on the pooled rows.
  DatasetSummary s = summarize(out.dataset);
  Eigen::MatrixXd pooled(s.n_observations, static_cast<int>(terms.size()));
  int row = 0;
  for (const auto& rec : out.dataset) {
    for (int r = 0; r < rec.x.rows(); ++r) pooled.row(row++) = rec.x.row(r);
  }
  check_full_rank(pooled, out.column_names);
  return out;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& in, const std::string& origin) {
  ScenarioConfig config;
  config.assoc_values.clear();
  bool phi_seen = false;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(origin + ":" + std::to_string(line_no) +
                      ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto as_number = [&](const std::string& v) {
      return parse_number(v, key, origin, line_no);
    };
    try {
      if (key == "true_model") {
        if (value == "bridge") {
          config.true_model = TrueModel::Bridge;
        } else if (value == "bahadur") {
          config.true_model = TrueModel::Bahadur;
        } else {
          throw DataError(origin + ":" + std::to_string(line_no) +
                          ": true_model must be bridge or bahadur");
        }
      } else if (key == "n_subjects") {
        config.n_subjects = static_cast<int>(as_number(value));
      } else if (key == "occasions") {
        config.occasions = static_cast<int>(as_number(value));
      } else if (key == "treat_fraction") {
        config.treat_fraction = as_number(value);
      } else if (key == "beta") {
        const auto parts = split_list(value);
        if (parts.size() != 3) {
          throw DataError(origin + ":" + std::to_string(line_no) +
                          ": beta needs 3 values (intercept, time, group)");
        }
        for (int i = 0; i < 3; ++i) config.beta(i) = as_number(parts[static_cast<std::size_t>(i)]);
      } else if (key == "assoc_values") {
        for (const auto& part : split_list(value)) {
          config.assoc_values.push_back(as_number(part));
        }
      } else if (key == "phi") {
        config.phi = as_number(value);
        phi_seen = true;
      } else if (key == "gamma3") {
        config.gamma3 = as_number(value);
      } else if (key == "replications") {
        config.replications = static_cast<int>(as_number(value));
      } else if (key == "base_seed") {
        config.base_seed = static_cast<std::uint64_t>(as_number(value));
      } else if (key == "estimators") {
        config.estimators.clear();
        for (const auto& part : split_list(value)) {
          if (part == "bridge-ml") {
            config.estimators.push_back(Estimator::BridgeML);
          } else if (part == "bahadur-ml") {
            config.estimators.push_back(Estimator::BahadurML);
          } else if (part == "gee") {
            config.estimators.push_back(Estimator::Gee);
          } else {
            throw DataError(origin + ":" + std::to_string(line_no) +
                            ": unknown estimator '" + part + "'");
          }
        }
      } else if (key == "draws_schedule") {
        config.bridge_fit.schedule = DrawSchedule::parse(value);
      } else if (key == "max_iterations") {
        config.bridge_fit.max_outer_iterations = static_cast<int>(as_number(value));
      } else if (key == "threads") {
        config.threads = static_cast<int>(as_number(value));
      } else {
        throw DataError(origin + ":" + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
      }
    } catch (const std::domain_error& e) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (config.true_model == TrueModel::Bridge && !phi_seen) {
    throw DataError(origin +
                    ": bridge scenarios must state phi explicitly "
                    "(the common choice in this repo's examples is 0.7)");
  }
  config.validate();
  return config;
}

ScenarioConfig read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_scenario(in, path);
}

}  // namespace bglmm
