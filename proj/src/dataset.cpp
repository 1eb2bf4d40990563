#include "ecmatch/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ecmatch/errors.hpp"
#include "ecmatch/textio.hpp"

namespace ecmatch {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

TrialDataset TrialDataset::build(std::vector<Subject> subjects,
                                 std::vector<std::string> covariate_names) {
  TrialDataset ds;
  ds.subjects = std::move(subjects);
  ds.covariate_names = std::move(covariate_names);

  const int dim = ds.covariate_dim();
  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(ds.subjects.size());

  int max_arm = 0;
  for (int row = 0; row < static_cast<int>(ds.subjects.size()); ++row) {
    const Subject& s = ds.subjects[row];
    require(!s.id.empty(), "subject id must be non-empty (row " +
                               std::to_string(row) + ")");
    require(seen_ids.insert(s.id).second, "duplicate subject id '" + s.id + "'");
    require(std::isfinite(s.outcome),
            "non-finite outcome for subject '" + s.id + "'");
    require(static_cast<int>(s.covariates.size()) == dim,
            "subject '" + s.id + "' has " +
                std::to_string(s.covariates.size()) + " covariates, expected " +
                std::to_string(dim));
    for (double x : s.covariates) {
      require(std::isfinite(x),
              "non-finite covariate for subject '" + s.id + "'");
    }
    if (s.source == Source::RCT) {
      require(s.arm >= 0, "negative arm for subject '" + s.id + "'");
      max_arm = std::max(max_arm, s.arm);
      ds.rct_rows.push_back(row);
    } else {
      require(s.arm == 0, "external-control subject '" + s.id +
                              "' must be in control (arm 0)");
      ds.ec_rows.push_back(row);
    }
  }
  require(!ds.rct_rows.empty(), "dataset has no trial subjects");

  ds.k = max_arm;
  ds.n_r = static_cast<int>(ds.rct_rows.size());
  ds.m_e = static_cast<int>(ds.ec_rows.size());
  ds.arm_counts.assign(ds.k + 1, 0);
  for (int row : ds.rct_rows) ++ds.arm_counts[ds.subjects[row].arm];
  for (int a = 0; a <= ds.k; ++a) {
    require(ds.arm_counts[a] > 0, "trial arm " + std::to_string(a) +
                                      " has no subjects");
  }
  return ds;
}

namespace {

int find_column(const std::vector<std::string>& header, const std::string& name,
                bool required) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    if (required) throw ValidationError("missing required column '" + name + "'");
    return -1;
  }
  return static_cast<int>(it - header.begin());
}

}  // namespace

TrialDataset load_dataset(std::istream& in, const ColumnSchema& schema) {
  std::string line;
  std::vector<std::string> header;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split(t, ',');
    for (auto& h : header) h = std::string(trim(h));
    break;
  }
  if (header.empty()) throw ValidationError("dataset is empty (no header row)");

  const int id_col = find_column(header, schema.id_column, true);
  const int source_col = find_column(header, schema.source_column, true);
  const int arm_col = find_column(header, schema.arm_column, !schema.blinded);
  const int outcome_col = find_column(header, schema.outcome_column, true);

  std::vector<int> cov_cols;
  std::vector<std::string> cov_names;
  if (schema.covariate_columns.empty()) {
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
      if (c == id_col || c == source_col || c == arm_col || c == outcome_col)
        continue;
      cov_cols.push_back(c);
      cov_names.push_back(header[c]);
    }
  } else {
    for (const std::string& name : schema.covariate_columns) {
      cov_cols.push_back(find_column(header, name, true));
      cov_names.push_back(name);
    }
  }

  std::vector<Subject> subjects;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::vector<std::string> fields = split(t, ',');
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (fields.size() != header.size()) {
      throw ValidationError("row has " + std::to_string(fields.size()) +
                            " fields, header has " +
                            std::to_string(header.size()) + where);
    }
    Subject s;
    s.id = std::string(trim(fields[id_col]));
    const std::string source_text(trim(fields[source_col]));
    const auto source_value = parse_int(source_text);
    if (!source_value || (*source_value != 0 && *source_value != 1)) {
      throw ValidationError("source must be 0 (external) or 1 (trial), got '" +
                            source_text + "'" + where);
    }
    s.source = *source_value == 1 ? Source::RCT : Source::EC;

    const std::string arm_text(
        (arm_col >= 0 && !schema.blinded) ? trim(fields[arm_col])
                                          : std::string_view());
    if (arm_text.empty()) {
      s.arm = 0;  // external controls may leave arm blank
      if (s.source == Source::RCT && !schema.blinded) {
        throw ValidationError("trial subject '" + s.id + "' has blank arm" +
                              where);
      }
    } else {
      const auto arm_value = parse_int(arm_text);
      if (!arm_value) {
        throw ValidationError("bad arm value '" + arm_text + "'" + where);
      }
      s.arm = static_cast<int>(*arm_value);
    }

    const std::string outcome_text(trim(fields[outcome_col]));
    const auto outcome_value = parse_double(outcome_text);
    if (!outcome_value) {
      throw ValidationError("bad outcome value '" + outcome_text + "'" + where);
    }
    s.outcome = *outcome_value;
    s.covariates.reserve(cov_cols.size());
    for (std::size_t j = 0; j < cov_cols.size(); ++j) {
      const std::string text(trim(fields[cov_cols[j]]));
      const auto v = parse_double(text);
      if (!v) {
        throw ValidationError("bad value '" + text + "' for covariate '" +
                              cov_names[j] + "'" + where);
      }
      s.covariates.push_back(*v);
    }
    subjects.push_back(std::move(s));
  }
  return TrialDataset::build(std::move(subjects), std::move(cov_names));
}

TrialDataset load_dataset(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  return load_dataset(in, schema);
}

void save_dataset(std::ostream& out, const TrialDataset& ds) {
  out << "id,source,arm,outcome";
  for (const auto& name : ds.covariate_names) out << ',' << name;
  out << '\n';
  for (const Subject& s : ds.subjects) {
    out << s.id << ',' << (s.source == Source::RCT ? 1 : 0) << ',' << s.arm
        << ',' << fmt_double(s.outcome);
    for (double x : s.covariates) out << ',' << fmt_double(x);
    out << '\n';
  }
}

void save_dataset(const std::string& path, const TrialDataset& ds) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  save_dataset(out, ds);
}

std::vector<GroupSummary> summarize(const TrialDataset& ds) {
  const int dim = ds.covariate_dim();
  auto accumulate = [&](const std::vector<int>& rows) {
    GroupSummary g;
    g.n = static_cast<int>(rows.size());
    if (g.n == 0) return g;
    g.covariate_means.assign(dim, 0.0);
    for (int row : rows) {
      const Subject& s = ds.subjects[row];
      g.outcome_mean += s.outcome;
      for (int j = 0; j < dim; ++j) g.covariate_means[j] += s.covariates[j];
    }
    g.outcome_mean /= g.n;
    for (double& m : g.covariate_means) m /= g.n;
    return g;
  };

  std::vector<GroupSummary> rows;
  {
    GroupSummary g = accumulate(ds.rct_rows);
    g.scope = "source";
    g.label = "RCT";
    rows.push_back(std::move(g));
  }
  {
    GroupSummary g = accumulate(ds.ec_rows);
    g.scope = "source";
    g.label = "EC";
    rows.push_back(std::move(g));
  }
  for (int a = 0; a <= ds.k; ++a) {
    std::vector<int> arm_rows;
    for (int row : ds.rct_rows) {
      if (ds.subjects[row].arm == a) arm_rows.push_back(row);
    }
    GroupSummary g = accumulate(arm_rows);
    g.scope = "arm";
    g.label = std::to_string(a);
    rows.push_back(std::move(g));
  }
  return rows;
}

void write_summary(std::ostream& out, const TrialDataset& ds,
                   const std::vector<GroupSummary>& rows) {
  out << "scope,label,n,outcome_mean";
  for (const auto& name : ds.covariate_names) out << ",mean_" << name;
  out << '\n';
  for (const GroupSummary& g : rows) {
    out << g.scope << ',' << g.label << ',' << g.n << ','
        << (g.n > 0 ? fmt_double(g.outcome_mean) : std::string());
    for (int j = 0; j < ds.covariate_dim(); ++j) {
      out << ',';
      if (g.n > 0) out << fmt_double(g.covariate_means[j]);
    }
    out << '\n';
  }
}

}  // namespace ecmatch
