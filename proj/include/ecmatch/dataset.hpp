#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ecmatch {

enum class Source : std::uint8_t { EC = 0, RCT = 1 };

struct Subject {
  std::string id;
  Source source = Source::EC;
  int arm = 0;  // 0 = control; external controls are always 0
  double outcome = 0.0;
  std::vector<double> covariates;
};

// A validated trial plus external-control pool. Immutable after build();
// safe to share read-only across parallel workers.
struct TrialDataset {
  std::vector<Subject> subjects;  // input row order preserved
  std::vector<std::string> covariate_names;
  int k = 0;                    // number of active arms
  std::vector<int> arm_counts;  // by arm 0..k, RCT subjects only
  int n_r = 0;                  // total RCT subjects
  int m_e = 0;                  // external-control pool size
  std::vector<int> rct_rows;    // indices into subjects, input order
  std::vector<int> ec_rows;

  int covariate_dim() const { return static_cast<int>(covariate_names.size()); }

  // Validates invariants (unique ids, finite values, consistent covariate
  // dimension, EC in control, no empty arm) and fills the derived fields.
  static TrialDataset build(std::vector<Subject> subjects,
                            std::vector<std::string> covariate_names);
};

struct ColumnSchema {
  std::string id_column = "id";
  std::string source_column = "source";
  std::string arm_column = "arm";
  std::string outcome_column = "outcome";
  // Empty: every remaining header column is a covariate, in header order.
  std::vector<std::string> covariate_columns;
  // Ignore the arm column entirely (it may be absent); all subjects load as
  // arm 0. Used where matching must not see treatment assignments.
  bool blinded = false;
};

TrialDataset load_dataset(std::istream& in, const ColumnSchema& schema = {});
TrialDataset load_dataset(const std::string& path, const ColumnSchema& schema = {});

void save_dataset(std::ostream& out, const TrialDataset& ds);
void save_dataset(const std::string& path, const TrialDataset& ds);

struct GroupSummary {
  std::string scope;  // "source" or "arm"
  std::string label;  // "RCT", "EC", or the arm number
  int n = 0;
  double outcome_mean = 0.0;
  std::vector<double> covariate_means;  // empty when n == 0
};

std::vector<GroupSummary> summarize(const TrialDataset& ds);
void write_summary(std::ostream& out, const TrialDataset& ds,
                   const std::vector<GroupSummary>& rows);

}  // namespace ecmatch
