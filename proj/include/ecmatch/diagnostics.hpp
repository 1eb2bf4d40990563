#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecmatch/dataset.hpp"
#include "ecmatch/matcher.hpp"

namespace ecmatch {

struct SmdEntry {
  std::string covariate;
  double before = 0.0;       // RCT vs. full EC pool
  bool before_defined = true;
  double after = 0.0;        // RCT vs. matched EC set (when a match is given)
  bool after_defined = true;
  bool has_after = false;
};

struct ScoreSummary {
  std::string group;  // "RCT", "EC", "EC_matched"
  int n = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct BalanceReport {
  std::vector<SmdEntry> smd;
  std::vector<ScoreSummary> score_summaries;  // probability scale
  double eta = 0.01;
  int overlap_violations = 0;  // RCT subjects with Pr(trial|X) > 1 - eta
  bool overlap_ok = true;
};

// Balance and overlap diagnostics. `logit_scores` holds one logit-scale
// selection score per dataset row; `match` adds after-matching columns.
// Reads covariates, sources and scores only — never treatment arms — so it
// can run before unblinding.
BalanceReport balance_report(const TrialDataset& ds,
                             const std::vector<double>& logit_scores,
                             const MatchResult* match = nullptr,
                             double eta = 0.01);

// Standardized mean difference with pooled-variance denominator
// (m1 − m2) / sqrt((v1 + v2)/2). Returns nullopt when the pooled variance is
// zero and the means differ (non-computable); 0 when both groups are
// constant and equal.
std::optional<double> standardized_mean_difference(double mean1, double var1,
                                                   double mean2, double var2);

void write_balance_report(std::ostream& out, const BalanceReport& report);

}  // namespace ecmatch
