#include "ecmatch/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ecmatch/errors.hpp"
#include "ecmatch/propensity.hpp"
#include "ecmatch/stats.hpp"
#include "ecmatch/textio.hpp"

namespace ecmatch {

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments covariate_moments(const TrialDataset& ds, const std::vector<int>& rows,
                          int j) {
  std::vector<double> x;
  x.reserve(rows.size());
  for (int row : rows) x.push_back(ds.subjects[row].covariates[j]);
  Moments m;
  m.mean = mean(x);
  m.variance = x.size() >= 2 ? sample_variance(x) : 0.0;
  return m;
}

ScoreSummary score_summary(const std::string& group,
                           std::vector<double> probs) {
  ScoreSummary s;
  s.group = group;
  s.n = static_cast<int>(probs.size());
  if (probs.empty()) return s;
  std::sort(probs.begin(), probs.end());
  s.min = probs.front();
  s.q1 = quantile_sorted(probs, 0.25);
  s.median = quantile_sorted(probs, 0.5);
  s.q3 = quantile_sorted(probs, 0.75);
  s.max = probs.back();
  return s;
}

std::vector<double> probabilities_at(const std::vector<double>& logit_scores,
                                     const std::vector<int>& rows) {
  std::vector<double> p;
  p.reserve(rows.size());
  for (int row : rows) p.push_back(logistic_probability(logit_scores[row]));
  return p;
}

}  // namespace

std::optional<double> standardized_mean_difference(double mean1, double var1,
                                                   double mean2, double var2) {
  const double pooled = (var1 + var2) / 2.0;
  if (pooled <= 0.0) {
    if (mean1 == mean2) return 0.0;
    return std::nullopt;  // constant groups with different means
  }
  return (mean1 - mean2) / std::sqrt(pooled);
}

BalanceReport balance_report(const TrialDataset& ds,
                             const std::vector<double>& logit_scores,
                             const MatchResult* match, double eta) {
  if (logit_scores.size() != ds.subjects.size()) {
    throw ValidationError("diagnostics: need one score per dataset row");
  }
  if (!(eta > 0.0 && eta < 1.0)) {
    throw ValidationError("diagnostics: eta must lie strictly in (0, 1)");
  }

  std::vector<int> matched_rows;
  if (match != nullptr) {
    matched_rows.reserve(match->pairs.size());
    for (const MatchPair& p : match->pairs) matched_rows.push_back(p.ec_row);
  }

  BalanceReport report;
  report.eta = eta;

  for (int j = 0; j < ds.covariate_dim(); ++j) {
    SmdEntry entry;
    entry.covariate = ds.covariate_names[j];
    const Moments rct = covariate_moments(ds, ds.rct_rows, j);
    const Moments pool = covariate_moments(ds, ds.ec_rows, j);
    if (auto smd = standardized_mean_difference(rct.mean, rct.variance,
                                                pool.mean, pool.variance)) {
      entry.before = *smd;
    } else {
      entry.before_defined = false;
    }
    if (match != nullptr) {
      entry.has_after = true;
      const Moments matched = covariate_moments(ds, matched_rows, j);
      if (auto smd = standardized_mean_difference(
              rct.mean, rct.variance, matched.mean, matched.variance)) {
        entry.after = *smd;
      } else {
        entry.after_defined = false;
      }
    }
    report.smd.push_back(std::move(entry));
  }

  report.score_summaries.push_back(
      score_summary("RCT", probabilities_at(logit_scores, ds.rct_rows)));
  report.score_summaries.push_back(
      score_summary("EC", probabilities_at(logit_scores, ds.ec_rows)));
  if (match != nullptr) {
    report.score_summaries.push_back(score_summary(
        "EC_matched", probabilities_at(logit_scores, matched_rows)));
  }

  const double bound = 1.0 - eta;
  for (int row : ds.rct_rows) {
    if (logistic_probability(logit_scores[row]) > bound) {
      ++report.overlap_violations;
    }
  }
  report.overlap_ok = report.overlap_violations == 0;
  return report;
}

void write_balance_report(std::ostream& out, const BalanceReport& report) {
  out << "kind,name,value\n";
  for (const SmdEntry& e : report.smd) {
    out << "smd_before," << e.covariate << ','
        << (e.before_defined ? fmt_double(e.before) : std::string("NA"))
        << '\n';
    if (e.has_after) {
      out << "smd_after," << e.covariate << ','
          << (e.after_defined ? fmt_double(e.after) : std::string("NA"))
          << '\n';
    }
  }
  for (const ScoreSummary& s : report.score_summaries) {
    out << "score_n," << s.group << ',' << s.n << '\n';
    out << "score_min," << s.group << ',' << fmt_double(s.min) << '\n';
    out << "score_q1," << s.group << ',' << fmt_double(s.q1) << '\n';
    out << "score_median," << s.group << ',' << fmt_double(s.median) << '\n';
    out << "score_q3," << s.group << ',' << fmt_double(s.q3) << '\n';
    out << "score_max," << s.group << ',' << fmt_double(s.max) << '\n';
  }
  out << "overlap_eta,," << fmt_double(report.eta) << '\n';
  out << "overlap_violations,," << report.overlap_violations << '\n';
  out << "overlap_ok,," << (report.overlap_ok ? 1 : 0) << '\n';
}

}  // namespace ecmatch
