#include "ecmatch/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ecmatch/errors.hpp"
#include "ecmatch/stats.hpp"

namespace ecmatch {

namespace {

constexpr double kCritical = 1.96;  // normal 97.5% quantile, fixed

void check_arm(const TrialDataset& ds, int arm) {
  if (arm < 1 || arm > ds.k) {
    throw ValidationError("estimator: arm " + std::to_string(arm) +
                          " does not exist (trial has arms 1.." +
                          std::to_string(ds.k) + ")");
  }
}

void check_w(double w) {
  if (!(w > 0.0 && w < 1.0)) {
    throw ValidationError("estimator: w must lie strictly in (0, 1)");
  }
}

std::vector<int> arm_rows(const TrialDataset& ds, int arm) {
  std::vector<int> rows;
  for (int row : ds.rct_rows) {
    if (ds.subjects[row].arm == arm) rows.push_back(row);
  }
  return rows;
}

void check_match(const TrialDataset& ds, const MatchResult& match) {
  if (match.pairs.empty()) {
    throw ValidationError("estimator: match result has no pairs");
  }
  if (static_cast<int>(match.pairs.size()) != ds.n_r) {
    throw ValidationError(
        "estimator: match result does not cover the entire trial");
  }
}

std::vector<double> outcomes_at(const TrialDataset& ds,
                                const std::vector<int>& rows) {
  std::vector<double> y;
  y.reserve(rows.size());
  for (int row : rows) y.push_back(ds.subjects[row].outcome);
  return y;
}

// Sample variance of the concatenation of two outcome groups treated as one.
double pooled_group_variance(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> all;
  all.reserve(a.size() + b.size());
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  if (all.size() < 2) {
    throw ValidationError(
        "estimator: combined control group needs at least two subjects");
  }
  return sample_variance(all);
}

}  // namespace

ArmSummary summarize_outcomes(const TrialDataset& ds,
                              const std::vector<int>& rows,
                              bool require_variance) {
  ArmSummary s;
  s.n = static_cast<int>(rows.size());
  if (s.n == 0) throw ValidationError("estimator: empty subject group");
  const std::vector<double> y = outcomes_at(ds, rows);
  s.mean = mean(y);
  if (require_variance) {
    if (s.n < 2) {
      throw ValidationError(
          "estimator: variance needs at least two subjects in the group");
    }
    s.variance = sample_variance(y);
  }
  return s;
}

std::string method_name(EstimateMethod method) {
  switch (method) {
    case EstimateMethod::NewSimple: return "new_simple";
    case EstimateMethod::NewBootstrap: return "new_bootstrap";
    case EstimateMethod::Nc: return "nc";
    case EstimateMethod::Raw: return "raw";
  }
  return "unknown";
}

double weighted_point(double arm_mean, double cc_mean, double ec_mean,
                      double w) {
  return arm_mean - (w * cc_mean + (1.0 - w) * ec_mean);
}

double simple_se_value(double s2_a, int n_a, double s2_0, int n_0, int n_e,
                       double w) {
  if (n_a < 1 || n_0 < 1 || n_e < 1) {
    throw ValidationError("estimator: group sizes must be positive");
  }
  const double variance =
      s2_a / n_a + (w * w / n_0 + (1.0 - w) * (1.0 - w) / n_e) * s2_0;
  return std::sqrt(variance);
}

std::pair<double, double> confidence_interval(double point, double se) {
  if (se < 0.0 || std::isnan(se)) {
    throw ValidationError("estimator: se must be nonnegative");
  }
  return {point - kCritical * se, point + kCritical * se};
}

double weighted_estimate(const TrialDataset& ds, const MatchResult& match,
                         int arm, double w) {
  check_arm(ds, arm);
  check_w(w);
  check_match(ds, match);

  const ArmSummary at = summarize_outcomes(ds, arm_rows(ds, arm), false);
  const ArmSummary cc = summarize_outcomes(ds, arm_rows(ds, 0), false);
  std::vector<int> ec_rows;
  ec_rows.reserve(match.pairs.size());
  for (const MatchPair& p : match.pairs) ec_rows.push_back(p.ec_row);
  const ArmSummary ec = summarize_outcomes(ds, ec_rows, false);
  return weighted_point(at.mean, cc.mean, ec.mean, w);
}

double simple_se(const TrialDataset& ds, const MatchResult& match, int arm,
                 double w) {
  check_arm(ds, arm);
  check_w(w);
  check_match(ds, match);

  const std::vector<int> a_rows = arm_rows(ds, arm);
  if (a_rows.size() < 2) {
    throw ValidationError("estimator: arm needs at least two subjects");
  }
  const double s2_a = sample_variance(outcomes_at(ds, a_rows));

  const std::vector<double> cc = outcomes_at(ds, arm_rows(ds, 0));
  std::vector<int> ec_rows;
  ec_rows.reserve(match.pairs.size());
  for (const MatchPair& p : match.pairs) ec_rows.push_back(p.ec_row);
  const std::vector<double> ec = outcomes_at(ds, ec_rows);
  const double s2_0 = pooled_group_variance(cc, ec);

  return simple_se_value(s2_a, static_cast<int>(a_rows.size()), s2_0,
                         static_cast<int>(cc.size()),
                         static_cast<int>(ec.size()), w);
}

double bootstrap_se(const TrialDataset& ds, const MatchResult& match, int arm,
                    double w, int bootstrap_reps, Rng& rng) {
  check_arm(ds, arm);
  check_w(w);
  check_match(ds, match);
  if (bootstrap_reps < 2) {
    throw ValidationError("estimator: bootstrap needs at least two replicates");
  }

  // Canonical resampling order: pairs sorted by trial subject id, so the
  // seed -> resample mapping is independent of pair-list order.
  std::vector<const MatchPair*> order;
  order.reserve(match.pairs.size());
  for (const MatchPair& p : match.pairs) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [](const MatchPair* a, const MatchPair* b) {
              return a->rct_id < b->rct_id;
            });

  struct PairData {
    int arm;
    double y_rct;
    double y_ec;
  };
  std::vector<PairData> pairs;
  pairs.reserve(order.size());
  for (const MatchPair* p : order) {
    pairs.push_back({ds.subjects[p->rct_row].arm,
                     ds.subjects[p->rct_row].outcome,
                     ds.subjects[p->ec_row].outcome});
  }
  const int n = static_cast<int>(pairs.size());

  std::vector<double> estimates;
  estimates.reserve(bootstrap_reps);
  const long max_draws = 10L * bootstrap_reps;
  long draws = 0;
  while (static_cast<int>(estimates.size()) < bootstrap_reps) {
    if (draws >= max_draws) {
      throw NumericalError(
          "bootstrap: too many degenerate resamples; arms are too small");
    }
    ++draws;
    double sum_a = 0.0, sum_0 = 0.0, sum_e = 0.0;
    int count_a = 0, count_0 = 0;
    for (int i = 0; i < n; ++i) {
      const PairData& p = pairs[rng.below(static_cast<std::uint64_t>(n))];
      if (p.arm == arm) {
        sum_a += p.y_rct;
        ++count_a;
      } else if (p.arm == 0) {
        sum_0 += p.y_rct;
        ++count_0;
      }
      sum_e += p.y_ec;
    }
    if (count_a == 0 || count_0 == 0) continue;  // degenerate: redraw
    estimates.push_back(weighted_point(sum_a / count_a, sum_0 / count_0,
                                       sum_e / n, w));
  }
  return sample_sd(estimates);
}

EffectEstimate new_design_estimate(const TrialDataset& ds,
                                   const MatchResult& match, int arm, double w,
                                   EstimateMethod method, int bootstrap_reps,
                                   Rng* rng) {
  if (method != EstimateMethod::NewSimple &&
      method != EstimateMethod::NewBootstrap) {
    throw ValidationError(
        "estimator: new_design_estimate supports the simple and bootstrap "
        "methods only");
  }
  check_arm(ds, arm);
  check_w(w);
  check_match(ds, match);

  const ArmSummary at = summarize_outcomes(ds, arm_rows(ds, arm), false);
  const ArmSummary cc = summarize_outcomes(ds, arm_rows(ds, 0), false);
  std::vector<int> ec_rows;
  for (const MatchPair& p : match.pairs) ec_rows.push_back(p.ec_row);
  const ArmSummary ec = summarize_outcomes(ds, ec_rows, false);

  EffectEstimate e;
  e.arm = arm;
  e.method = method;
  e.w = w;
  e.arm_mean = at.mean;
  e.cc_mean = cc.mean;
  e.ec_mean = ec.mean;
  e.control_mean = w * cc.mean + (1.0 - w) * ec.mean;
  e.point = at.mean - e.control_mean;
  e.n_a = at.n;
  e.n_0 = cc.n;
  e.n_e = ec.n;
  if (method == EstimateMethod::NewSimple) {
    e.se = simple_se(ds, match, arm, w);
  } else {
    if (rng == nullptr) {
      throw ValidationError("estimator: bootstrap needs a random stream");
    }
    e.bootstrap_reps = bootstrap_reps;
    e.se = bootstrap_se(ds, match, arm, w, bootstrap_reps, *rng);
  }
  std::tie(e.ci_low, e.ci_high) = confidence_interval(e.point, e.se);
  return e;
}

EffectEstimate nc_estimate(const TrialDataset& ds, const NcMatchResult& nc) {
  if (ds.k != 1) {
    throw ValidationError("estimator: nc estimate requires a two-arm trial");
  }
  if (nc.repetitions.empty()) {
    throw ValidationError("estimator: nc result has no repetitions");
  }
  const std::vector<int> treated = arm_rows(ds, 1);
  const std::vector<int> controls = arm_rows(ds, 0);
  const int n_1 = static_cast<int>(treated.size());
  const int n_0 = static_cast<int>(controls.size());
  const int n_e = n_1 - n_0;
  for (const NcRepetition& rep : nc.repetitions) {
    if (static_cast<int>(rep.pairs.size()) != n_e) {
      throw ValidationError(
          "estimator: nc repetition size does not match n_1 - n_0");
    }
  }
  const double w = static_cast<double>(n_0) / n_1;

  const ArmSummary at = summarize_outcomes(ds, treated);
  const std::vector<double> cc = outcomes_at(ds, controls);
  const double cc_mean = mean(cc);

  double ec_hat = 0.0;  // across-repetition average of the matched-EC means
  double se_sum = 0.0;
  for (const NcRepetition& rep : nc.repetitions) {
    ec_hat += rep.ec_outcome_mean;
    std::vector<int> ec_rows;
    ec_rows.reserve(rep.pairs.size());
    for (const MatchPair& p : rep.pairs) ec_rows.push_back(p.ec_row);
    const double s2_0 = pooled_group_variance(cc, outcomes_at(ds, ec_rows));
    se_sum += simple_se_value(at.variance, n_1, s2_0, n_0, n_e, w);
  }
  const double j = static_cast<double>(nc.repetitions.size());
  ec_hat /= j;

  EffectEstimate e;
  e.arm = 1;
  e.method = EstimateMethod::Nc;
  e.w = w;
  e.arm_mean = at.mean;
  e.cc_mean = cc_mean;
  e.ec_mean = ec_hat;
  e.control_mean = w * cc_mean + (1.0 - w) * ec_hat;
  e.point = at.mean - e.control_mean;
  e.se = se_sum / j;
  e.n_a = n_1;
  e.n_0 = n_0;
  e.n_e = n_e;
  e.nc_repetitions = static_cast<int>(nc.repetitions.size());
  std::tie(e.ci_low, e.ci_high) = confidence_interval(e.point, e.se);
  return e;
}

EffectEstimate raw_estimate(const TrialDataset& ds, int arm) {
  check_arm(ds, arm);
  const std::vector<int> a_rows = arm_rows(ds, arm);
  const std::vector<int> c_rows = arm_rows(ds, 0);
  const ArmSummary at = summarize_outcomes(ds, a_rows);
  const ArmSummary cc = summarize_outcomes(ds, c_rows);

  EffectEstimate e;
  e.arm = arm;
  e.method = EstimateMethod::Raw;
  e.w = 1.0;
  e.arm_mean = at.mean;
  e.cc_mean = cc.mean;
  e.control_mean = cc.mean;
  e.point = at.mean - cc.mean;
  e.se = std::sqrt(at.variance / at.n + cc.variance / cc.n);
  e.n_a = at.n;
  e.n_0 = cc.n;
  e.n_e = 0;
  std::tie(e.ci_low, e.ci_high) = confidence_interval(e.point, e.se);
  return e;
}

}  // namespace ecmatch
