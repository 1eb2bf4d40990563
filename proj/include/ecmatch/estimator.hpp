#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ecmatch/dataset.hpp"
#include "ecmatch/matcher.hpp"
#include "ecmatch/rng.hpp"

namespace ecmatch {

struct ArmSummary {
  int n = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance, divisor n-1; requires n >= 2
};

// Summary of the outcomes at the given dataset rows. variance is filled only
// when require_variance is set (and then n >= 2 is enforced).
ArmSummary summarize_outcomes(const TrialDataset& ds,
                              const std::vector<int>& rows,
                              bool require_variance = true);

enum class EstimateMethod { NewSimple, NewBootstrap, Nc, Raw };

std::string method_name(EstimateMethod method);

struct EffectEstimate {
  int arm = 1;
  EstimateMethod method = EstimateMethod::NewSimple;
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double w = 0.0;        // weight on the concurrent-control mean
  double arm_mean = 0.0; // Ȳ_a
  double control_mean = 0.0;  // the blended control value subtracted from Ȳ_a
  double cc_mean = 0.0;  // Ȳ_0, concurrent controls
  double ec_mean = 0.0;  // matched-EC mean entering the blend (0 for raw)
  int n_a = 0;
  int n_0 = 0;
  int n_e = 0;           // matched EC count behind the estimate (0 for raw)
  int bootstrap_reps = 0;  // B, when method == NewBootstrap
  int nc_repetitions = 0;  // J, when method == Nc
};

// --- scalar pieces, exposed for direct verification ---

// Ȳ_a − [w·Ȳ_0 + (1−w)·Ȳ_e]
double weighted_point(double arm_mean, double cc_mean, double ec_mean,
                      double w);

// √( S_a²/n_a + [w²/n_0 + (1−w)²/n_e]·S_0² )
double simple_se_value(double s2_a, int n_a, double s2_0, int n_0, int n_e,
                       double w);

std::pair<double, double> confidence_interval(double point, double se);

// --- estimators over a dataset ---

// Point estimate for arm `a` against the augmented control group (concurrent
// controls blended with all matched external controls at weight w in (0,1)).
double weighted_estimate(const TrialDataset& ds, const MatchResult& match,
                         int arm, double w);

// Closed-form SE treating all subjects as independent; S_0² pools the
// concurrent controls and the matched external controls as one group.
double simple_se(const TrialDataset& ds, const MatchResult& match, int arm,
                 double w);

// Resamples the n_r matched pairs with replacement B times and returns the
// sample SD of the recomputed weighted estimates. Resamples that empty arm
// `a` or the concurrent-control arm are redrawn (at most 10·B draws in
// total). The resample index -> pair mapping is defined on pairs sorted by
// trial subject id, so the result does not depend on pair-list order.
double bootstrap_se(const TrialDataset& ds, const MatchResult& match, int arm,
                    double w, int bootstrap_reps, Rng& rng);

// Full estimate records.
EffectEstimate new_design_estimate(const TrialDataset& ds,
                                   const MatchResult& match, int arm, double w,
                                   EstimateMethod method,
                                   int bootstrap_reps = 500,
                                   Rng* rng = nullptr);

// Baseline: point from the across-repetition average of the matched-EC means;
// SE is the average of the per-repetition closed-form SEs (w = n_0/n_1,
// n_e = n_1 − n_0). Two-arm trials only.
EffectEstimate nc_estimate(const TrialDataset& ds, const NcMatchResult& nc);

// Trial-only reference: Ȳ_a − Ȳ_0 with the two-independent-samples SE.
EffectEstimate raw_estimate(const TrialDataset& ds, int arm);

}  // namespace ecmatch
