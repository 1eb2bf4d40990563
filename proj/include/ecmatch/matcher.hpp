#pragma once

#include <string>
#include <vector>

#include "ecmatch/assignment.hpp"
#include "ecmatch/dataset.hpp"
#include "ecmatch/rng.hpp"

namespace ecmatch {

// Scale on which matching distances are computed. Scores are always carried
// on the logit scale; Probability applies the inverse logit first.
enum class ScoreScale { Logit, Probability };

enum class MatchAlgorithm { Optimal, Greedy };

enum class GreedyOrder { ByScoreExtremity, InputOrder };

struct MatchOptions {
  ScoreScale scale = ScoreScale::Logit;
  double caliper = kInadmissible;  // pair admissible iff distance <= caliper
};

struct MatchPair {
  int rct_row = -1;  // indices into TrialDataset::subjects
  int ec_row = -1;
  std::string rct_id;
  std::string ec_id;
  double rct_logit = 0.0;
  double ec_logit = 0.0;
  double distance = 0.0;  // |score difference| on the matching scale
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // one per RCT subject, in RCT input order
  double total_distance = 0.0;
  MatchAlgorithm algorithm = MatchAlgorithm::Optimal;
  int n_e = 0;  // matched EC count == pairs.size()
  ScoreScale scale = ScoreScale::Logit;
  double caliper = kInadmissible;
};

struct NcRepetition {
  std::vector<int> reserved_rct_rows;  // treated set aside for the CC contrast
  std::vector<MatchPair> pairs;        // the remaining treated, matched to EC
  double ec_outcome_mean = 0.0;
};

struct NcMatchResult {
  std::vector<NcRepetition> repetitions;
  int J = 0;
  int distinct_matches = 0;  // distinct EC subjects across all repetitions
};

// Pairwise |score| distances; entries beyond the caliper become infinity.
std::vector<std::vector<double>> distance_matrix(
    const std::vector<double>& scores_rct, const std::vector<double>& scores_ec,
    double caliper = kInadmissible);

// 1:1 matching of every trial subject to a distinct external control,
// minimizing total score distance. `logit_scores` holds one logit-scale score
// per dataset row. Treatment assignments are never consulted: the matched set
// can be locked before unblinding. Throws MatchingError when the pool is too
// small or the caliper leaves some subjects unmatchable.
MatchResult optimal_match(const TrialDataset& ds,
                          const std::vector<double>& logit_scores,
                          const MatchOptions& options = {});

// Nearest-available-neighbor matching without replacement, processing trial
// subjects either by descending distance of their score from the EC mean
// (hardest-to-match first) or in input order. Deterministic.
MatchResult greedy_match(const TrialDataset& ds,
                         const std::vector<double>& logit_scores,
                         GreedyOrder order, const MatchOptions& options = {});

// Baseline design: J times, randomly set aside n_0 treated subjects (as many
// as there are concurrent controls) and optimally match the remaining
// n_1 - n_0 treated to the EC pool. Requires a two-arm trial.
NcMatchResult nc_match(const TrialDataset& ds,
                       const std::vector<double>& logit_scores, int J, Rng& rng,
                       const MatchOptions& options = {});

}  // namespace ecmatch
