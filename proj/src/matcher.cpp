#include "ecmatch/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "ecmatch/errors.hpp"
#include "ecmatch/propensity.hpp"

namespace ecmatch {

namespace {

void check_scores(const TrialDataset& ds, const std::vector<double>& scores) {
  if (scores.size() != ds.subjects.size()) {
    throw ValidationError("matching: need one score per dataset row");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw ValidationError("matching: scores must be finite");
    }
  }
}

double on_scale(double logit, ScoreScale scale) {
  return scale == ScoreScale::Logit ? logit : logistic_probability(logit);
}

MatchPair make_pair(const TrialDataset& ds,
                    const std::vector<double>& logit_scores, int rct_row,
                    int ec_row, double distance) {
  MatchPair p;
  p.rct_row = rct_row;
  p.ec_row = ec_row;
  p.rct_id = ds.subjects[rct_row].id;
  p.ec_id = ds.subjects[ec_row].id;
  p.rct_logit = logit_scores[rct_row];
  p.ec_logit = logit_scores[ec_row];
  p.distance = distance;
  return p;
}

// Optimal assignment of the given RCT rows to the full EC pool; shared by the
// whole-trial design and the per-repetition NC matching.
std::vector<MatchPair> assign_rows(const TrialDataset& ds,
                                   const std::vector<double>& logit_scores,
                                   const std::vector<int>& rct_rows,
                                   const MatchOptions& options) {
  const int n = static_cast<int>(rct_rows.size());
  if (ds.m_e == 0) {
    throw MatchingError("matching: external pool is empty, need " +
                            std::to_string(n) + " matches",
                        n);
  }
  std::vector<double> rct_scores, ec_scores;
  rct_scores.reserve(rct_rows.size());
  for (int row : rct_rows) {
    rct_scores.push_back(on_scale(logit_scores[row], options.scale));
  }
  ec_scores.reserve(ds.ec_rows.size());
  for (int row : ds.ec_rows) {
    ec_scores.push_back(on_scale(logit_scores[row], options.scale));
  }

  const auto cost = distance_matrix(rct_scores, ec_scores, options.caliper);
  if (n > ds.m_e) {
    // Short pool: report how many rows must stay unmatched, which the caliper
    // can push beyond the plain head count n - m_e.
    const int best = max_admissible_matching(cost);
    throw MatchingError("matching: external pool has " +
                            std::to_string(ds.m_e) + " subjects for " +
                            std::to_string(n) +
                            " trial rows; best admissible matching covers " +
                            std::to_string(best),
                        n - best);
  }
  const Assignment solution = solve_assignment(cost);

  std::vector<MatchPair> pairs;
  pairs.reserve(rct_rows.size());
  for (std::size_t i = 0; i < rct_rows.size(); ++i) {
    const int j = solution.column_of_row[i];
    pairs.push_back(make_pair(ds, logit_scores, rct_rows[i], ds.ec_rows[j],
                              cost[i][j]));
  }
  return pairs;
}

}  // namespace

std::vector<std::vector<double>> distance_matrix(
    const std::vector<double>& scores_rct, const std::vector<double>& scores_ec,
    double caliper) {
  if (scores_rct.empty() || scores_ec.empty()) {
    throw ValidationError("distance_matrix: score vectors must be non-empty");
  }
  if (caliper < 0.0 || std::isnan(caliper)) {
    throw ValidationError("distance_matrix: caliper must be nonnegative");
  }
  std::vector<std::vector<double>> d(scores_rct.size());
  for (std::size_t i = 0; i < scores_rct.size(); ++i) {
    d[i].resize(scores_ec.size());
    for (std::size_t j = 0; j < scores_ec.size(); ++j) {
      const double dist = std::abs(scores_rct[i] - scores_ec[j]);
      d[i][j] = dist <= caliper ? dist : kInadmissible;
    }
  }
  return d;
}

MatchResult optimal_match(const TrialDataset& ds,
                          const std::vector<double>& logit_scores,
                          const MatchOptions& options) {
  check_scores(ds, logit_scores);

  MatchResult result;
  result.algorithm = MatchAlgorithm::Optimal;
  result.scale = options.scale;
  result.caliper = options.caliper;
  result.pairs = assign_rows(ds, logit_scores, ds.rct_rows, options);
  for (const MatchPair& p : result.pairs) result.total_distance += p.distance;
  result.n_e = static_cast<int>(result.pairs.size());
  return result;
}

MatchResult greedy_match(const TrialDataset& ds,
                         const std::vector<double>& logit_scores,
                         GreedyOrder order, const MatchOptions& options) {
  check_scores(ds, logit_scores);

  std::vector<double> ec_scores(ds.m_e);
  for (int j = 0; j < ds.m_e; ++j) {
    ec_scores[j] = on_scale(logit_scores[ds.ec_rows[j]], options.scale);
  }
  const double ec_mean =
      ec_scores.empty()
          ? 0.0
          : std::accumulate(ec_scores.begin(), ec_scores.end(), 0.0) / ds.m_e;

  // Processing order over RCT positions (indices into ds.rct_rows).
  std::vector<int> sequence(ds.n_r);
  std::iota(sequence.begin(), sequence.end(), 0);
  if (order == GreedyOrder::ByScoreExtremity) {
    // Hardest-to-match first: farthest from the EC score mean; stable sort
    // keeps input order among ties.
    std::vector<double> extremity(ds.n_r);
    for (int i = 0; i < ds.n_r; ++i) {
      extremity[i] =
          std::abs(on_scale(logit_scores[ds.rct_rows[i]], options.scale) -
                   ec_mean);
    }
    std::stable_sort(sequence.begin(), sequence.end(),
                     [&](int a, int b) { return extremity[a] > extremity[b]; });
  }

  std::vector<char> ec_used(ds.m_e, 0);
  std::vector<MatchPair> by_position(ds.n_r);
  int unmatchable = 0;
  for (int i : sequence) {
    const double score = on_scale(logit_scores[ds.rct_rows[i]], options.scale);
    int best_j = -1;
    double best_dist = kInadmissible;
    for (int j = 0; j < ds.m_e; ++j) {
      if (ec_used[j]) continue;
      const double dist = std::abs(score - ec_scores[j]);
      if (dist <= options.caliper && dist < best_dist) {
        best_dist = dist;
        best_j = j;
      }
    }
    if (best_j < 0) {
      ++unmatchable;
      continue;
    }
    ec_used[best_j] = 1;
    by_position[i] = make_pair(ds, logit_scores, ds.rct_rows[i],
                               ds.ec_rows[best_j], best_dist);
  }
  if (unmatchable > 0) {
    throw MatchingError(
        "greedy matching: " + std::to_string(unmatchable) +
            " trial subjects have no admissible external control left",
        unmatchable);
  }

  MatchResult result;
  result.algorithm = MatchAlgorithm::Greedy;
  result.scale = options.scale;
  result.caliper = options.caliper;
  result.pairs = std::move(by_position);
  for (const MatchPair& p : result.pairs) result.total_distance += p.distance;
  result.n_e = static_cast<int>(result.pairs.size());
  return result;
}

NcMatchResult nc_match(const TrialDataset& ds,
                       const std::vector<double>& logit_scores, int J, Rng& rng,
                       const MatchOptions& options) {
  check_scores(ds, logit_scores);
  if (J < 1) throw ValidationError("nc matching: J must be positive");
  if (ds.k != 1) {
    throw ValidationError(
        "nc matching: requires a two-arm trial (one treated arm)");
  }
  std::vector<int> treated_rows, control_rows;
  for (int row : ds.rct_rows) {
    (ds.subjects[row].arm == 1 ? treated_rows : control_rows).push_back(row);
  }
  const int n_1 = static_cast<int>(treated_rows.size());
  const int n_0 = static_cast<int>(control_rows.size());
  if (n_1 <= n_0) {
    throw ValidationError(
        "nc matching: treated arm must outnumber concurrent controls");
  }

  NcMatchResult result;
  result.J = J;
  std::unordered_set<int> distinct;
  for (int j = 0; j < J; ++j) {
    // Uniform subset of n_0 treated reserved for the concurrent contrast.
    std::vector<int> reserved_positions =
        rng.sample_without_replacement(n_1, n_0);
    std::vector<char> reserved(n_1, 0);
    for (int pos : reserved_positions) reserved[pos] = 1;

    NcRepetition rep;
    std::vector<int> to_match;
    for (int pos = 0; pos < n_1; ++pos) {
      if (reserved[pos]) {
        rep.reserved_rct_rows.push_back(treated_rows[pos]);
      } else {
        to_match.push_back(treated_rows[pos]);
      }
    }
    rep.pairs = assign_rows(ds, logit_scores, to_match, options);
    double sum = 0.0;
    for (const MatchPair& p : rep.pairs) {
      sum += ds.subjects[p.ec_row].outcome;
      distinct.insert(p.ec_row);
    }
    rep.ec_outcome_mean = sum / static_cast<double>(rep.pairs.size());
    result.repetitions.push_back(std::move(rep));
  }
  result.distinct_matches = static_cast<int>(distinct.size());
  return result;
}

}  // namespace ecmatch
