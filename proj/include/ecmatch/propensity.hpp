#pragma once

#include <vector>

#include "ecmatch/dataset.hpp"

namespace ecmatch {

struct LogisticFit {
  std::vector<double> coefficients;  // intercept first, then covariates
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct LogisticOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;        // on both |Δ log-lik| and score max-norm
  double separation_bound = 30.;  // |coefficient| beyond this => separation
};

// Maximum-likelihood logistic regression of y (0/1) on a design matrix built
// as [1, x] per row. Newton-Raphson with step halving; throws NumericalError
// on rank deficiency, (quasi-)separation, or failure to converge.
LogisticFit fit_logistic(const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y,
                         const LogisticOptions& options = {});

// Log-likelihood and score (gradient) of the logistic model at beta; shared
// by the fitter and by verification code.
double logistic_log_likelihood(const std::vector<std::vector<double>>& x,
                               const std::vector<int>& y,
                               const std::vector<double>& beta);
std::vector<double> logistic_score(const std::vector<std::vector<double>>& x,
                                   const std::vector<int>& y,
                                   const std::vector<double>& beta);

// Linear predictor eta = beta0 + beta . x for one subject.
double linear_predictor(const std::vector<double>& beta,
                        const std::vector<double>& covariates);

double logistic_probability(double eta);  // inverse logit

// Selection scores for trial membership: fits source ~ covariates over every
// subject and returns per-row scores on the logit scale (subjects order).
struct ScoreResult {
  LogisticFit fit;
  std::vector<double> logit;  // one per dataset row
};

ScoreResult selection_scores(const TrialDataset& ds);

}  // namespace ecmatch
