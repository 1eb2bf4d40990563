#include "ecmatch/propensity.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ecmatch/errors.hpp"

namespace ecmatch {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  if (t > 35.0) return t;
  if (t < -35.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

Eigen::MatrixXd design_matrix(const std::vector<std::vector<double>>& x) {
  const int n = static_cast<int>(x.size());
  const int p = n > 0 ? static_cast<int>(x[0].size()) : 0;
  Eigen::MatrixXd m(n, p + 1);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(x[i].size()) != p) {
      throw ValidationError("ragged covariate rows in logistic fit");
    }
    m(i, 0) = 1.0;
    for (int j = 0; j < p; ++j) m(i, j + 1) = x[i][j];
  }
  return m;
}

}  // namespace

double logistic_probability(double eta) {
  if (eta >= 0.0) {
    return 1.0 / (1.0 + std::exp(-eta));
  }
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double linear_predictor(const std::vector<double>& beta,
                        const std::vector<double>& covariates) {
  double eta = beta.at(0);
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    eta += beta.at(j + 1) * covariates[j];
  }
  return eta;
}

double logistic_log_likelihood(const std::vector<std::vector<double>>& x,
                               const std::vector<int>& y,
                               const std::vector<double>& beta) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double eta = linear_predictor(beta, x[i]);
    // y*eta - log(1+exp(eta)), stable on both tails.
    ll += y[i] * eta - softplus(eta);
  }
  return ll;
}

std::vector<double> logistic_score(const std::vector<std::vector<double>>& x,
                                   const std::vector<int>& y,
                                   const std::vector<double>& beta) {
  std::vector<double> g(beta.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - logistic_probability(linear_predictor(beta, x[i]));
    g[0] += r;
    for (std::size_t j = 0; j < x[i].size(); ++j) g[j + 1] += r * x[i][j];
  }
  return g;
}

LogisticFit fit_logistic(const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y,
                         const LogisticOptions& options) {
  const int n = static_cast<int>(x.size());
  if (n == 0) throw ValidationError("logistic fit requires at least one row");
  if (static_cast<int>(y.size()) != n) {
    throw ValidationError("logistic fit: x and y sizes differ");
  }
  int ones = 0;
  for (int yi : y) {
    if (yi != 0 && yi != 1) {
      throw ValidationError("logistic fit: responses must be 0 or 1");
    }
    ones += yi;
  }
  if (ones == 0 || ones == n) {
    throw NumericalError(
        "logistic fit: response is constant, model is not identifiable");
  }

  const Eigen::MatrixXd design = design_matrix(x);
  const int p1 = static_cast<int>(design.cols());
  if (n < p1) {
    throw NumericalError("logistic fit: fewer rows than parameters");
  }
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < p1) {
      throw NumericalError(
          "logistic fit: design matrix is rank deficient (collinear "
          "covariates)");
    }
  }

  Eigen::VectorXd yv(n);
  for (int i = 0; i < n; ++i) yv(i) = y[i];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p1);
  auto beta_vec = [&](const Eigen::VectorXd& b) {
    return std::vector<double>(b.data(), b.data() + b.size());
  };
  double ll = logistic_log_likelihood(x, y, beta_vec(beta));

  LogisticFit fit;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Eigen::VectorXd mu(n), w(n);
    for (int i = 0; i < n; ++i) {
      const double p = logistic_probability(design.row(i).dot(beta));
      mu(i) = p;
      w(i) = p * (1.0 - p);
    }
    const Eigen::VectorXd grad = design.transpose() * (yv - mu);
    const Eigen::MatrixXd hess =
        design.transpose() * w.asDiagonal() * design;  // Fisher information
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) {
      throw NumericalError("logistic fit: information matrix not factorizable");
    }
    const Eigen::VectorXd full_step = ldlt.solve(grad);

    // Step halving: back off until the likelihood does not decrease.
    double step_scale = 1.0;
    Eigen::VectorXd candidate;
    double candidate_ll = 0.0;
    bool improved = false;
    for (int half = 0; half < 30; ++half) {
      candidate = beta + step_scale * full_step;
      candidate_ll = logistic_log_likelihood(x, y, beta_vec(candidate));
      if (candidate_ll >= ll - 1e-12) {
        improved = true;
        break;
      }
      step_scale *= 0.5;
    }
    if (!improved) {
      throw NumericalError(
          "logistic fit: line search failed to improve the likelihood");
    }

    const double delta_ll = candidate_ll - ll;
    beta = candidate;
    ll = candidate_ll;
    fit.iterations = iter;

    if (beta.cwiseAbs().maxCoeff() > options.separation_bound) {
      throw NumericalError(
          "logistic fit: coefficients diverging, data are (quasi-)separated");
    }

    const std::vector<double> score = logistic_score(x, y, beta_vec(beta));
    double score_max = 0.0;
    for (double g : score) score_max = std::max(score_max, std::abs(g));
    if (std::abs(delta_ll) < options.tolerance ||
        score_max < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    throw NumericalError("logistic fit: no convergence after " +
                         std::to_string(options.max_iterations) +
                         " iterations");
  }
  fit.coefficients = beta_vec(beta);
  fit.log_likelihood = ll;
  return fit;
}

ScoreResult selection_scores(const TrialDataset& ds) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  x.reserve(ds.subjects.size());
  y.reserve(ds.subjects.size());
  for (const Subject& s : ds.subjects) {
    x.push_back(s.covariates);
    y.push_back(s.source == Source::RCT ? 1 : 0);
  }
  ScoreResult result;
  result.fit = fit_logistic(x, y);
  result.logit.reserve(ds.subjects.size());
  for (const Subject& s : ds.subjects) {
    result.logit.push_back(linear_predictor(result.fit.coefficients, s.covariates));
  }
  return result;
}

}  // namespace ecmatch
