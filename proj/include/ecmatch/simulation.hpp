#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ecmatch/dataset.hpp"
#include "ecmatch/estimator.hpp"
#include "ecmatch/rng.hpp"

namespace ecmatch {

// Synthetic super-population: covariates are baseline HbA1c (x1, %), BMI
// (x2, kg/m^2), waist circumference (x3, cm), gender (x4, 0/1) and age
// (x5, years); y0 is the untreated outcome.
struct SuperPopulation {
  std::vector<double> x1, x2, x3, x4, x5, y0;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(y0.size()); }
  std::vector<double> covariates(int i) const {
    return {x1[i], x2[i], x3[i], x4[i], x5[i]};
  }
};

SuperPopulation make_superpopulation(std::uint64_t seed, int n);

// Trial-membership model: logit Pr(trial | X) = alpha + coefficients . X.
struct SelectionModel {
  double alpha = 0.0;
  std::array<double, 5> coefficients{1.0, 0.05, 0.01, 0.4, -0.02};
};

// Per-record linear predictor without the intercept; shared by calibration,
// generation and the exact effect computation.
std::vector<double> selection_eta_base(const SuperPopulation& pop,
                                       const std::array<double, 5>& coefficients);

// Bisection on alpha in [-60, 10] until the mean selection probability over
// the super-population is within `tolerance` of `target` (default: a 1:10
// trial:external ratio, i.e. 1/11).
double calibrate_alpha(const SuperPopulation& pop,
                       const std::array<double, 5>& coefficients,
                       double target = 1.0 / 11.0, double tolerance = 1e-4);

enum class Setting { S1, S2, S3 };

std::string setting_name(Setting setting);

struct Scenario {
  Setting setting = Setting::S1;
  int n_r = 90;                // total trial size
  double eps_variance = 0.5;   // S1: treated outcome adds noise of this variance
  double effect_shift = -1.0;  // S2 and S3 arm 1: constant additive effect
  double s3_slope = -0.2;      // S3 arm 2: per-unit-x1 additive effect

  int arms() const { return setting == Setting::S3 ? 2 : 1; }
  // Exact subject counts per arm 0..k (2:1 or 2:2:1 allocation).
  std::vector<int> allocation() const;
  void validate() const;
};

struct GeneratedTrial {
  TrialDataset dataset;
  std::vector<int> superpop_index;  // per dataset row
  std::vector<double> y0;           // untreated outcome per dataset row
};

// Draws subjects from the super-population with replacement, splits them into
// trial and external pool by the selection probability until the trial has
// n_r subjects, randomizes arms with exact allocation counts, and fills
// observed outcomes per the scenario's potential-outcome rules. One standard
// normal draw is consumed per trial subject in every setting, so runs with
// the same seed stay aligned across settings.
GeneratedTrial generate_trial(const SuperPopulation& pop,
                              const SelectionModel& selection,
                              const Scenario& scenario, Rng& rng);

// Exact average treatment effect among trial-selected subjects for the
// empirical super-population: the selection-probability-weighted mean of the
// per-record effect (the infinite-replication limit of the generator).
double true_theta(const SuperPopulation& pop, const SelectionModel& selection,
                  const Scenario& scenario, int arm);

struct MethodSpec {
  EstimateMethod method = EstimateMethod::NewBootstrap;
  int j = 0;  // repetitions, when method == Nc
};

struct MonteCarloOptions {
  int reps = 2000;
  int bootstrap_reps = 500;
  int threads = 1;
  std::uint64_t master_seed = 1;
  std::vector<MethodSpec> methods;  // empty: raw + nc(1..3) [two-arm] + both new
  int max_attempts_per_rep = 100;
  // Called after each completed replication (serialized); for progress bars.
  std::function<void(int completed, int total)> progress;
};

struct MetricsRow {
  std::string method;
  int arm = 1;
  int j = 0;  // nc only
  double theta = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;
  bool reports_type1 = false;  // true: type-I error; false: coverage
  double type1_or_cp = 0.0;
  double mean_distinct = 0.0;  // nc only
};

struct SimulationReport {
  Scenario scenario;
  std::uint64_t master_seed = 0;
  int reps = 0;
  int bootstrap_reps = 0;
  int threads = 0;
  int failed_replications = 0;  // redrawn with fresh derived seeds
  std::vector<MetricsRow> rows;
};

// Runs `reps` independent replications (generate, fit, match, estimate) and
// aggregates operating characteristics per method and arm. Per-replication
// seeds are derived from the master seed by a counter scheme and every
// replication owns its streams, so the report is identical for any thread
// count. Replications that fail (e.g. a non-convergent selection fit) are
// redrawn with a fresh derived seed and counted.
SimulationReport run_monte_carlo(const SuperPopulation& pop,
                                 const SelectionModel& selection,
                                 const Scenario& scenario,
                                 const MonteCarloOptions& options);

void write_report_csv(std::ostream& out, const SimulationReport& report);
void write_report_table(std::ostream& out, const SimulationReport& report);

}  // namespace ecmatch
