#include "ecmatch/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "ecmatch/errors.hpp"
#include "ecmatch/matcher.hpp"
#include "ecmatch/propensity.hpp"
#include "ecmatch/stats.hpp"
#include "ecmatch/textio.hpp"

namespace ecmatch {

namespace {

std::string make_id(char prefix, int number) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%c%06d", prefix, number);
  return buf;
}

double eta_for(const SuperPopulation& pop, const SelectionModel& selection,
               int i) {
  const auto& c = selection.coefficients;
  return selection.alpha + c[0] * pop.x1[i] + c[1] * pop.x2[i] +
         c[2] * pop.x3[i] + c[3] * pop.x4[i] + c[4] * pop.x5[i];
}

}  // namespace

SuperPopulation make_superpopulation(std::uint64_t seed, int n) {
  if (n < 10000) {
    throw ValidationError(
        "super-population needs at least 10,000 records to stand in for the "
        "source population");
  }
  SuperPopulation pop;
  pop.seed = seed;
  pop.x1.reserve(n);
  pop.x2.reserve(n);
  pop.x3.reserve(n);
  pop.x4.reserve(n);
  pop.x5.reserve(n);
  pop.y0.reserve(n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double x1 = rng.truncated_normal(8.0, 1.0, 5.5, 12.0);
    const double x2 = rng.truncated_normal(32.0, 6.0, 18.0, 55.0);
    const double x3 = rng.truncated_normal(105.0, 14.0, 60.0, 160.0);
    const double x4 = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double x5 = rng.truncated_normal(55.0, 10.0, 18.0, 80.0);
    pop.x1.push_back(x1);
    pop.x2.push_back(x2);
    pop.x3.push_back(x3);
    pop.x4.push_back(x4);
    pop.x5.push_back(x5);
    pop.y0.push_back(0.3 - 0.35 * (x1 - 8.0) + 0.02 * (x2 - 32.0) +
                     rng.normal(0.0, 0.9));
  }
  return pop;
}

std::vector<double> selection_eta_base(
    const SuperPopulation& pop, const std::array<double, 5>& coefficients) {
  std::vector<double> base;
  base.reserve(pop.size());
  for (int i = 0; i < pop.size(); ++i) {
    base.push_back(coefficients[0] * pop.x1[i] + coefficients[1] * pop.x2[i] +
                   coefficients[2] * pop.x3[i] + coefficients[3] * pop.x4[i] +
                   coefficients[4] * pop.x5[i]);
  }
  return base;
}

double calibrate_alpha(const SuperPopulation& pop,
                       const std::array<double, 5>& coefficients, double target,
                       double tolerance) {
  if (pop.size() == 0) {
    throw ValidationError("calibration needs a non-empty super-population");
  }
  if (!(target > 0.0 && target < 1.0) || !(tolerance > 0.0)) {
    throw ValidationError("calibration: target in (0,1) and tolerance > 0");
  }
  const std::vector<double> base = selection_eta_base(pop, coefficients);
  auto mean_probability = [&](double alpha) {
    double sum = 0.0;
    for (double b : base) sum += logistic_probability(b + alpha);
    return sum / static_cast<double>(base.size());
  };

  double lo = -60.0, hi = 10.0;
  if (!(mean_probability(lo) < target && mean_probability(hi) > target)) {
    throw NumericalError(
        "calibration: target selection probability not bracketed on "
        "[-60, 10]");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = mean_probability(mid) - target;
    if (std::abs(f) < tolerance) return mid;
    if (f < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NumericalError("calibration: bisection did not converge");
}

std::string setting_name(Setting setting) {
  switch (setting) {
    case Setting::S1: return "S1";
    case Setting::S2: return "S2";
    case Setting::S3: return "S3";
  }
  return "?";
}

std::vector<int> Scenario::allocation() const {
  if (setting == Setting::S3) {
    return {n_r / 5, 2 * n_r / 5, 2 * n_r / 5};  // placebo, arm 1, arm 2
  }
  return {n_r / 3, 2 * n_r / 3};
}

void Scenario::validate() const {
  if (n_r <= 0) throw ValidationError("scenario: n_r must be positive");
  const int divisor = setting == Setting::S3 ? 5 : 3;
  if (n_r % divisor != 0) {
    throw ValidationError("scenario: n_r must be divisible by " +
                          std::to_string(divisor) +
                          " for an exact allocation");
  }
  if (eps_variance < 0.0) {
    throw ValidationError("scenario: noise variance must be nonnegative");
  }
}

GeneratedTrial generate_trial(const SuperPopulation& pop,
                              const SelectionModel& selection,
                              const Scenario& scenario, Rng& rng) {
  scenario.validate();
  const int n = pop.size();
  if (n == 0) throw ValidationError("generation needs a super-population");

  std::vector<int> rct_idx, ec_idx;
  rct_idx.reserve(scenario.n_r);
  ec_idx.reserve(12 * scenario.n_r);
  const long cap = 100000L * scenario.n_r;
  long draws = 0;
  while (static_cast<int>(rct_idx.size()) < scenario.n_r) {
    if (++draws > cap) {
      throw NumericalError(
          "generation: selection probabilities too small to fill the trial");
    }
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const double p = logistic_probability(eta_for(pop, selection, i));
    if (rng.uniform() < p) {
      rct_idx.push_back(i);
    } else {
      ec_idx.push_back(i);
    }
  }
  // Top up the pool in the (practically impossible) case it is too small to
  // match the whole trial; extra draws keep the conditional distribution.
  while (static_cast<int>(ec_idx.size()) < scenario.n_r) {
    if (++draws > cap) {
      throw NumericalError("generation: cannot fill the external pool");
    }
    const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const double p = logistic_probability(eta_for(pop, selection, i));
    if (!(rng.uniform() < p)) ec_idx.push_back(i);
  }

  // Exact-count randomization: a shuffled label vector.
  const std::vector<int> counts = scenario.allocation();
  std::vector<int> labels;
  labels.reserve(scenario.n_r);
  for (int arm = 0; arm < static_cast<int>(counts.size()); ++arm) {
    labels.insert(labels.end(), counts[arm], arm);
  }
  rng.shuffle(labels);

  GeneratedTrial trial;
  std::vector<Subject> subjects;
  subjects.reserve(rct_idx.size() + ec_idx.size());
  trial.superpop_index.reserve(rct_idx.size() + ec_idx.size());
  trial.y0.reserve(rct_idx.size() + ec_idx.size());

  for (int r = 0; r < scenario.n_r; ++r) {
    const int i = rct_idx[r];
    Subject s;
    s.id = make_id('R', r + 1);
    s.source = Source::RCT;
    s.arm = labels[r];
    s.covariates = pop.covariates(i);
    subjects.push_back(std::move(s));
    trial.superpop_index.push_back(i);
    trial.y0.push_back(pop.y0[i]);
  }
  for (std::size_t e = 0; e < ec_idx.size(); ++e) {
    const int i = ec_idx[e];
    Subject s;
    s.id = make_id('E', static_cast<int>(e) + 1);
    s.source = Source::EC;
    s.arm = 0;
    s.outcome = pop.y0[i];
    s.covariates = pop.covariates(i);
    subjects.push_back(std::move(s));
    trial.superpop_index.push_back(i);
    trial.y0.push_back(pop.y0[i]);
  }

  // One normal draw per trial subject in every setting keeps the stream
  // aligned across settings that share a seed.
  for (int r = 0; r < scenario.n_r; ++r) {
    const double z = rng.normal();
    const double y0 = trial.y0[r];
    const int arm = subjects[r].arm;
    double y = y0;
    switch (scenario.setting) {
      case Setting::S1:
        if (arm == 1) y = y0 + std::sqrt(scenario.eps_variance) * z;
        break;
      case Setting::S2:
        if (arm == 1) y = y0 + scenario.effect_shift;
        break;
      case Setting::S3:
        if (arm == 1) y = y0 + scenario.effect_shift;
        if (arm == 2) y = y0 + scenario.s3_slope * subjects[r].covariates[0];
        break;
    }
    subjects[r].outcome = y;
  }

  trial.dataset = TrialDataset::build(std::move(subjects),
                                      {"x1", "x2", "x3", "x4", "x5"});
  return trial;
}

double true_theta(const SuperPopulation& pop, const SelectionModel& selection,
                  const Scenario& scenario, int arm) {
  scenario.validate();
  if (arm < 1 || arm > scenario.arms()) {
    throw ValidationError("true effect: arm out of range for the scenario");
  }
  switch (scenario.setting) {
    case Setting::S1:
      return 0.0;  // centered noise has mean zero in every subgroup
    case Setting::S2:
      return scenario.effect_shift;
    case Setting::S3:
      break;
  }
  if (arm == 1) return scenario.effect_shift;
  // Arm 2: effect is s3_slope * x1, averaged over the trial-selected
  // sub-population, i.e. weighted by the selection probability.
  double weight_sum = 0.0, weighted_x1 = 0.0;
  for (int i = 0; i < pop.size(); ++i) {
    const double p = logistic_probability(eta_for(pop, selection, i));
    weight_sum += p;
    weighted_x1 += p * pop.x1[i];
  }
  return scenario.s3_slope * weighted_x1 / weight_sum;
}

namespace {

struct RowSpec {
  MethodSpec spec;
  int arm = 1;
};

std::vector<RowSpec> build_rows(const Scenario& scenario,
                                const std::vector<MethodSpec>& methods,
                                int bootstrap_reps) {
  std::vector<MethodSpec> specs = methods;
  if (specs.empty()) {
    if (scenario.arms() == 1) {
      specs.push_back({EstimateMethod::Nc, 1});
      specs.push_back({EstimateMethod::Nc, 2});
      specs.push_back({EstimateMethod::Nc, 3});
    }
    specs.push_back({EstimateMethod::NewSimple, 0});
    specs.push_back({EstimateMethod::NewBootstrap, 0});
    specs.push_back({EstimateMethod::Raw, 0});
  }
  std::vector<RowSpec> rows;
  for (const MethodSpec& m : specs) {
    if (m.method == EstimateMethod::Nc) {
      if (scenario.arms() != 1) {
        throw ValidationError(
            "simulation: nc matching applies to two-arm trials only");
      }
      if (m.j < 1) throw ValidationError("simulation: nc needs j >= 1");
      rows.push_back({m, 1});
    } else {
      for (int arm = 1; arm <= scenario.arms(); ++arm) rows.push_back({m, arm});
    }
  }
  if (bootstrap_reps < 2) {
    throw ValidationError("simulation: bootstrap_reps must be at least 2");
  }
  return rows;
}

struct RepOutcome {
  std::vector<double> point, se, distinct;
};

RepOutcome run_one(const SuperPopulation& pop, const SelectionModel& selection,
                   const Scenario& scenario, const std::vector<RowSpec>& rows,
                   int bootstrap_reps, std::uint64_t rep_seed) {
  Rng gen(derive_seed(rep_seed, 0));
  GeneratedTrial trial = generate_trial(pop, selection, scenario, gen);
  const TrialDataset& ds = trial.dataset;
  const ScoreResult scores = selection_scores(ds);
  const MatchResult match = optimal_match(ds, scores.logit);

  RepOutcome out;
  out.point.reserve(rows.size());
  out.se.reserve(rows.size());
  out.distinct.assign(rows.size(), 0.0);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const RowSpec& row = rows[k];
    EffectEstimate est;
    switch (row.spec.method) {
      case EstimateMethod::Raw:
        est = raw_estimate(ds, row.arm);
        break;
      case EstimateMethod::NewSimple: {
        const double w =
            static_cast<double>(ds.arm_counts[0]) / ds.arm_counts[row.arm];
        est = new_design_estimate(ds, match, row.arm, w,
                                  EstimateMethod::NewSimple);
        break;
      }
      case EstimateMethod::NewBootstrap: {
        const double w =
            static_cast<double>(ds.arm_counts[0]) / ds.arm_counts[row.arm];
        Rng boot(derive_seed(rep_seed, 100 + row.arm));
        est = new_design_estimate(ds, match, row.arm, w,
                                  EstimateMethod::NewBootstrap, bootstrap_reps,
                                  &boot);
        break;
      }
      case EstimateMethod::Nc: {
        Rng ncr(derive_seed(rep_seed, 200 + row.spec.j));
        const NcMatchResult nc =
            nc_match(ds, scores.logit, row.spec.j, ncr);
        est = nc_estimate(ds, nc);
        out.distinct[k] = nc.distinct_matches;
        break;
      }
    }
    out.point.push_back(est.point);
    out.se.push_back(est.se);
  }
  return out;
}

}  // namespace

SimulationReport run_monte_carlo(const SuperPopulation& pop,
                                 const SelectionModel& selection,
                                 const Scenario& scenario,
                                 const MonteCarloOptions& options) {
  scenario.validate();
  if (options.reps < 2) {
    throw ValidationError("simulation: needs at least two replications");
  }
  if (options.max_attempts_per_rep < 1) {
    throw ValidationError("simulation: max_attempts_per_rep must be positive");
  }
  if (options.threads < 1) {
    throw ValidationError("simulation: threads must be at least 1");
  }
  const std::vector<RowSpec> rows =
      build_rows(scenario, options.methods, options.bootstrap_reps);

  const int reps = options.reps;
  const int threads = options.threads;
  std::vector<RepOutcome> results(reps);
  std::vector<int> attempts_used(reps, 0);
  std::atomic<int> next{0};
  std::atomic<int> completed{0};
  std::mutex error_mutex;
  std::mutex progress_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    try {
      while (true) {
        const int r = next.fetch_add(1);
        if (r >= reps) break;
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error) break;
        }
        for (int attempt = 0;; ++attempt) {
          if (attempt >= options.max_attempts_per_rep) {
            throw NumericalError(
                "simulation: replication " + std::to_string(r) +
                " kept failing after " +
                std::to_string(options.max_attempts_per_rep) + " attempts");
          }
          const std::uint64_t rep_seed = derive_seed(
              options.master_seed,
              static_cast<std::uint64_t>(r) +
                  static_cast<std::uint64_t>(attempt) *
                      static_cast<std::uint64_t>(reps));
          try {
            results[r] = run_one(pop, selection, scenario, rows,
                                 options.bootstrap_reps, rep_seed);
            attempts_used[r] = attempt + 1;
            if (options.progress) {
              const int done = completed.fetch_add(1) + 1;
              std::lock_guard<std::mutex> lock(progress_mutex);
              options.progress(done, reps);
            }
            break;
          } catch (const NumericalError&) {
            // e.g. separated selection fit: redraw with a fresh seed
          } catch (const MatchingError&) {
            // pool shortfall in a pathological draw: redraw
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  SimulationReport report;
  report.scenario = scenario;
  report.master_seed = options.master_seed;
  report.reps = reps;
  report.bootstrap_reps = options.bootstrap_reps;
  report.threads = threads;
  for (int r = 0; r < reps; ++r) {
    report.failed_replications += attempts_used[r] - 1;
  }

  const bool type1 = scenario.setting == Setting::S1;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const RowSpec& row = rows[k];
    MetricsRow m;
    m.method = method_name(row.spec.method);
    m.arm = row.arm;
    m.j = row.spec.j;
    m.theta = true_theta(pop, selection, scenario, row.arm);
    m.reports_type1 = type1;

    std::vector<double> points(reps), ses(reps);
    for (int r = 0; r < reps; ++r) {
      points[r] = results[r].point[k];
      ses[r] = results[r].se[k];
    }
    m.bias = mean(points) - m.theta;
    m.sd = sample_sd(points);
    m.mean_se = mean(ses);
    int hits = 0;
    for (int r = 0; r < reps; ++r) {
      if (type1) {
        const bool reject = ses[r] > 0.0
                                ? std::abs(points[r]) / ses[r] > 1.96
                                : points[r] != 0.0;
        if (reject) ++hits;
      } else {
        const double lo = points[r] - 1.96 * ses[r];
        const double hi = points[r] + 1.96 * ses[r];
        if (lo <= m.theta && m.theta <= hi) ++hits;
      }
    }
    m.type1_or_cp = static_cast<double>(hits) / reps;
    if (row.spec.method == EstimateMethod::Nc) {
      double sum = 0.0;
      for (int r = 0; r < reps; ++r) sum += results[r].distinct[k];
      m.mean_distinct = sum / reps;
    }
    report.rows.push_back(std::move(m));
  }
  return report;
}

void write_report_csv(std::ostream& out, const SimulationReport& report) {
  out << "# setting=" << setting_name(report.scenario.setting)
      << " n_r=" << report.scenario.n_r << " reps=" << report.reps
      << " bootstrap_reps=" << report.bootstrap_reps
      << " master_seed=" << report.master_seed
      << " failed_replications=" << report.failed_replications << '\n';
  out << "method,arm,j,theta,bias,sd,mean_se,type_i_error,coverage,"
         "mean_distinct\n";
  for (const MetricsRow& m : report.rows) {
    out << m.method << ',' << m.arm << ',';
    if (m.j > 0) out << m.j;
    out << ',' << fmt_double(m.theta) << ',' << fmt_double(m.bias) << ','
        << fmt_double(m.sd) << ',' << fmt_double(m.mean_se) << ',';
    if (m.reports_type1) out << fmt_double(m.type1_or_cp);
    out << ',';
    if (!m.reports_type1) out << fmt_double(m.type1_or_cp);
    out << ',';
    if (m.method == "nc") out << fmt_double(m.mean_distinct);
    out << '\n';
  }
}

namespace {

std::string fixed3(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

std::string fixed1(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << v;
  return s.str();
}

std::string display_method(const MetricsRow& m) {
  if (m.method == "nc") return "NC matching";
  if (m.method == "new_simple") return "New design (simple SE)";
  if (m.method == "new_bootstrap") return "New design (bootstrap SE)";
  if (m.method == "raw") return "Trial only";
  return m.method;
}

}  // namespace

void write_report_table(std::ostream& out, const SimulationReport& report) {
  const bool multi_arm = report.scenario.arms() > 1;
  const std::string metric =
      report.rows.empty() || report.rows.front().reports_type1
          ? "Type-I error"
          : "Coverage";

  out << "Setting " << setting_name(report.scenario.setting)
      << ", n_r=" << report.scenario.n_r << ", " << report.reps
      << " replications, B=" << report.bootstrap_reps
      << ", seed=" << report.master_seed;
  if (report.failed_replications > 0) {
    out << ", redrawn=" << report.failed_replications;
  }
  out << '\n';

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"Method"};
  if (multi_arm) header.push_back("Arm");
  header.insert(header.end(),
                {"J", "Distinct", "Bias", "SD", "SE", metric});
  grid.push_back(header);
  for (const MetricsRow& m : report.rows) {
    std::vector<std::string> line{display_method(m)};
    if (multi_arm) line.push_back(std::to_string(m.arm));
    line.push_back(m.j > 0 ? std::to_string(m.j) : "-");
    line.push_back(m.method == "nc" ? fixed1(m.mean_distinct) : "-");
    line.push_back(fixed3(m.bias));
    line.push_back(fixed3(m.sd));
    line.push_back(fixed3(m.mean_se));
    line.push_back(fixed3(m.type1_or_cp));
    grid.push_back(std::move(line));
  }

  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      width[c] = std::max(width[c], line[c].size());
    }
  }
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << (c == 0 ? "" : "  ");
      if (c == 0) {
        out << line[c] << std::string(width[c] - line[c].size(), ' ');
      } else {
        out << std::string(width[c] - line[c].size(), ' ') << line[c];
      }
    }
    out << '\n';
  }
}

}  // namespace ecmatch
