#include "ecmatch/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "ecmatch/dataset.hpp"
#include "ecmatch/diagnostics.hpp"
#include "ecmatch/errors.hpp"
#include "ecmatch/estimator.hpp"
#include "ecmatch/matcher.hpp"
#include "ecmatch/propensity.hpp"
#include "ecmatch/sha256.hpp"
#include "ecmatch/simulation.hpp"
#include "ecmatch/textio.hpp"
#include "ecmatch/version.hpp"

namespace ecmatch::cli {

namespace {

std::string escape_quotes(const std::string& text) {
  std::string result;
  result.reserve(text.size());
  for (char c : text) {
    if (c == '"') result += '\\';
    result += c;
  }
  return result;
}

void emit_error(std::ostream& err, const std::string& kind, int code,
                const std::string& message, int unmatchable = -1) {
  err << "error kind=" << kind << " code=" << code;
  if (unmatchable >= 0) err << " unmatchable=" << unmatchable;
  err << " message=\"" << escape_quotes(message) << "\"\n";
}

using ConfigItems = std::vector<std::pair<std::string, std::string>>;

void write_audit(std::ostream& os, const std::string& command,
                 const ConfigItems& config) {
  os << "# ecmatch " << kVersion << '\n';
  os << "# command: " << command << '\n';
  os << "# config:";
  for (const auto& [key, value] : config) os << ' ' << key << '=' << value;
  os << '\n';
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open output file '" + path + "'");
  f << content;
  if (!f) throw ValidationError("failed writing output file '" + path + "'");
}

std::string trim_copy(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Expands `--config FILE` into `--key=value` arguments appended after the
// explicit ones, skipping any key already given on the command line, so
// flags override config-file keys and config-file keys override defaults.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) {
        throw ValidationError("config: --config requires a file path");
      }
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(std::string("--config=").size());
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open file '" + path + "'");

  std::vector<std::string> expanded = args;
  // Map from flag to its position in `expanded`, so a key repeated in the
  // file follows last-one-wins instead of tripping the parser's
  // duplicate-option check.
  std::vector<std::pair<std::string, std::size_t>> injected;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string entry = trim_copy(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    const std::string key =
        eq == std::string::npos ? "" : trim_copy(entry.substr(0, eq));
    if (key.empty()) {
      throw ValidationError("config: expected key=value (line " +
                            std::to_string(line_no) + " of '" + path + "')");
    }
    const std::string flag = "--" + key;
    bool overridden = false;
    for (const std::string& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        overridden = true;
        break;
      }
    }
    if (overridden) continue;
    const std::string value = trim_copy(entry.substr(eq + 1));
    const std::string arg = flag + "=" + value;
    bool replaced = false;
    for (auto& [seen_flag, pos] : injected) {
      if (seen_flag == flag) {
        expanded[pos] = arg;
        replaced = true;
        break;
      }
    }
    if (!replaced) {
      injected.emplace_back(flag, expanded.size());
      expanded.push_back(arg);
    }
  }
  return expanded;
}

struct SchemaFlags {
  std::string id_column = "id";
  std::string source_column = "source";
  std::string arm_column = "arm";
  std::string outcome_column = "outcome";
  std::vector<std::string> covariates;
};

void add_schema_flags(CLI::App* cmd, SchemaFlags& s) {
  cmd->add_option("--id-column", s.id_column, "Subject id column name")
      ->capture_default_str();
  cmd->add_option("--source-column", s.source_column,
                  "Source column name (1=trial, 0=external)")
      ->capture_default_str();
  cmd->add_option("--arm-column", s.arm_column, "Arm column name")
      ->capture_default_str();
  cmd->add_option("--outcome-column", s.outcome_column, "Outcome column name")
      ->capture_default_str();
  cmd->add_option("--covariates", s.covariates,
                  "Covariate column names (default: all remaining columns)")
      ->delimiter(',');
}

ColumnSchema to_schema(const SchemaFlags& s, bool blinded) {
  ColumnSchema schema;
  schema.id_column = s.id_column;
  schema.source_column = s.source_column;
  schema.arm_column = s.arm_column;
  schema.outcome_column = s.outcome_column;
  schema.covariate_columns = s.covariates;
  schema.blinded = blinded;
  return schema;
}

ScoreScale parse_scale(const std::string& name) {
  if (name == "logit") return ScoreScale::Logit;
  if (name == "probability") return ScoreScale::Probability;
  throw ValidationError("unknown score scale '" + name + "'");
}

std::string caliper_text(double caliper) {
  return caliper >= 0.0 ? fmt_double(caliper) : std::string("none");
}

// ---------------------------------------------------------------- analyze --

struct AnalyzeOpts {
  std::string input, output, balance_output;
  SchemaFlags schema;
  std::string w = "balanced";
  std::string se = "both";
  int bootstrap_reps = 500;
  double caliper = -1.0;
  std::string scale = "logit";
  double eta = 0.01;
  std::uint64_t seed = 1;
};

int do_analyze(const AnalyzeOpts& o, std::ostream& out, std::ostream&) {
  const bool wants_bootstrap = o.se == "bootstrap" || o.se == "both";
  const bool wants_simple = o.se == "simple" || o.se == "both";
  if (wants_bootstrap && o.bootstrap_reps < 100) {
    throw ValidationError("analyze: --bootstrap-reps must be at least 100");
  }
  double fixed_w = -1.0;
  if (o.w != "balanced") {
    const auto parsed = parse_double(o.w);
    if (!parsed || !(*parsed > 0.0 && *parsed < 1.0)) {
      throw ValidationError(
          "analyze: --w must be 'balanced' or a value strictly in (0, 1)");
    }
    fixed_w = *parsed;
  }

  const TrialDataset ds = load_dataset(o.input, to_schema(o.schema, false));
  const ScoreResult scores = selection_scores(ds);
  MatchOptions mo;
  mo.scale = parse_scale(o.scale);
  if (o.caliper >= 0.0) mo.caliper = o.caliper;
  const MatchResult match = optimal_match(ds, scores.logit, mo);

  const std::string balance_path =
      o.balance_output.empty() ? o.output + ".balance.csv" : o.balance_output;
  const ConfigItems config{
      {"input", o.input},
      {"output", o.output},
      {"balance_output", balance_path},
      {"w", o.w},
      {"se", o.se},
      {"bootstrap_reps", std::to_string(o.bootstrap_reps)},
      {"caliper", caliper_text(o.caliper)},
      {"score_scale", o.scale},
      {"eta", fmt_double(o.eta)},
      {"seed", std::to_string(o.seed)},
  };

  std::vector<EffectEstimate> estimates;
  for (int arm = 1; arm <= ds.k; ++arm) {
    const double w = fixed_w > 0.0
                         ? fixed_w
                         : static_cast<double>(ds.arm_counts[0]) /
                               ds.arm_counts[arm];
    if (wants_simple) {
      estimates.push_back(new_design_estimate(ds, match, arm, w,
                                              EstimateMethod::NewSimple));
    }
    if (wants_bootstrap) {
      Rng boot(derive_seed(o.seed, 100 + arm));
      estimates.push_back(new_design_estimate(ds, match, arm, w,
                                              EstimateMethod::NewBootstrap,
                                              o.bootstrap_reps, &boot));
    }
  }

  std::ostringstream est;
  write_audit(est, "analyze", config);
  est << "arm,method,point,se,ci_low,ci_high,w,arm_mean,cc_mean,ec_mean,"
         "n_a,n_0,n_e,bootstrap_reps\n";
  for (const EffectEstimate& e : estimates) {
    est << e.arm << ',' << method_name(e.method) << ',' << fmt_double(e.point)
        << ',' << fmt_double(e.se) << ',' << fmt_double(e.ci_low) << ','
        << fmt_double(e.ci_high) << ',' << fmt_double(e.w) << ','
        << fmt_double(e.arm_mean) << ',' << fmt_double(e.cc_mean) << ','
        << fmt_double(e.ec_mean) << ',' << e.n_a << ',' << e.n_0 << ','
        << e.n_e << ',';
    if (e.method == EstimateMethod::NewBootstrap) est << e.bootstrap_reps;
    est << '\n';
  }
  write_file(o.output, est.str());

  std::ostringstream bal;
  write_audit(bal, "analyze", config);
  const BalanceReport report = balance_report(ds, scores.logit, &match, o.eta);
  write_balance_report(bal, report);
  write_file(balance_path, bal.str());

  out << "n_r=" << ds.n_r << " m_e=" << ds.m_e << " arms=" << ds.k
      << " matched=" << match.n_e
      << " total_distance=" << fmt_double(match.total_distance) << '\n';
  for (const EffectEstimate& e : estimates) {
    out << "arm=" << e.arm << " method=" << method_name(e.method)
        << " point=" << fmt_double(e.point) << " se=" << fmt_double(e.se)
        << " ci=[" << fmt_double(e.ci_low) << ',' << fmt_double(e.ci_high)
        << "] w=" << fmt_double(e.w) << '\n';
  }
  out << "wrote " << o.output << '\n';
  out << "wrote " << balance_path << '\n';
  return 0;
}

// ------------------------------------------------------------------ match --

struct MatchOpts {
  std::string input, output;
  SchemaFlags schema;
  double caliper = -1.0;
  std::string scale = "logit";
};

int do_match(const MatchOpts& o, std::ostream& out, std::ostream&) {
  // Blinded by construction: the arm column is ignored even when present.
  const TrialDataset ds = load_dataset(o.input, to_schema(o.schema, true));
  const ScoreResult scores = selection_scores(ds);
  MatchOptions mo;
  mo.scale = parse_scale(o.scale);
  if (o.caliper >= 0.0) mo.caliper = o.caliper;
  const MatchResult match = optimal_match(ds, scores.logit, mo);

  const ConfigItems config{
      {"input", o.input},           {"output", o.output},
      {"caliper", caliper_text(o.caliper)}, {"score_scale", o.scale},
      {"seed", "none"},
  };
  std::ostringstream pairs;
  write_audit(pairs, "match", config);
  pairs << "rct_id,ec_id,rct_score_logit,ec_score_logit,distance\n";
  for (const MatchPair& p : match.pairs) {
    pairs << p.rct_id << ',' << p.ec_id << ',' << fmt_double(p.rct_logit)
          << ',' << fmt_double(p.ec_logit) << ',' << fmt_double(p.distance)
          << '\n';
  }
  const std::string content = pairs.str();
  write_file(o.output, content);

  out << "wrote " << o.output << " pairs=" << match.n_e
      << " total_distance=" << fmt_double(match.total_distance) << '\n';
  out << "sha256=" << sha256_hex(content) << '\n';
  return 0;
}

// --------------------------------------------------------------- diagnose --

struct DiagnoseOpts {
  std::string input, output;
  SchemaFlags schema;
  double caliper = -1.0;
  std::string scale = "logit";
  double eta = 0.01;
  bool before_only = false;
};

int do_diagnose(const DiagnoseOpts& o, std::ostream& out, std::ostream&) {
  const TrialDataset ds = load_dataset(o.input, to_schema(o.schema, true));
  const ScoreResult scores = selection_scores(ds);

  MatchResult match;
  const MatchResult* match_ptr = nullptr;
  if (!o.before_only) {
    MatchOptions mo;
    mo.scale = parse_scale(o.scale);
    if (o.caliper >= 0.0) mo.caliper = o.caliper;
    match = optimal_match(ds, scores.logit, mo);
    match_ptr = &match;
  }
  const BalanceReport report =
      balance_report(ds, scores.logit, match_ptr, o.eta);

  const ConfigItems config{
      {"input", o.input},
      {"output", o.output},
      {"caliper", caliper_text(o.caliper)},
      {"score_scale", o.scale},
      {"eta", fmt_double(o.eta)},
      {"before_only", o.before_only ? "1" : "0"},
      {"seed", "none"},
  };
  std::ostringstream bal;
  write_audit(bal, "diagnose", config);
  write_balance_report(bal, report);
  write_file(o.output, bal.str());

  double max_before = 0.0, max_after = 0.0;
  bool has_after = false;
  for (const SmdEntry& e : report.smd) {
    if (e.before_defined) max_before = std::max(max_before, std::abs(e.before));
    if (e.has_after && e.after_defined) {
      has_after = true;
      max_after = std::max(max_after, std::abs(e.after));
    }
  }
  out << "max_abs_smd_before=" << fmt_double(max_before);
  if (has_after) out << " max_abs_smd_after=" << fmt_double(max_after);
  out << '\n';
  out << "overlap_ok=" << (report.overlap_ok ? 1 : 0)
      << " violations=" << report.overlap_violations
      << " eta=" << fmt_double(report.eta) << '\n';
  out << "wrote " << o.output << '\n';
  return 0;
}

// --------------------------------------------------------------- simulate --

struct SimulateOpts {
  int setting = 1;
  int n_r = 0;  // 0: default for the setting (90, or 150 for setting 3)
  int reps = 2000;
  int bootstrap_reps = 500;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> methods;
  int superpop_size = 100000;
  std::uint64_t superpop_seed = 0;  // 0: derive from the master seed
  double eps_variance = 0.5;
  std::string output, table_output;
};

MethodSpec parse_method(const std::string& token) {
  if (token == "raw") return {EstimateMethod::Raw, 0};
  if (token == "new_simple") return {EstimateMethod::NewSimple, 0};
  if (token == "new_bootstrap") return {EstimateMethod::NewBootstrap, 0};
  if (token == "nc") return {EstimateMethod::Nc, 1};
  if (token.rfind("nc", 0) == 0) {
    const auto j = parse_int(token.substr(2));
    if (!j || *j < 1) {
      throw ValidationError("simulate: nc repetitions must be a count >= 1");
    }
    return {EstimateMethod::Nc, static_cast<int>(*j)};
  }
  throw ValidationError(
      "simulate: unknown method '" + token +
      "' (expected raw, new_simple, new_bootstrap, nc or nc<J>)");
}

int do_simulate(const SimulateOpts& o, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  scenario.setting = o.setting == 1   ? Setting::S1
                     : o.setting == 2 ? Setting::S2
                                      : Setting::S3;
  scenario.n_r = o.n_r > 0 ? o.n_r
                           : (scenario.setting == Setting::S3 ? 150 : 90);
  scenario.eps_variance = o.eps_variance;
  scenario.validate();

  MonteCarloOptions mc;
  mc.reps = o.reps;
  mc.bootstrap_reps = o.bootstrap_reps;
  mc.threads = o.threads;
  mc.master_seed = o.seed;
  bool has_bootstrap = o.methods.empty();
  for (const std::string& token : o.methods) {
    const MethodSpec spec = parse_method(token);
    if (spec.method == EstimateMethod::NewBootstrap) has_bootstrap = true;
    mc.methods.push_back(spec);
  }
  if (has_bootstrap && o.bootstrap_reps < 100) {
    throw ValidationError("simulate: --bootstrap-reps must be at least 100");
  }

  const std::uint64_t pop_seed =
      o.superpop_seed != 0 ? o.superpop_seed : derive_seed(o.seed, 1000);
  err << "simulate: building super-population (n=" << o.superpop_size
      << ")\n";
  const SuperPopulation pop = make_superpopulation(pop_seed, o.superpop_size);
  SelectionModel selection;
  selection.alpha = calibrate_alpha(pop, selection.coefficients);
  err << "simulate: calibrated alpha=" << fmt_double(selection.alpha) << '\n';

  const int step = std::max(1, o.reps / 20);
  mc.progress = [&err, step](int done, int total) {
    if (done % step == 0 || done == total) {
      err << "progress " << done << '/' << total << '\n';
    }
  };

  const SimulationReport report = run_monte_carlo(pop, selection, scenario, mc);

  write_report_table(out, report);

  std::string method_list;
  for (const std::string& token : o.methods) {
    if (!method_list.empty()) method_list += ',';
    method_list += token;
  }
  if (method_list.empty()) method_list = "default";
  const ConfigItems config{
      {"setting", std::to_string(o.setting)},
      {"n_r", std::to_string(scenario.n_r)},
      {"reps", std::to_string(o.reps)},
      {"bootstrap_reps", std::to_string(o.bootstrap_reps)},
      {"seed", std::to_string(o.seed)},
      {"methods", method_list},
      {"superpop_size", std::to_string(o.superpop_size)},
      {"superpop_seed", std::to_string(pop_seed)},
      {"eps_variance", fmt_double(o.eps_variance)},
      {"alpha", fmt_double(selection.alpha)},
  };
  if (!o.output.empty()) {
    std::ostringstream csv;
    write_audit(csv, "simulate", config);
    write_report_csv(csv, report);
    write_file(o.output, csv.str());
    out << "wrote " << o.output << '\n';
  }
  if (!o.table_output.empty()) {
    std::ostringstream table;
    write_audit(table, "simulate", config);
    write_report_table(table, report);
    write_file(o.table_output, table.str());
    out << "wrote " << o.table_output << '\n';
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{
      "Augments a randomized trial's control arm with optimally matched "
      "external controls: selection-score fitting, 1:1 matching without "
      "replacement, weighted effect estimates with closed-form and "
      "matched-pair-bootstrap standard errors, balance diagnostics, and a "
      "Monte Carlo evaluation harness.",
      "ecmatch"};
  app.set_version_flag("--version", std::string("ecmatch ") + kVersion);
  app.require_subcommand(1);

  // The config file is merged into the argument list by expand_config()
  // before parsing; this option only documents it and records the path.
  std::string config_path;
  const auto add_config_flag = [&config_path](CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "Flat key=value config file; explicit flags win");
  };

  AnalyzeOpts an;
  CLI::App* analyze = app.add_subcommand(
      "analyze", "Fit, match, and estimate per-arm treatment effects");
  add_config_flag(analyze);
  analyze->add_option("--input", an.input, "Dataset file (CSV)")->required();
  analyze->add_option("--output", an.output, "Estimates file to write")
      ->required();
  analyze->add_option("--balance-output", an.balance_output,
                      "Balance report file (default: <output>.balance.csv)");
  add_schema_flags(analyze, an.schema);
  analyze->add_option("--w", an.w,
                      "Weight on the concurrent-control mean: 'balanced' "
                      "(n_0/n_a) or a fixed value in (0,1)")
      ->capture_default_str();
  analyze->add_option("--se", an.se, "Standard-error method")
      ->check(CLI::IsMember({"simple", "bootstrap", "both"}))
      ->capture_default_str();
  analyze
      ->add_option("--bootstrap-reps", an.bootstrap_reps,
                   "Bootstrap resamples (>= 100)")
      ->capture_default_str();
  analyze->add_option("--caliper", an.caliper,
                      "Maximum admissible score distance for a pair");
  analyze->add_option("--score-scale", an.scale, "Matching-distance scale")
      ->check(CLI::IsMember({"logit", "probability"}))
      ->capture_default_str();
  analyze->add_option("--eta", an.eta, "Overlap threshold in (0,1)")
      ->capture_default_str();
  analyze->add_option("--seed", an.seed, "Master seed for the bootstrap")
      ->capture_default_str();

  MatchOpts ma;
  CLI::App* match = app.add_subcommand(
      "match",
      "Blinded matching: build and lock the matched external-control set "
      "(any arm column is ignored)");
  add_config_flag(match);
  match->add_option("--input", ma.input, "Dataset file (CSV)")->required();
  match->add_option("--output", ma.output, "Matched-pairs file to write")
      ->required();
  add_schema_flags(match, ma.schema);
  match->add_option("--caliper", ma.caliper,
                    "Maximum admissible score distance for a pair");
  match->add_option("--score-scale", ma.scale, "Matching-distance scale")
      ->check(CLI::IsMember({"logit", "probability"}))
      ->capture_default_str();

  DiagnoseOpts di;
  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Balance and overlap diagnostics (blinded)");
  add_config_flag(diagnose);
  diagnose->add_option("--input", di.input, "Dataset file (CSV)")->required();
  diagnose->add_option("--output", di.output, "Balance report file to write")
      ->required();
  add_schema_flags(diagnose, di.schema);
  diagnose->add_option("--caliper", di.caliper,
                       "Maximum admissible score distance for a pair");
  diagnose->add_option("--score-scale", di.scale, "Matching-distance scale")
      ->check(CLI::IsMember({"logit", "probability"}))
      ->capture_default_str();
  diagnose->add_option("--eta", di.eta, "Overlap threshold in (0,1)")
      ->capture_default_str();
  diagnose->add_flag("--before-only", di.before_only,
                     "Skip matching; report pre-matching balance only");

  SimulateOpts si;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo evaluation of the estimators");
  add_config_flag(simulate);
  simulate->add_option("--setting", si.setting, "Scenario: 1, 2 or 3")
      ->check(CLI::IsMember({1, 2, 3}))
      ->capture_default_str();
  simulate->add_option("--n-rct", si.n_r,
                       "Total trial size (default 90; 150 for setting 3)");
  simulate->add_option("--reps", si.reps, "Replications")
      ->capture_default_str();
  simulate
      ->add_option("--bootstrap-reps", si.bootstrap_reps,
                   "Bootstrap resamples (>= 100)")
      ->capture_default_str();
  simulate->add_option("--seed", si.seed, "Master seed")
      ->capture_default_str();
  simulate->add_option("--threads", si.threads, "Worker threads")
      ->envname("ECMATCH_THREADS")
      ->capture_default_str();
  simulate
      ->add_option("--methods", si.methods,
                   "Methods: raw, new_simple, new_bootstrap, nc<J> "
                   "(default: all, nc with J=1,2,3)")
      ->delimiter(',');
  simulate
      ->add_option("--superpop-size", si.superpop_size,
                   "Super-population size (>= 10000)")
      ->capture_default_str();
  simulate->add_option("--superpop-seed", si.superpop_seed,
                       "Super-population seed (default: derived from --seed)");
  simulate
      ->add_option("--eps-variance", si.eps_variance,
                   "Setting-1 treated-outcome noise variance")
      ->capture_default_str();
  simulate->add_option("--output", si.output, "Report CSV file to write");
  simulate->add_option("--table-output", si.table_output,
                       "Aligned text table file to write");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const ValidationError& e) {
    emit_error(err, "validation", 2, e.what());
    return 2;
  }

  std::vector<std::string> full;
  full.reserve(expanded.size() + 1);
  full.push_back("ecmatch");
  full.insert(full.end(), expanded.begin(), expanded.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    emit_error(err, "validation", 2, e.what());
    return 2;
  }

  try {
    if (app.got_subcommand(analyze)) return do_analyze(an, out, err);
    if (app.got_subcommand(match)) return do_match(ma, out, err);
    if (app.got_subcommand(diagnose)) return do_diagnose(di, out, err);
    if (app.got_subcommand(simulate)) return do_simulate(si, out, err);
    emit_error(err, "validation", 2, "no command given");
    return 2;
  } catch (const ValidationError& e) {
    emit_error(err, "validation", 2, e.what());
    return 2;
  } catch (const NumericalError& e) {
    emit_error(err, "numerical", 3, e.what());
    return 3;
  } catch (const MatchingError& e) {
    emit_error(err, "infeasible", 4, e.what(), e.unmatchable());
    return 4;
  } catch (const std::exception& e) {
    emit_error(err, "internal", 1, e.what());
    return 1;
  }
}

}  // namespace ecmatch::cli
