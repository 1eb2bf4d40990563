#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ecmatch/cli.hpp"
#include "ecmatch/dataset.hpp"
#include "ecmatch/estimator.hpp"
#include "ecmatch/matcher.hpp"
#include "ecmatch/propensity.hpp"
#include "ecmatch/rng.hpp"
#include "ecmatch/sha256.hpp"
#include "ecmatch/textio.hpp"
#include "test_support.hpp"

using namespace ecmatch;
using testsupport::CliResult;
using testsupport::TempDir;
using testsupport::read_file;

namespace {

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Unbalanced two-arm trial (10 controls, 20 treated, 120 externals) written
// to disk; the analysis weight n_0/n_1 = 0.5 is then strictly inside (0,1).
std::string write_fixture_dataset(const TempDir& dir, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Subject> subjects;
  int id = 0;
  for (int arm = 0; arm <= 1; ++arm) {
    const int count = arm == 0 ? 10 : 20;
    for (int i = 0; i < count; ++i) {
      Subject s;
      s.id = "R" + std::to_string(id++);
      s.source = Source::RCT;
      s.arm = arm;
      s.outcome = z(gen);
      s.covariates = {z(gen), z(gen)};
      subjects.push_back(std::move(s));
    }
  }
  for (int i = 0; i < 120; ++i) {
    Subject s;
    s.id = "E" + std::to_string(i);
    s.source = Source::EC;
    s.outcome = z(gen);
    s.covariates = {z(gen), z(gen)};
    subjects.push_back(std::move(s));
  }
  const auto ds = TrialDataset::build(std::move(subjects), {"x1", "x2"});
  const std::string path = dir.file("trial.csv");
  save_dataset(path, ds);
  return path;
}

}  // namespace

TEST_CASE("cli: version, help and argument errors") {
  const auto version = run_cli({"--version"});
  CHECK(version.code == 0);
  CHECK(version.out.find("ecmatch") != std::string::npos);

  const auto help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("analyze") != std::string::npos);
  CHECK(help.out.find("simulate") != std::string::npos);

  const auto none = run_cli({});
  CHECK(none.code == 2);
  CHECK(none.err.find("error kind=validation code=2") != std::string::npos);

  const auto unknown = run_cli({"analyze", "--nope"});
  CHECK(unknown.code == 2);

  const auto missing_input = run_cli({"analyze"});
  CHECK(missing_input.code == 2);
}

TEST_CASE("cli: analyze end to end matches the library computation") {
  TempDir dir;
  const std::string input = write_fixture_dataset(dir, 31);
  const std::string output = dir.file("estimates.csv");

  const auto result = run_cli({"analyze", "--input", input, "--output", output,
                               "--w", "0.5", "--bootstrap-reps", "100"});
  REQUIRE(result.code == 0);
  CHECK(result.out.find("n_r=30") != std::string::npos);
  CHECK(result.out.find("matched=30") != std::string::npos);
  CHECK(result.out.find("wrote " + output) != std::string::npos);

  const std::string estimates = read_file(output);
  CHECK(estimates.rfind("# ecmatch ", 0) == 0);
  CHECK(estimates.find("# command: analyze") != std::string::npos);
  CHECK(estimates.find("# config:") != std::string::npos);
  CHECK(estimates.find(" w=0.5 ") != std::string::npos);
  CHECK(estimates.find("arm,method,point,se,ci_low,ci_high,w,arm_mean,"
                       "cc_mean,ec_mean,n_a,n_0,n_e,bootstrap_reps") !=
        std::string::npos);

  // Recompute the exact rows the file must contain.
  const TrialDataset ds = load_dataset(input);
  const ScoreResult scores = selection_scores(ds);
  const MatchResult match = optimal_match(ds, scores.logit);
  const auto simple =
      new_design_estimate(ds, match, 1, 0.5, EstimateMethod::NewSimple);
  Rng boot(derive_seed(1, 101));
  const auto bootstrap = new_design_estimate(
      ds, match, 1, 0.5, EstimateMethod::NewBootstrap, 100, &boot);

  const std::string simple_row = "1,new_simple," + fmt_double(simple.point) +
                                 ',' + fmt_double(simple.se);
  const std::string bootstrap_row = "1,new_bootstrap," +
                                    fmt_double(bootstrap.point) + ',' +
                                    fmt_double(bootstrap.se);
  CHECK(estimates.find(simple_row) != std::string::npos);
  CHECK(estimates.find(bootstrap_row) != std::string::npos);

  // The balance report lands next to the estimates by default.
  const std::string balance = read_file(output + ".balance.csv");
  CHECK(balance.find("# command: analyze") != std::string::npos);
  CHECK(balance.find("smd_before,x1,") != std::string::npos);
  CHECK(balance.find("smd_after,x1,") != std::string::npos);
  CHECK(balance.find("score_n,EC_matched,30") != std::string::npos);

  // Re-running produces byte-identical outputs.
  const std::string output2 = dir.file("estimates2.csv");
  const auto rerun = run_cli({"analyze", "--input", input, "--output", output2,
                              "--w", "0.5", "--bootstrap-reps", "100"});
  REQUIRE(rerun.code == 0);
  const std::string second = read_file(output2);
  // The config line embeds the output path; compare everything after it.
  const auto tail = [](const std::string& text) {
    return text.substr(text.find("arm,method"));
  };
  CHECK(tail(estimates) == tail(second));
}

TEST_CASE("cli: analyze validation failures") {
  TempDir dir;
  const std::string input = write_fixture_dataset(dir, 37);
  const std::string output = dir.file("est.csv");

  const auto bad_w = run_cli({"analyze", "--input", input, "--output", output,
                              "--w", "1.5"});
  CHECK(bad_w.code == 2);
  CHECK(bad_w.err.find("error kind=validation code=2") != std::string::npos);

  const auto zero_w = run_cli({"analyze", "--input", input, "--output", output,
                               "--w", "0"});
  CHECK(zero_w.code == 2);

  const auto small_b = run_cli({"analyze", "--input", input, "--output", output,
                                "--bootstrap-reps", "50"});
  CHECK(small_b.code == 2);
  CHECK(small_b.err.find("at least 100") != std::string::npos);

  const auto no_file = run_cli({"analyze", "--input", dir.file("missing.csv"),
                                "--output", output});
  CHECK(no_file.code == 2);

  const auto bad_scale = run_cli({"analyze", "--input", input, "--output",
                                  output, "--score-scale", "banana"});
  CHECK(bad_scale.code == 2);
}

TEST_CASE("cli: analyze reports numerical failures as exit 3") {
  TempDir dir;
  // Source is perfectly separated on x1. The covariate scale is small, so
  // saturating the likelihood needs coefficients beyond the divergence bound.
  std::ostringstream csv;
  csv << "id,source,arm,outcome,x1\n";
  for (int i = 0; i < 10; ++i) {
    csv << 'R' << i << ",1," << i % 2 << ",0.5," << 0.5 + 0.001 * i << '\n';
  }
  for (int i = 0; i < 20; ++i) {
    csv << 'E' << i << ",0,0,0.1," << -0.5 - 0.001 * i << '\n';
  }
  const std::string path = dir.file("separated.csv");
  std::ofstream(path) << csv.str();

  const auto result = run_cli({"analyze", "--input", path, "--output",
                               dir.file("out.csv")});
  CHECK(result.code == 3);
  CHECK(result.err.find("error kind=numerical code=3") != std::string::npos);
}

TEST_CASE("cli: match is deterministic, hashed and blind") {
  TempDir dir;
  const std::string input = write_fixture_dataset(dir, 41);
  const std::string pairs_path = dir.file("pairs.csv");

  const auto result = run_cli({"match", "--input", input, "--output", pairs_path});
  REQUIRE(result.code == 0);
  CHECK(result.out.find("pairs=30") != std::string::npos);

  const std::string content = read_file(pairs_path);
  CHECK(content.find("# command: match") != std::string::npos);
  CHECK(content.find("seed=none") != std::string::npos);
  CHECK(content.find("rct_id,ec_id,rct_score_logit,ec_score_logit,distance") !=
        std::string::npos);

  // The printed digest is the digest of the file content.
  const std::string expected_line = "sha256=" + sha256_hex(content);
  CHECK(result.out.find(expected_line) != std::string::npos);

  // Re-running yields byte-identical output.
  const std::string again_path = dir.file("pairs_again.csv");
  const auto again = run_cli({"match", "--input", input, "--output", again_path});
  REQUIRE(again.code == 0);
  const std::string again_content = read_file(again_path);
  const auto body = [](const std::string& text) {
    return text.substr(text.find("rct_id,"));
  };
  CHECK(body(content) == body(again_content));

  // Blindness: flipping every arm changes nothing in the pairs file.
  const TrialDataset ds = load_dataset(input);
  auto flipped_subjects = ds.subjects;
  for (auto& s : flipped_subjects) {
    if (s.source == Source::RCT) s.arm = 1 - s.arm;
  }
  const auto flipped = TrialDataset::build(std::move(flipped_subjects),
                                           ds.covariate_names);
  const std::string flipped_input = dir.file("flipped.csv");
  save_dataset(flipped_input, flipped);
  const std::string flipped_pairs = dir.file("pairs_flipped.csv");
  const auto blind = run_cli({"match", "--input", flipped_input, "--output",
                              flipped_pairs});
  REQUIRE(blind.code == 0);
  CHECK(body(read_file(flipped_pairs)) == body(content));

  // A dataset without any arm column is accepted for matching.
  std::ostringstream no_arm;
  no_arm << "id,source,outcome,x1,x2\n";
  for (const auto& s : ds.subjects) {
    no_arm << s.id << ',' << (s.source == Source::RCT ? 1 : 0) << ','
           << fmt_double(s.outcome) << ',' << fmt_double(s.covariates[0])
           << ',' << fmt_double(s.covariates[1]) << '\n';
  }
  const std::string no_arm_input = dir.file("no_arm.csv");
  std::ofstream(no_arm_input) << no_arm.str();
  const std::string no_arm_pairs = dir.file("pairs_no_arm.csv");
  const auto unblinded = run_cli({"match", "--input", no_arm_input, "--output",
                                  no_arm_pairs});
  REQUIRE(unblinded.code == 0);
  CHECK(body(read_file(no_arm_pairs)) == body(content));
}

TEST_CASE("cli: match reports infeasibility as exit 4") {
  TempDir dir;
  const std::string input = write_fixture_dataset(dir, 43);
  const auto result = run_cli({"match", "--input", input, "--output",
                               dir.file("pairs.csv"), "--caliper", "1e-9"});
  CHECK(result.code == 4);
  CHECK(result.err.find("error kind=infeasible code=4") != std::string::npos);
  CHECK(result.err.find("unmatchable=") != std::string::npos);
}

TEST_CASE("cli: diagnose summarizes balance before and after") {
  TempDir dir;
  const std::string input = write_fixture_dataset(dir, 47);
  const std::string report_path = dir.file("balance.csv");

  const auto result = run_cli({"diagnose", "--input", input, "--output",
                               report_path});
  REQUIRE(result.code == 0);
  CHECK(result.out.find("max_abs_smd_before=") != std::string::npos);
  CHECK(result.out.find("max_abs_smd_after=") != std::string::npos);
  CHECK(result.out.find("overlap_ok=") != std::string::npos);
  const std::string report = read_file(report_path);
  CHECK(report.find("# command: diagnose") != std::string::npos);
  CHECK(report.find("smd_after,") != std::string::npos);

  const std::string before_path = dir.file("before.csv");
  const auto before = run_cli({"diagnose", "--input", input, "--output",
                               before_path, "--before-only"});
  REQUIRE(before.code == 0);
  CHECK(before.out.find("max_abs_smd_after=") == std::string::npos);
  CHECK(read_file(before_path).find("smd_after,") == std::string::npos);

  const auto bad_eta = run_cli({"diagnose", "--input", input, "--output",
                                before_path, "--eta", "1.5"});
  CHECK(bad_eta.code == 2);
}

TEST_CASE("cli: simulate writes audited deterministic reports") {
  TempDir dir;
  const std::string csv1 = dir.file("sim1.csv");
  const std::string csv2 = dir.file("sim2.csv");
  const std::string table_path = dir.file("sim.txt");

  const auto result = run_cli({"simulate", "--setting", "1", "--reps", "12",
                               "--bootstrap-reps", "100", "--seed", "5",
                               "--threads", "2", "--output", csv1,
                               "--table-output", table_path});
  REQUIRE(result.code == 0);
  CHECK(result.out.find("Setting S1, n_r=90, 12 replications") != std::string::npos);
  CHECK(result.out.find("NC matching") != std::string::npos);
  CHECK(result.out.find("wrote " + csv1) != std::string::npos);
  CHECK(result.err.find("calibrated alpha=") != std::string::npos);
  CHECK(result.err.find("progress 12/12") != std::string::npos);

  const std::string csv = read_file(csv1);
  CHECK(csv.rfind("# ecmatch ", 0) == 0);
  CHECK(csv.find("# command: simulate") != std::string::npos);
  CHECK(csv.find("setting=1") != std::string::npos);
  CHECK(csv.find("seed=5") != std::string::npos);
  CHECK(csv.find("# setting=S1 n_r=90 reps=12 bootstrap_reps=100 "
                 "master_seed=5 failed_replications=0") != std::string::npos);
  CHECK(csv.find("\nnc,1,1,0,") != std::string::npos);
  CHECK(csv.find("\nraw,1,,0,") != std::string::npos);
  // The audit line never mentions the thread count.
  CHECK(csv.find("threads") == std::string::npos);

  const std::string table = read_file(table_path);
  CHECK(table.find("# command: simulate") != std::string::npos);
  CHECK(table.find("Type-I error") != std::string::npos);

  // One worker reproduces the same bytes.
  const auto serial = run_cli({"simulate", "--setting", "1", "--reps", "12",
                               "--bootstrap-reps", "100", "--seed", "5",
                               "--threads", "1", "--output", csv2});
  REQUIRE(serial.code == 0);
  // Only the output path differs between the two invocations' configs.
  const auto results_part = [](const std::string& text) {
    return text.substr(text.find("# setting="));
  };
  CHECK(results_part(read_file(csv2)) == results_part(csv));
}

TEST_CASE("cli: simulate honours method subsets and flags beat config files") {
  TempDir dir;
  const std::string cfg = dir.file("sim.cfg");
  std::ofstream(cfg) << "setting=2\nreps=10\nbootstrap-reps=100\nseed=3\n";

  const std::string out_path = dir.file("sim.csv");
  const auto result = run_cli({"simulate", "--config", cfg, "--seed", "9",
                               "--methods", "raw,nc2", "--output", out_path});
  REQUIRE(result.code == 0);
  const std::string csv = read_file(out_path);
  // The config file set the scenario; the command line won the seed.
  CHECK(csv.find("# setting=S2 n_r=90 reps=10") != std::string::npos);
  CHECK(csv.find("master_seed=9") != std::string::npos);
  CHECK(csv.find("\nraw,1,,-1,") != std::string::npos);
  CHECK(csv.find("\nnc,1,2,-1,") != std::string::npos);
  CHECK(csv.find("new_simple") == std::string::npos);
  CHECK(csv.find("new_bootstrap") == std::string::npos);

  // Without a bootstrap method the replication floor does not apply.
  const auto raw_only = run_cli({"simulate", "--setting", "1", "--reps", "6",
                                 "--methods", "raw", "--bootstrap-reps", "50",
                                 "--output", dir.file("raw.csv")});
  CHECK(raw_only.code == 0);

  const auto bad_setting = run_cli({"simulate", "--setting", "4", "--reps", "6"});
  CHECK(bad_setting.code == 2);

  const auto bad_reps = run_cli({"simulate", "--setting", "1", "--reps", "0"});
  CHECK(bad_reps.code == 2);

  const auto bad_method = run_cli({"simulate", "--setting", "1", "--reps", "6",
                                   "--methods", "magic"});
  CHECK(bad_method.code == 2);

  const auto nc_multiarm = run_cli({"simulate", "--setting", "3", "--reps", "6",
                                    "--methods", "nc2", "--bootstrap-reps",
                                    "100"});
  CHECK(nc_multiarm.code == 2);
}

TEST_CASE("cli: simulate reads the worker count from the environment") {
  TempDir dir;
  const std::string with_env = dir.file("env.csv");
  const std::string with_flag = dir.file("flag.csv");

  ::setenv("ECMATCH_THREADS", "2", 1);
  const auto env_run = run_cli({"simulate", "--setting", "1", "--reps", "8",
                                "--bootstrap-reps", "100", "--seed", "2",
                                "--output", with_env});
  ::unsetenv("ECMATCH_THREADS");
  REQUIRE(env_run.code == 0);

  const auto flag_run = run_cli({"simulate", "--setting", "1", "--reps", "8",
                                 "--bootstrap-reps", "100", "--seed", "2",
                                 "--threads", "2", "--output", with_flag});
  REQUIRE(flag_run.code == 0);

  const auto results_part = [](const std::string& text) {
    return text.substr(text.find("# setting="));
  };
  CHECK(results_part(read_file(with_env)) == results_part(read_file(with_flag)));
}
