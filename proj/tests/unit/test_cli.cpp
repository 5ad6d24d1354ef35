#include <gtest/gtest.h>

#include <sstream>
#include <vector>

#include "app.hpp"
#include "support.hpp"

using namespace chiron;
using chiron::testing::read_file;
using chiron::testing::TempDir;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "chiron");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return app::run(static_cast<int>(argv.size()), argv.data());
}

std::string write_dataset(TempDir& dir) {
  const RatingMatrix m = chiron::testing::clustered_matrix(40, 30, 0.35, 51);
  std::ostringstream out;
  for (const Triple& t : m.triples()) out << "u" << t.user << '\t' << "i" << t.item << '\t' << t.rating << '\n';
  return dir.file("ratings.tsv", out.str()).string();
}

std::string small_config(const std::string& output) {
  return "[data]\npath = ratings.tsv\nname = toy\n"
         "[experiment]\nmethods = chiron,slope_one,global_mean\ntrials = 2\noutput = " +
         output +
         "\n"
         "[chiron]\nrestarts = 1\ngrid = 0,0.5\n"
         "[attack]\nsize = 0.2\ntarget_count = 3\nseed = 4\n"
         "[sweep]\nsizes = 0.1,0.3\n";
}

}  // namespace

TEST(Config, DefaultsLoadAndRoundTrip) {
  const app::RunConfig c = app::load_config(std::nullopt, {});
  EXPECT_EQ(c.trials, 10);
  EXPECT_EQ(c.methods.size(), 6u);
  EXPECT_EQ(c.settings.user_knn_k, 20);
  EXPECT_EQ(c.attack.model, AttackModel::average);
  EXPECT_EQ(c.sweep_sizes.size(), 10u);
  EXPECT_EQ(c.settings.chiron.fit.denominator_scope, DenominatorScope::all_observed);
  EXPECT_FALSE(c.settings.chiron.lambda1.has_value());

  TempDir dir("config");
  const auto resolved = dir.file("r.ini", app::resolved_config_text(std::nullopt, {"experiment.trials=3"}));
  EXPECT_EQ(app::load_config(resolved, {}).trials, 3);
  EXPECT_EQ(app::resolved_config_text(resolved, {}), read_file(resolved));
}

TEST(Config, OverridesAndErrors) {
  const app::RunConfig c = app::load_config(std::nullopt, {"chiron.lambda1=0.3", "attack.model=bandwagon"});
  EXPECT_EQ(c.settings.chiron.lambda1, 0.3);
  EXPECT_EQ(c.attack.model, AttackModel::bandwagon);
  EXPECT_THROW(app::load_config(std::nullopt, {"chiron.nope=1"}), app::ConfigError);
  EXPECT_THROW(app::load_config(std::nullopt, {"nosection.k=1"}), app::ConfigError);
  EXPECT_THROW(app::load_config(std::nullopt, {"experiment.trials=many"}), app::ConfigError);
  EXPECT_THROW(app::load_config(std::nullopt, {"experiment.methods=chiron,bogus"}), app::ConfigError);
  EXPECT_THROW(app::load_config(std::nullopt, {"missing-equals"}), app::ConfigError);
  TempDir dir("config-errors");
  EXPECT_THROW(app::load_config(dir.file("bad.ini", "[data\n"), {}), app::ConfigError);
}

TEST(Cli, ExitCodes) {
  TempDir dir("exit");
  EXPECT_EQ(run_cli({}), app::config_error);
  EXPECT_EQ(run_cli({"defaults"}), app::ok);
  EXPECT_EQ(run_cli({"ingest", (dir.path() / "nothing.tsv").string()}), app::data_error);
  const auto bad = dir.file("bad.tsv", "1\t1\t3\n1\t2\n");
  EXPECT_EQ(run_cli({"ingest", bad.string()}), app::data_error);
  EXPECT_EQ(run_cli({"ingest", bad.string(), "--set", "chiron.nope=1"}), app::config_error);
}

TEST(Cli, IngestSummary) {
  TempDir dir("ingest");
  const auto path = dir.file("r.tsv", "a\tx\t5\na\ty\t3\nb\tx\t1\n");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run_cli({"ingest", path.string()}), app::ok);
  const std::string out = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(out.find("users    2\n"), std::string::npos) << out;
  EXPECT_NE(out.find("items    2\n"), std::string::npos) << out;
  EXPECT_NE(out.find("entries  3\n"), std::string::npos) << out;
}

TEST(Cli, FitAttackSweepAndRerun) {
  TempDir dir("run");
  write_dataset(dir);
  const auto cfg = dir.file("run.ini", small_config((dir.path() / "out").string()));
  ASSERT_EQ(run_cli({"fit", "--config", cfg.string()}), app::ok);
  for (const char* f : {"model.txt", "fit_log.csv", "lambda_search.csv", "user_ids.tsv", "config.resolved.ini"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / f)) << f;
  }
  EXPECT_EQ(read_file(dir.path() / "out" / "fit_log.csv").rfind("restart,sweep,objective,q_residual,p_residual", 0),
            0u);

  ASSERT_EQ(run_cli({"attack", "--config", cfg.string()}), app::ok);
  const std::string report = read_file(dir.path() / "out" / "report.csv");
  EXPECT_NE(report.find("chiron,toy,2,"), std::string::npos);
  EXPECT_NE(report.find("slope_one,toy,2,"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / "attack_profiles.tsv.meta"));

  // the echoed config reproduces the run byte for byte
  const auto echoed = dir.path() / "out" / "config.resolved.ini";
  const auto copy = dir.file("echo.ini", read_file(echoed));
  ASSERT_EQ(run_cli({"attack", "--config", copy.string(), "--set",
                     "experiment.output=" + (dir.path() / "again").string()}),
            app::ok);
  EXPECT_EQ(read_file(dir.path() / "again" / "report.csv"), report);
  EXPECT_EQ(read_file(dir.path() / "again" / "trials.csv"), read_file(dir.path() / "out" / "trials.csv"));

  ASSERT_EQ(run_cli({"sweep", "--config", cfg.string(), "--set", "experiment.methods=slope_one"}), app::ok);
  const std::string sweep = read_file(dir.path() / "out" / "sweep.csv");
  EXPECT_NE(sweep.find("slope_one,0.1,"), std::string::npos);
  EXPECT_NE(sweep.find("slope_one,0.3,"), std::string::npos);
}
