#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

fixtures::CommandResult cli(const std::string& args) { return fixtures::run_command(std::string(EHRSYNTH_CLI) + " " + args); }

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ehrsynth-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("generate --patients lots").status, 2);
  EXPECT_EQ(cli("generate --backend gpt").status, 2);
}

TEST(Cli, MissingConfigNamesThePath) {
  const auto r = cli("generate --config /nonexistent/ehrsynth.ini --out " + scratch("cfg").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("/nonexistent/ehrsynth.ini"), std::string::npos) << r.output;
}

TEST(Cli, BadConfigKeyExitsTwo) {
  const auto dir = scratch("badkey");
  {
    std::ofstream(dir / "c.ini") << "[generation]\npatientz = 3\n";
  }
  const auto r = cli("generate --config " + (dir / "c.ini").string() + " --out " + dir.string());
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("generation.patientz"), std::string::npos) << r.output;
}

TEST(Cli, GenerateIsDeterministic) {
  const auto a = scratch("gen-a"), b = scratch("gen-b");
  ASSERT_EQ(cli("generate --patients 3 --seed 5 --out " + a.string()).status, 0);
  ASSERT_EQ(cli("generate --patients 3 --seed 5 --workers 3 --out " + b.string()).status, 0);
  EXPECT_EQ(fixtures::read_text((a / "cohort.json").string()), fixtures::read_text((b / "cohort.json").string()));
  const auto c = scratch("gen-c");
  ASSERT_EQ(cli("generate --patients 3 --seed 6 --out " + c.string()).status, 0);
  EXPECT_NE(fixtures::read_text((a / "cohort.json").string()), fixtures::read_text((c / "cohort.json").string()));
}

TEST(Cli, StagewiseCommandsMatchThePipeline) {
  const auto dir = scratch("stages");
  ASSERT_EQ(cli("generate --patients 4 --seed 11 --out " + dir.string()).status, 0);
  const auto v = cli("validate --epochs 25 --out " + dir.string());
  ASSERT_EQ(v.status, 0) << v.output;
  ASSERT_EQ(cli("report --out " + dir.string()).status, 0);
  for (const char* f : {"hist_nsp_avg.csv", "hist_perplexity.csv", "hist_recon_error.csv", "hist_consistency.csv",
                        "hist_combined.csv", "report_summary.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto s = cli("emit-sql --report " + (dir / "validation_report.csv").string() + " --out " + dir.string());
  ASSERT_EQ(s.status, 0) << s.output;
  EXPECT_TRUE(fs::exists(dir / "gated.sql"));
  EXPECT_TRUE(fs::exists(dir / "quarantine.json"));

  const auto p = scratch("stages-pipe");
  ASSERT_EQ(cli("pipeline --patients 4 --seed 11 --epochs 25 --out " + p.string()).status, 0);
  for (const char* f : {"cohort.json", "validation_report.csv", "gated.sql"})
    EXPECT_EQ(fixtures::read_text((dir / f).string()), fixtures::read_text((p / f).string())) << f;
}

TEST(Cli, StrictFailsOnGateFailures) {
  const auto dir = scratch("strict");
  const auto r = cli("pipeline --strict --patients 4 --seed 11 --error-rate 0.3 --epochs 25 --out " + dir.string());
  EXPECT_EQ(r.status, 1) << r.output;
  EXPECT_TRUE(fs::exists(dir / "validation_report.csv"));
}

TEST(Cli, LoadWithoutUrlIsConfigError) {
  const auto dir = scratch("load");
  ASSERT_EQ(cli("generate --patients 1 --out " + dir.string()).status, 0);
  const auto r = fixtures::run_command("env -u EHRSYNTH_DATABASE_URL " + std::string(EHRSYNTH_CLI) + " load --out " +
                                       dir.string());
  EXPECT_EQ(r.status, 2) << r.output;
}

TEST(Cli, SchemaCommand) {
  const auto dir = scratch("schema");
  ASSERT_EQ(cli("schema --out " + dir.string()).status, 0);
  const auto ddl = fixtures::read_text((dir / "schema.sql").string());
  std::size_t creates = 0;
  for (auto p = ddl.find("CREATE TABLE"); p != std::string::npos; p = ddl.find("CREATE TABLE", p + 1)) ++creates;
  EXPECT_EQ(creates, 22u);
}
