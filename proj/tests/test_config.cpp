#include <gtest/gtest.h>

#include <cstdlib>

#include "ehrsynth/coherence.hpp"
#include "ehrsynth/config.hpp"
#include "ehrsynth/errors.hpp"

using namespace ehrsynth;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "test.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsWithoutFile) {
  const auto c = parse_config("");
  EXPECT_EQ(c.generation.patients, 42);
  EXPECT_EQ(c.generation.backend, "grammar");
  EXPECT_EQ(c.validation.effective_coherence_threshold(), kLexicalCoherenceThreshold);
  EXPECT_EQ(c.validation.percentile, 95.0);
  EXPECT_EQ(c.anomaly.training.epochs, 200);
  EXPECT_EQ(c.scoring.histogram_bins, 20);
}

TEST(Config, ParsesEverySection) {
  const auto c = parse_config(R"(
[generation]
patients = 7
seed = 99
error_rate = 0
workers = 3
rows.vital_signs = 2,4
[validation]
scorers = remote
percentile = 90
lm_order = 2
rules = R1, R3
[anomaly]
epochs = 15
widths = 4,2
[diversity]
coverage_floor = 0.5
[scoring]
w_anomaly = 0
histogram_bins = 10
[load]
batch_rows = 50
create_schema = no
[ranges]
test_results.potassium_mmol_l = 1,3,5.5,9
)");
  EXPECT_EQ(c.generation.patients, 7);
  EXPECT_EQ(c.generation.seed, 99u);
  EXPECT_EQ(c.generation.error_rate, 0.0);
  EXPECT_EQ(c.generation.engine.workers, 3u);
  EXPECT_EQ(c.generation.engine.plans.at("vital_signs").max_count, 4);
  EXPECT_EQ(c.validation.effective_coherence_threshold(), kRemoteCoherenceThreshold);
  EXPECT_EQ(c.validation.percentile, 90.0);
  EXPECT_EQ(c.validation.rules, (std::vector<std::string>{"R1", "R3"}));
  EXPECT_EQ(c.anomaly.training.epochs, 15);
  EXPECT_EQ(c.anomaly.widths, (std::vector<int>{4, 2}));
  EXPECT_EQ(c.diversity.coverage_floor, 0.5);
  EXPECT_EQ(c.scoring.weights.anomaly, 0.0);
  EXPECT_EQ(c.load.batch_rows, 50u);
  EXPECT_FALSE(c.load.create_schema);
  const auto schema = resolve_schema(c);
  const auto& k = *schema.table("test_results")->column("potassium_mmol_l")->range;
  EXPECT_EQ(k.hard_max, 9.0);
  EXPECT_EQ(k.unit, "mmol/L");
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(error_of("[generation]\npatientz = 3\n").find("test.ini: generation.patientz: unknown key"),
            std::string::npos);
  EXPECT_NE(error_of("[bogus]\na = 1\n").find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("[generation]\npatients = many\n").find("generation.patients"), std::string::npos);
  EXPECT_NE(error_of("[validation]\npercentile = 0\n"), "");
  EXPECT_NE(error_of("[validation]\nrules = R1,R7\n"), "");
  EXPECT_NE(error_of("[ranges]\nvital_signs.heart_rate_bpm = 10,5,200,300\n").find("hard_min"), std::string::npos);
  EXPECT_THROW(resolve_schema(parse_config("[ranges]\nvital_signs.nope = 1,2,3,4\n")), ConfigError);
}

TEST(Config, CredentialsStayOutOfTheFile) {
  EXPECT_NE(error_of("[load]\nurl = postgresql://alice:pw@db/ehr\n").find("environment"), std::string::npos);
  EXPECT_NE(error_of("[load]\nurl = host=db password=pw\n"), "");
  const auto c = parse_config("[load]\nurl = postgresql://alice@db/ehr\nurl_env = EHRSYNTH_TEST_DB_URL\n");
  ::unsetenv("EHRSYNTH_TEST_DB_URL");
  EXPECT_EQ(c.load.resolved_url(), "postgresql://alice@db/ehr");
  ::setenv("EHRSYNTH_TEST_DB_URL", "postgresql://bob@other/ehr", 1);
  EXPECT_EQ(c.load.resolved_url(), "postgresql://bob@other/ehr");
  ::unsetenv("EHRSYNTH_TEST_DB_URL");
}

TEST(Config, DefaultTextRoundTrips) {
  const auto text = default_config_text();
  const auto c = parse_config(text, "default");
  const PipelineConfig d;
  EXPECT_EQ(c.generation.patients, d.generation.patients);
  EXPECT_EQ(c.generation.engine.plans.size(), d.generation.engine.plans.size());
  EXPECT_EQ(c.validation.rules, d.validation.rules);
  EXPECT_EQ(c.anomaly.features.numeric, d.anomaly.features.numeric);
  EXPECT_EQ(c.anomaly.training.learning_rate, d.anomaly.training.learning_rate);
  EXPECT_EQ(c.load.url_env, d.load.url_env);
}

TEST(Config, MissingFileNamesThePath) {
  try {
    load_config("/nonexistent/ehrsynth.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/ehrsynth.ini"), std::string::npos);
  }
}
