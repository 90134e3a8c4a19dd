#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ehrsynth/anomaly.hpp"
#include "ehrsynth/generator.hpp"
#include "ehrsynth/record_view.hpp"
#include "ehrsynth/schema.hpp"
#include "ehrsynth/value.hpp"

namespace fixtures {

// 1,000 rows driven by two latent factors (vitals and labs move together)
// plus 20 rows carrying one physiologically impossible value each:
// potassium 15, diastolic 0, systolic 300, heart rate 0, sodium 190,
// glucose 2000, hemoglobin 1, temperature 44.5, in rotation.
struct AnomalyFixture {
  std::vector<ehrsynth::Row> rows;
  ehrsynth::FeaturePlan plan;
  std::vector<std::size_t> outliers;  // indices into rows
};
AnomalyFixture anomaly_fixture(std::uint64_t seed = 2024);

// Grammar-backend cohort with the default schema and config.
ehrsynth::Cohort grammar_cohort(int patients, std::uint64_t seed, double error_rate = 0.03);

// Twenty sentence pairs with token-set sizes counted by hand:
// (first, second, |A ∩ B|, |A|, |B|).
struct HandPair {
  const char* first;
  const char* second;
  int common, a, b;
};
const std::vector<HandPair>& coherence_hand_pairs();

// Fifty short clinical sentences, distinct from the shipped corpus, for
// perplexity checks; some contain out-of-vocabulary words.
const std::vector<std::string>& perplexity_sentences();

// A record holding only allergies and medications, for rule checks.
struct AllergyRecord {
  ehrsynth::Row allergy;
  std::vector<ehrsynth::Row> meds;
  ehrsynth::RecordView view;
};
void make_allergy_record(AllergyRecord& rec, const std::string& allergen, const std::vector<std::string>& drugs);

// Live PostgreSQL for integration tests. The server URL (without database)
// comes from EHRSYNTH_TEST_PG_URL; nullopt when unset.
std::optional<std::string> pg_server_url();
// Drops and recreates `name` on the test server; returns its URL.
std::string fresh_database(const std::string& name);

std::string read_text(const std::string& path);

struct CommandResult {
  int status = -1;     // exit code, -1 if the process did not exit normally
  std::string output;  // stdout and stderr interleaved
};
// Runs through /bin/sh.
CommandResult run_command(const std::string& command);

}  // namespace fixtures
