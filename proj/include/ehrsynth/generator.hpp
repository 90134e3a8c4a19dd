#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ehrsynth/backend.hpp"
#include "ehrsynth/prompt.hpp"
#include "ehrsynth/schema.hpp"
#include "ehrsynth/value.hpp"

namespace ehrsynth {

struct CategoryWeight {
  std::string value;
  double weight = 1.0;
};

struct AgeBand {
  int min_age = 0;
  int max_age = 0;  // inclusive
  double weight = 1.0;
};

struct Place {
  std::string city;
  std::string state;
  double weight = 1.0;
};

// Distributions the patient-details prompts draw demographics from
// (inverse-CDF sampling with the patient seed).
struct DiversityParams {
  std::vector<AgeBand> age_bands{{0, 17, 0.2}, {18, 64, 0.55}, {65, 95, 0.25}};
  std::vector<CategoryWeight> genders{{"female", 1}, {"male", 1}, {"non_binary", 1}, {"other", 1}};
  std::vector<CategoryWeight> ethnicities{{"asian", 1}, {"black", 1},      {"hispanic", 1},
                                          {"white", 1}, {"indigenous", 1}, {"multiracial", 1}};
  std::vector<Place> places{{"columbia", "MO", 1},  {"st louis", "MO", 1}, {"kansas city", "MO", 1},
                            {"chicago", "IL", 1},   {"houston", "TX", 1},  {"seattle", "WA", 1},
                            {"atlanta", "GA", 1},   {"phoenix", "AZ", 1},  {"albuquerque", "NM", 1},
                            {"minneapolis", "MN", 1}};
};

struct Demographics {
  int age = 0;
  std::string gender;
  std::string ethnicity;
  std::string city;
  std::string state;
};

class Rng;
Demographics sample_demographics(const DiversityParams& params, Rng& rng);

// How many rows a table receives and what drives the multiplicity. Rows are
// generated once per parent row (or once per patient / once per cohort when
// `parent` is empty).
struct RowPlan {
  std::string parent;
  int min_count = 1;
  int max_count = 1;
  double probability = 1.0;    // chance a parent receives any rows
  bool ensure_first = false;   // first parent always receives rows
  std::string when_column;     // parent filter, e.g. visit_type
  std::string when_value;
  // column -> context key filled by the generator, never by the backend
  std::map<std::string, std::string> planned;
};

struct GenerationConfig {
  DiversityParams diversity;
  std::map<std::string, RowPlan, std::less<>> plans;
  int retry_limit = 3;
  int max_len = 2048;
  std::string start_date = "2023-01-01";  // first visit date anchor
  std::string reference_date = "2024-06-30";
  unsigned workers = 1;
};

GenerationConfig default_generation_config();

// Prompt templates keyed by table name.
using TemplateSet = std::map<std::string, PromptTemplate, std::less<>>;
TemplateSet default_templates(const SchemaDef& schema);

struct Provenance {
  std::string table;
  std::int64_t row_key = 0;
  std::string backend;
  std::uint64_t seed = 0;
  int attempts = 1;
};

struct PatientBundle {
  std::int64_t patient_id = 0;
  std::uint64_t seed = 0;
  TableRows rows;
  std::vector<Provenance> provenance;
};

// Staff, departments, wards, and beds: seeded once per cohort.
struct ReferenceData {
  TableRows rows;
  std::vector<Provenance> provenance;
};

struct Cohort {
  std::uint64_t base_seed = 0;
  std::string backend;
  ReferenceData reference;
  std::vector<PatientBundle> patients;
};

// Tables with no foreign-key path to patient_details.
std::vector<std::string> reference_tables(const SchemaDef& schema);

ReferenceData generate_reference(const SchemaDef& schema, const TemplateSet& templates, GenerationBackend& backend,
                                 std::uint64_t seed, const GenerationConfig& config);

// Rows follow topological order so every FK target exists first. Throws
// GenerationFailed (with the table) once the retry budget is exhausted.
PatientBundle generate_bundle(const SchemaDef& schema, const TemplateSet& templates, GenerationBackend& backend,
                              std::uint64_t patient_seed, std::int64_t patient_id, const ReferenceData& reference,
                              const GenerationConfig& config);

// n bundles, patient i seeded with base_seed + i. Reference data uses base_seed.
Cohort generate_cohort(const SchemaDef& schema, const TemplateSet& templates, GenerationBackend& backend, int n,
                       std::uint64_t base_seed, const GenerationConfig& config);

// Flattened view of a cohort: reference rows plus every bundle's rows.
TableRows flatten(const Cohort& cohort);

}  // namespace ehrsynth
