#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehrsynth/anomaly.hpp"
#include "ehrsynth/generator.hpp"
#include "ehrsynth/remote.hpp"
#include "ehrsynth/schema.hpp"
#include "ehrsynth/scoring.hpp"

namespace ehrsynth {

struct GenerationSettings {
  int patients = 42;
  std::uint64_t seed = 1;
  std::string backend = "grammar";  // grammar | remote
  double error_rate = 0.03;         // grammar backend fault injection
  std::string schema_path;          // JSON schema file; empty = built-in
  GenerationConfig engine = default_generation_config();
  RemoteLlmConfig llm;
};

struct ValidationSettings {
  std::string scorers = "builtin";  // builtin | remote
  std::optional<double> coherence_threshold;  // default depends on scorers
  double percentile = 95.0;
  int lm_order = 3;
  double lm_k = 1.0;
  std::string corpus_path;  // empty = shipped reference corpus
  double nli_epsilon = 0.005;
  std::vector<std::string> rules{"R1", "R2", "R3", "R4"};
  RemoteScorerConfig remote;

  double effective_coherence_threshold() const;
};

struct AnomalySettings {
  TrainOptions training;
  FeaturePlan features = default_feature_plan();
  std::vector<int> widths;  // empty = default schedule for the encoded width
};

struct DiversitySettings {
  double coverage_floor = 0.8;
  double adult_age = 18;
  double geriatric_age = 65;
};

struct ScoringSettings {
  ScoreWeights weights;
  int histogram_bins = 20;
};

struct LoadSettings {
  std::string url;  // no credentials here; those come from url_env
  std::string url_env = "EHRSYNTH_DATABASE_URL";
  std::size_t batch_rows = 500;
  bool create_schema = true;

  // Environment wins over the file; empty when neither is set.
  std::string resolved_url() const;
};

struct PipelineConfig {
  GenerationSettings generation;
  ValidationSettings validation;
  AnomalySettings anomaly;
  DiversitySettings diversity;
  ScoringSettings scoring;
  LoadSettings load;
  std::map<std::string, PhysiologicRange> range_overrides;  // "table.column"
};

// INI file with sections [generation] [validation] [anomaly] [diversity]
// [scoring] [load] [ranges]. Unknown sections or keys and unparsable values
// raise ConfigError naming the file and key.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& ini_text, const std::string& origin = "<config>");

// Built-in or file schema with [ranges] overrides applied.
SchemaDef resolve_schema(const PipelineConfig& config);

// Documented defaults as an INI file.
std::string default_config_text();

}  // namespace ehrsynth
