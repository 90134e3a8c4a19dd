#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ehrsynth/anomaly.hpp"
#include "ehrsynth/coherence.hpp"
#include "ehrsynth/config.hpp"
#include "ehrsynth/consistency.hpp"
#include "ehrsynth/diversity.hpp"
#include "ehrsynth/errors.hpp"
#include "ehrsynth/generator.hpp"
#include "ehrsynth/plausibility.hpp"
#include "ehrsynth/record_view.hpp"
#include "ehrsynth/remote.hpp"
#include "ehrsynth/scoring.hpp"

namespace ehrsynth {

// Exit statuses shared by the CLI and run_pipeline.
inline constexpr int kExitOk = 0;
inline constexpr int kExitGateFailures = 1;  // only with strict
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStage = 3;

// A failure inside one stage, tagged with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("StageError", stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

std::unique_ptr<GenerationBackend> make_backend(const GenerationSettings& settings);

struct Scorers {
  std::unique_ptr<RuleSet> rules;
  std::unique_ptr<CoherenceScorer> coherence;
  std::unique_ptr<PerplexityScorer> perplexity;
  std::unique_ptr<NliClassifier> nli;
  std::shared_ptr<RemoteScorerClient> client;  // null for builtin scorers
  double coherence_threshold = kLexicalCoherenceThreshold;
};

Scorers make_scorers(const ValidationSettings& settings);

Cohort generate_from_config(const PipelineConfig& config, const SchemaDef& schema);

struct HistogramSet {
  std::vector<std::pair<std::string, std::vector<HistogramBin>>> files;  // name -> bins
};

struct ValidationOutcome {
  std::vector<ReportRow> rows;  // one per record, visit order
  PlausibilityReport plausibility;
  AnomalyReport anomaly;        // over records with complete features
  std::size_t anomaly_incomplete = 0;
  DiversityReport diversity;
  HistogramSet histograms;
  std::vector<std::string> warnings;

  std::size_t failed() const;
};

// Runs every check over the dataset's records. Each stage's failure is
// rethrown as StageError.
ValidationOutcome validate_dataset(const TableRows& data, const SchemaDef& schema, const PipelineConfig& config,
                                   Scorers& scorers);

// nsp_avg, perplexity, recon_error, consistency, combined.
HistogramSet build_histograms(const std::vector<ReportRow>& rows, int bins);

// Rebuilds report rows from a validation report CSV.
std::vector<ReportRow> parse_validation_report_csv(const std::string& csv);

std::string validation_summary_text(const ValidationOutcome& outcome, const PipelineConfig& config);
std::string validation_summary_text(const std::vector<ReportRow>& rows);

struct GateResult {
  TableRows accepted;
  TableRows excluded;
  std::set<std::string> failed_records;
};

// Removes each failed visit together with every row that reaches it through
// foreign keys. Patient-level rows stay.
GateResult gate_dataset(const TableRows& data, const SchemaDef& schema, const std::vector<ReportRow>& rows);

// Failed records with their reasons; with include_rows the excluded rows too.
std::string quarantine_json(const GateResult& gate, const std::vector<ReportRow>& rows, bool include_rows);

struct PipelineOptions {
  PipelineConfig config;
  std::filesystem::path out_dir = "out";
  bool strict = false;
  bool quarantine_rows = false;
  bool load = false;  // also load into load.resolved_url()
};

// Generate, validate, report, gate, emit SQL, optionally load. Returns one
// of the exit statuses above; messages go to `log`.
int run_pipeline(const PipelineOptions& options, std::ostream& log);

// Writes the report, summary, histograms and diversity files into dir.
void write_validation_artifacts(const ValidationOutcome& outcome, const PipelineConfig& config,
                                const std::filesystem::path& dir);

}  // namespace ehrsynth
