#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ehrsynth {

// Everything the gate needs for one record. Unset optionals mean the check
// did not run.
struct RecordScores {
  std::string record_id;
  std::int64_t patient_id = 0;

  std::optional<double> coherence_avg;
  std::optional<double> perplexity;
  std::optional<double> consistency_score;
  std::optional<double> max_contradiction;
  std::optional<double> recon_error;
  std::optional<double> anomaly_threshold;

  std::optional<bool> coherence_flag;
  std::optional<bool> plausibility_flag;
  std::optional<bool> consistency_flag;
  std::optional<bool> anomaly_flag;
  std::optional<bool> hard_range_flag;

  std::vector<std::string> hard_range_details;
  int soft_range_warnings = 0;
};

struct ScoreWeights {
  double coherence = 0.5;
  double contradiction = 0.5;
  double anomaly = 0.5;
};

// perplexity + w_c·100·(1 − coherence) + w_n·100·max P(contradiction)
//            + w_a·100·min(error / threshold, 1)
// MissingSubscore names the first absent input.
double combined_anomaly_score(const RecordScores& scores, const ScoreWeights& weights = {});

struct GateVerdict {
  bool passed = false;
  std::vector<std::string> reasons;  // coherence, plausibility, consistency, anomaly, hard_range
};

// IncompleteChecks if any of the five flags is unset.
GateVerdict gate_record(const RecordScores& scores);

struct HistogramBin {
  double start = 0.0;
  double end = 0.0;
  std::uint64_t count = 0;
};

// Equal-width bins over [min, max]; the last bin is right-inclusive. A
// zero-width range widens to [v, v + 1].
std::vector<HistogramBin> emit_histogram(const std::vector<double>& values, int bins = 20);
// Explicit ascending edges; values outside fall into the nearest end bin.
std::vector<HistogramBin> emit_histogram(const std::vector<double>& values, const std::vector<double>& edges);

std::string histogram_csv(const std::vector<HistogramBin>& bins);

struct ReportRow {
  RecordScores scores;
  double combined_score = 0.0;
  GateVerdict verdict;
};

std::string validation_report_csv(const std::vector<ReportRow>& rows);

}  // namespace ehrsynth
