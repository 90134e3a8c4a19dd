#include "ehrsynth/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/text.hpp"
#include "ehrsynth/value.hpp"

namespace ehrsynth {

double combined_anomaly_score(const RecordScores& s, const ScoreWeights& w) {
  if (!s.perplexity) throw MissingSubscore("plausibility");
  if (!s.coherence_avg) throw MissingSubscore("coherence");
  if (!s.max_contradiction) throw MissingSubscore("consistency");
  if (!s.recon_error || !s.anomaly_threshold) throw MissingSubscore("anomaly");
  double ratio;
  if (*s.anomaly_threshold > 0.0) ratio = std::min(*s.recon_error / *s.anomaly_threshold, 1.0);
  else ratio = *s.recon_error > 0.0 ? 1.0 : 0.0;
  return *s.perplexity + w.coherence * 100.0 * (1.0 - *s.coherence_avg) +
         w.contradiction * 100.0 * *s.max_contradiction + w.anomaly * 100.0 * ratio;
}

GateVerdict gate_record(const RecordScores& s) {
  const std::pair<const char*, const std::optional<bool>*> checks[] = {
      {"coherence", &s.coherence_flag},   {"plausibility", &s.plausibility_flag}, {"consistency", &s.consistency_flag},
      {"anomaly", &s.anomaly_flag},       {"hard_range", &s.hard_range_flag},
  };
  std::vector<std::string> missing;
  for (const auto& [name, flag] : checks)
    if (!flag->has_value()) missing.push_back(name);
  if (!missing.empty()) throw IncompleteChecks("record " + s.record_id + " is missing checks: " + join(missing, ", "));
  GateVerdict v;
  for (const auto& [name, flag] : checks)
    if (**flag) v.reasons.push_back(name);
  v.passed = v.reasons.empty();
  return v;
}

std::vector<HistogramBin> emit_histogram(const std::vector<double>& values, int bins) {
  if (values.empty()) throw EmptyScores("histogram of an empty value list");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  double hi = *hi_it;
  if (!(hi > lo)) hi = lo + 1.0;
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    out[static_cast<std::size_t>(i)].start = lo + width * i;
    out[static_cast<std::size_t>(i)].end = i + 1 == bins ? hi : lo + width * (i + 1);
  }
  for (double x : values) {
    auto idx = static_cast<long>(std::floor((x - lo) / width));
    idx = std::clamp(idx, 0L, static_cast<long>(bins) - 1);
    // Keep assignment consistent with the printed edges.
    while (idx > 0 && x < out[static_cast<std::size_t>(idx)].start) --idx;
    while (idx + 1 < bins && x >= out[static_cast<std::size_t>(idx)].end) ++idx;
    ++out[static_cast<std::size_t>(idx)].count;
  }
  return out;
}

std::vector<HistogramBin> emit_histogram(const std::vector<double>& values, const std::vector<double>& edges) {
  if (values.empty()) throw EmptyScores("histogram of an empty value list");
  if (edges.size() < 2) throw ConfigError("explicit histogram edges need at least two values");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw ConfigError("histogram edges must be strictly ascending");
  std::vector<HistogramBin> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) out.push_back(HistogramBin{edges[i], edges[i + 1], 0});
  for (double x : values) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    long idx = static_cast<long>(it - edges.begin()) - 1;
    idx = std::clamp(idx, 0L, static_cast<long>(out.size()) - 1);
    ++out[static_cast<std::size_t>(idx)].count;
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream out;
  out << "bin_start,bin_end,count\n";
  for (const auto& b : bins) out << format_double(b.start) << "," << format_double(b.end) << "," << b.count << "\n";
  return out.str();
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }
std::string opt(const std::optional<bool>& v) { return v ? (*v ? "true" : "false") : std::string{}; }

}  // namespace

std::string validation_report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "record_id,patient_id,coherence_avg,coherence_flag,perplexity,plausibility_flag,consistency_score,"
         "max_contradiction,consistency_flag,recon_error,anomaly_flag,hard_range_flag,soft_range_warnings,"
         "combined_score,gate,reasons\n";
  for (const auto& r : rows) {
    const auto& s = r.scores;
    out << csv_escape(s.record_id) << "," << s.patient_id << "," << opt(s.coherence_avg) << ","
        << opt(s.coherence_flag) << "," << opt(s.perplexity) << "," << opt(s.plausibility_flag) << ","
        << opt(s.consistency_score) << "," << opt(s.max_contradiction) << "," << opt(s.consistency_flag) << ","
        << opt(s.recon_error) << "," << opt(s.anomaly_flag) << "," << opt(s.hard_range_flag) << ","
        << s.soft_range_warnings << "," << format_double(r.combined_score) << ","
        << (r.verdict.passed ? "pass" : "fail") << "," << csv_escape(join(r.verdict.reasons, ";")) << "\n";
  }
  return out.str();
}

}  // namespace ehrsynth
