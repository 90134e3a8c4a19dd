#include "ehrsynth/coherence.hpp"

#include <cmath>
#include <set>

#include "ehrsynth/catalog.hpp"
#include "ehrsynth/errors.hpp"
#include "ehrsynth/text.hpp"

namespace ehrsynth {

CoherenceFields coherence_fields(const RecordView& r) {
  CoherenceFields f;
  if (!r.vitals.empty()) {
    const Row& v = *r.vitals.front();
    auto num = [&](const char* c) {
      const Value* x = find_cell(v, c);
      return x ? as_number(*x) : std::nullopt;
    };
    const auto sys = num("systolic_bp"), dia = num("diastolic_bp"), hr = num("heart_rate"), t = num("temperature_c");
    if (sys && dia && hr && t) f.vitals_summary = vitals_sentence(*sys, *dia, *hr, *t);
  }
  f.chronic_conditions = RecordView::text_of(r.history, "chronic_conditions");
  f.past_surgeries = RecordView::text_of(r.history, "past_surgeries");
  f.family_history = RecordView::text_of(r.history, "family_history");
  f.diagnosis = RecordView::text_of(r.diagnoses, "description");
  f.treatment = RecordView::text_of(r.plans, "plan_description");
  f.admission_note = RecordView::text_of(r.admissions, "admission_note");
  return f;
}

std::vector<SentencePair> extract_sentence_pairs(const CoherenceFields& f) {
  const std::pair<const char*, const std::string*> schedule[][2] = {
      {{"vitals_summary", &f.vitals_summary}, {"chronic_conditions", &f.chronic_conditions}},
      {{"chronic_conditions", &f.chronic_conditions}, {"past_surgeries", &f.past_surgeries}},
      {{"family_history", &f.family_history}, {"diagnosis", &f.diagnosis}},
      {{"diagnosis", &f.diagnosis}, {"treatment", &f.treatment}},
      {{"treatment", &f.treatment}, {"admission_note", &f.admission_note}},
  };
  std::vector<SentencePair> out;
  for (const auto& step : schedule) {
    std::string a = trim(*step[0].second), b = trim(*step[1].second);
    if (a.empty() || b.empty()) continue;
    out.push_back(SentencePair{std::move(a), std::move(b), step[0].first, step[1].first});
  }
  return out;
}

double lexical_coherence_score(std::string_view first, std::string_view second) {
  const auto ta = tokenize(first), tb = tokenize(second);
  const std::set<std::string> a(ta.begin(), ta.end()), b(tb.begin(), tb.end());
  if (a.empty() || b.empty()) return 0.5;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

std::vector<double> LexicalCoherenceScorer::score_pairs(const std::vector<SentencePair>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(lexical_coherence_score(p));
  return out;
}

CoherenceResult coherence_from_scores(std::string record_id, std::vector<double> probabilities, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("coherence threshold must lie in [0, 1]");
  CoherenceResult r;
  r.record_id = std::move(record_id);
  r.probabilities = std::move(probabilities);
  if (!r.probabilities.empty()) {
    double sum = 0.0;
    for (double p : r.probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) throw ScorerError("coherence probability outside [0, 1]");
      sum += p;
    }
    r.average_probability = sum / static_cast<double>(r.probabilities.size());
    r.flagged = r.average_probability < threshold;
  }
  return r;
}

CoherenceResult assess_record_coherence(const std::string& record_id, const std::vector<SentencePair>& pairs,
                                        CoherenceScorer& scorer, double threshold) {
  if (pairs.empty()) return coherence_from_scores(record_id, {}, threshold);
  auto scores = scorer.score_pairs(pairs);
  if (scores.size() != pairs.size()) throw ScorerError("coherence scorer returned a mismatched number of scores");
  return coherence_from_scores(record_id, std::move(scores), threshold);
}

std::vector<CoherenceResult> assess_coherence(const std::vector<RecordView>& records, CoherenceScorer& scorer,
                                              double threshold) {
  std::vector<SentencePair> all;
  std::vector<std::size_t> counts;
  for (const auto& r : records) {
    auto pairs = extract_sentence_pairs(coherence_fields(r));
    counts.push_back(pairs.size());
    all.insert(all.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
  }
  std::vector<double> scores;
  if (!all.empty()) scores = scorer.score_pairs(all);
  if (scores.size() != all.size()) throw ScorerError("coherence scorer returned a mismatched number of scores");
  std::vector<CoherenceResult> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<double> mine(scores.begin() + static_cast<std::ptrdiff_t>(pos),
                             scores.begin() + static_cast<std::ptrdiff_t>(pos + counts[i]));
    pos += counts[i];
    out.push_back(coherence_from_scores(records[i].record_id, std::move(mine), threshold));
  }
  return out;
}

}  // namespace ehrsynth
