#include "ehrsynth/plausibility.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ehrsynth/catalog.hpp"
#include "ehrsynth/errors.hpp"
#include "ehrsynth/text.hpp"

namespace ehrsynth {

NarrativeFields narrative_fields(const RecordView& r) {
  NarrativeFields f;
  f.admission_reason = r.admissions.empty() ? RecordView::text_of(r.visit, "reason")
                                            : RecordView::text_of(r.admissions, "admission_reason");
  std::vector<std::string> diagnoses;
  for (const Row* d : r.diagnoses)
    if (auto s = trim(RecordView::text_of(d, "description")); !s.empty()) diagnoses.push_back(s);
  f.diagnoses = join(diagnoses, ". ");
  f.conditions = RecordView::text_of(r.history, "chronic_conditions");
  std::vector<std::string> meds;
  for (const Row* m : r.medications) {
    const std::string drug = RecordView::text_of(m, "drug_name");
    if (drug.empty()) continue;
    const Value* dose = find_cell(*m, "dose_mg");
    const auto mg = dose ? as_number(*dose) : std::nullopt;
    meds.push_back(mg ? medication_phrase(drug, *mg, RecordView::text_of(m, "frequency")) : drug);
  }
  if (!meds.empty()) f.medications = "prescribed " + join(meds, " and ");
  return f;
}

Narrative build_narrative(std::string record_id, const NarrativeFields& f) {
  std::vector<std::string> parts;
  for (const std::string* s : {&f.admission_reason, &f.diagnoses, &f.conditions, &f.medications})
    if (auto t = trim(*s); !t.empty()) parts.push_back(std::move(t));
  return Narrative{std::move(record_id), join(parts, ". ")};
}

NgramLm::NgramLm(int order, double k) : order_(order), k_(k) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  if (!(k > 0.0)) throw ConfigError("smoothing constant k must be > 0");
  vocab_.emplace(kUnknown, 0);
}

NgramLm NgramLm::uniform(const std::vector<std::string>& vocabulary, int order) {
  NgramLm lm(order, 1.0);
  for (const auto& w : vocabulary) lm.vocab_.emplace(w, static_cast<std::int32_t>(lm.vocab_.size()));
  return lm;
}

std::int32_t NgramLm::id_or_unknown(const std::string& token) const {
  if (token == kStart) return start_id_;
  auto it = vocab_.find(token);
  return it == vocab_.end() ? 0 : it->second;
}

NgramLm::Key NgramLm::context_key(const std::vector<std::string>& context) const {
  Key key;
  const std::size_t want = static_cast<std::size_t>(order_ - 1);
  const std::size_t from = context.size() > want ? context.size() - want : 0;
  for (std::size_t i = 0; i < want - (context.size() - from); ++i) key.push_back(start_id_);
  for (std::size_t i = from; i < context.size(); ++i) key.push_back(id_or_unknown(context[i]));
  return key;
}

double NgramLm::probability(const std::vector<std::string>& context, const std::string& word) const {
  const Key key = context_key(context);
  const std::int32_t w = id_or_unknown(word);
  std::uint64_t c = 0, total = 0;
  if (auto it = counts_.find(key); it != counts_.end()) {
    if (auto jt = it->second.find(w); jt != it->second.end()) c = jt->second;
    total = totals_.at(key);
  }
  const double v = static_cast<double>(vocab_.size());
  return (static_cast<double>(c) + k_) / (static_cast<double>(total) + k_ * v);
}

std::vector<double> NgramLm::inverse_probabilities(const std::vector<std::string>& tokens) const {
  const std::size_t pad = static_cast<std::size_t>(order_ - 1);
  std::vector<std::int32_t> ids(pad, start_id_);
  for (const auto& t : tokens) ids.push_back(id_or_unknown(t));
  const double v = static_cast<double>(vocab_.size());
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t i = pad; i < ids.size(); ++i) {
    const Key key(ids.begin() + static_cast<std::ptrdiff_t>(i - pad), ids.begin() + static_cast<std::ptrdiff_t>(i));
    std::uint64_t c = 0, total = 0;
    if (auto it = counts_.find(key); it != counts_.end()) {
      if (auto jt = it->second.find(ids[i]); jt != it->second.end()) c = jt->second;
      total = totals_.at(key);
    }
    out.push_back((static_cast<double>(total) + k_ * v) / (static_cast<double>(c) + k_));
  }
  return out;
}

double NgramLm::log_probability(const std::vector<std::string>& tokens) const {
  double sum = 0.0;
  for (double r : inverse_probabilities(tokens)) sum -= std::log(r);
  return sum;
}

NgramLm train_ngram_lm(const std::vector<std::string>& corpus, int order, double k) {
  NgramLm lm(order, k);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& text : corpus) {
    auto tokens = tokenize(text);
    if (!tokens.empty()) sentences.push_back(std::move(tokens));
  }
  if (sentences.empty()) throw EmptyCorpus("cannot train a language model on an empty corpus");
  // Vocabulary ids in lexicographic order so the model does not depend on
  // corpus order.
  std::vector<std::string> words;
  for (const auto& s : sentences) words.insert(words.end(), s.begin(), s.end());
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (const auto& w : words)
    if (w != NgramLm::kUnknown) lm.vocab_.emplace(w, static_cast<std::int32_t>(lm.vocab_.size()));

  const std::size_t pad = static_cast<std::size_t>(order - 1);
  for (const auto& s : sentences) {
    std::vector<std::int32_t> ids(pad, lm.start_id_);
    for (const auto& t : s) ids.push_back(lm.vocab_.at(t));
    for (std::size_t i = pad; i < ids.size(); ++i) {
      NgramLm::Key key(ids.begin() + static_cast<std::ptrdiff_t>(i - pad), ids.begin() + static_cast<std::ptrdiff_t>(i));
      ++lm.counts_[key][ids[i]];
      ++lm.totals_[key];
    }
  }
  return lm;
}

double perplexity(const NgramLm& lm, std::string_view text) {
  const auto tokens = tokenize(text);
  if (tokens.empty()) return 1.0;
  // Geometric mean of 1/P taken relative to the first token's value, with a
  // running mean of the logs. Equal ratios give log 0, so a uniform model
  // returns |V| exactly.
  const auto inv = lm.inverse_probabilities(tokens);
  const double pivot = inv.front();
  double mean = 0.0;
  for (std::size_t i = 0; i < inv.size(); ++i) mean += (std::log(inv[i] / pivot) - mean) / static_cast<double>(i + 1);
  return pivot * std::exp(mean);
}

double percentile_threshold(std::vector<double> scores, double q) {
  if (scores.empty()) throw EmptyScores("percentile of an empty score list");
  if (!(q > 0.0 && q <= 100.0)) throw ConfigError("percentile q must lie in (0, 100]");
  std::sort(scores.begin(), scores.end());
  const double n = static_cast<double>(scores.size());
  // q*n first: exact for integral q, so ceil never sees a rounding residue.
  double rank = std::ceil(q * n / 100.0);
  rank = std::clamp(rank, 1.0, n);
  return scores[static_cast<std::size_t>(rank) - 1];
}

std::vector<double> BuiltinPerplexityScorer::perplexities(const std::vector<std::string>& texts) {
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(perplexity(lm_, t));
  return out;
}

PlausibilityReport plausibility_from_scores(const std::vector<Narrative>& narratives, std::vector<double> scores,
                                            double q) {
  if (narratives.empty()) throw EmptyScores("no narratives to score");
  if (scores.size() != narratives.size()) throw ScorerError("perplexity scorer returned a mismatched number of scores");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (tokenize(narratives[i].text).empty()) scores[i] = 1.0;
    if (!(scores[i] >= 1.0) || !std::isfinite(scores[i]))
      throw ScorerError("perplexity must be a finite value >= 1");
  }
  PlausibilityReport report;
  report.threshold = percentile_threshold(scores, q);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool empty = tokenize(narratives[i].text).empty();
    report.results.push_back(
        PlausibilityResult{narratives[i].record_id, scores[i], !empty && scores[i] > report.threshold});
  }
  return report;
}

PlausibilityReport assess_plausibility(const std::vector<Narrative>& narratives, PerplexityScorer& scorer, double q) {
  if (narratives.empty()) throw EmptyScores("no narratives to score");
  std::vector<std::string> texts;
  for (const auto& n : narratives) texts.push_back(n.text);
  return plausibility_from_scores(narratives, scorer.perplexities(texts), q);
}

std::string default_corpus_path() { return std::string(EHRSYNTH_DATA_DIR) + "/reference_corpus.txt"; }

std::vector<std::string> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) lines.push_back(line);
  return lines;
}

}  // namespace ehrsynth
