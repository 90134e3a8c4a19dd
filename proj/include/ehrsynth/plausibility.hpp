#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ehrsynth/record_view.hpp"

namespace ehrsynth {

struct NarrativeFields {
  std::string admission_reason;
  std::string diagnoses;
  std::string conditions;
  std::string medications;
};

// Admission reason (or the visit reason for non-admitted visits), diagnosis
// descriptions, chronic conditions, and "prescribed ..." for the visit's drugs.
NarrativeFields narrative_fields(const RecordView& record);

struct Narrative {
  std::string record_id;
  std::string text;
};

// Nonempty fields in fixed order, joined with ". ".
Narrative build_narrative(std::string record_id, const NarrativeFields& fields);

// Add-k smoothed n-gram model. Sequences are left-padded with order-1 start
// markers; unseen tokens map to the reserved unknown token. The predictive
// vocabulary is the corpus tokens plus the unknown token.
class NgramLm {
 public:
  static constexpr const char* kUnknown = "<unk>";
  static constexpr const char* kStart = "<s>";

  NgramLm(int order, double k);

  // Model with the given vocabulary (plus <unk>) and no counts: uniform.
  static NgramLm uniform(const std::vector<std::string>& vocabulary, int order = 1);

  int order() const { return order_; }
  double k() const { return k_; }
  std::size_t vocabulary_size() const { return vocab_.size(); }
  bool in_vocabulary(const std::string& token) const { return vocab_.count(token) > 0; }

  // P(word | context) where context holds the previous order-1 tokens
  // (start markers included); out-of-vocabulary words count as <unk>.
  double probability(const std::vector<std::string>& context, const std::string& word) const;

  // Sum of ln P over the text's tokens with start padding.
  double log_probability(const std::vector<std::string>& tokens) const;
  // 1 / P(w_i | context) per token.
  std::vector<double> inverse_probabilities(const std::vector<std::string>& tokens) const;

 private:
  friend NgramLm train_ngram_lm(const std::vector<std::string>& corpus, int order, double k);

  using Key = std::vector<std::int32_t>;
  std::int32_t id_or_unknown(const std::string& token) const;
  Key context_key(const std::vector<std::string>& context) const;

  int order_;
  double k_;
  std::map<std::string, std::int32_t, std::less<>> vocab_;  // predictive vocabulary
  std::int32_t start_id_ = -1;  // never a vocabulary id, never predicted
  std::map<Key, std::map<std::int32_t, std::uint64_t>> counts_;
  std::map<Key, std::uint64_t> totals_;
};

// Throws EmptyCorpus for an empty corpus (or one with no tokens) and
// ConfigError for order < 1 or k <= 0.
NgramLm train_ngram_lm(const std::vector<std::string>& corpus, int order = 3, double k = 1.0);

// exp(-(1/N) Σ ln P(w_i | context)); 1.0 for text without tokens.
double perplexity(const NgramLm& lm, std::string_view text);

// Element at rank ceil(q/100 * n) of the ascending sample.
double percentile_threshold(std::vector<double> scores, double q);

class PerplexityScorer {
 public:
  virtual ~PerplexityScorer() = default;
  virtual std::vector<double> perplexities(const std::vector<std::string>& texts) = 0;
};

class BuiltinPerplexityScorer final : public PerplexityScorer {
 public:
  explicit BuiltinPerplexityScorer(NgramLm lm) : lm_(std::move(lm)) {}
  std::vector<double> perplexities(const std::vector<std::string>& texts) override;
  const NgramLm& model() const { return lm_; }

 private:
  NgramLm lm_;
};

struct PlausibilityResult {
  std::string record_id;
  double perplexity = 1.0;
  bool flagged = false;
};

struct PlausibilityReport {
  std::vector<PlausibilityResult> results;
  double threshold = 0.0;
};

// Flags perplexity strictly above the batch's q-th percentile. Empty
// narratives score 1.0 and are never flagged.
PlausibilityReport assess_plausibility(const std::vector<Narrative>& narratives, PerplexityScorer& scorer,
                                       double q = 95.0);
PlausibilityReport plausibility_from_scores(const std::vector<Narrative>& narratives, std::vector<double> scores,
                                            double q);

// Reference corpus shipped with the sources (one sentence per line).
std::string default_corpus_path();
std::vector<std::string> load_corpus(const std::string& path);

}  // namespace ehrsynth
