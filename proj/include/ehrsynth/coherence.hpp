#pragma once

#include <string>
#include <vector>

#include "ehrsynth/record_view.hpp"

namespace ehrsynth {

struct SentencePair {
  std::string first;
  std::string second;
  std::string first_field;
  std::string second_field;
};

// The seven textual fields the pairing schedule draws from.
struct CoherenceFields {
  std::string vitals_summary;
  std::string chronic_conditions;
  std::string past_surgeries;
  std::string family_history;
  std::string diagnosis;
  std::string treatment;
  std::string admission_note;
};

CoherenceFields coherence_fields(const RecordView& record);

// Fixed schedule: vitals -> chronic conditions -> past surgeries,
// family history -> diagnosis -> treatment -> admission note. A pair is
// emitted only when both of its fields are nonempty after trimming.
std::vector<SentencePair> extract_sentence_pairs(const CoherenceFields& fields);

// |A ∩ B| / sqrt(|A| |B|) over lowercase token sets; 0.5 if either is empty.
double lexical_coherence_score(std::string_view first, std::string_view second);
inline double lexical_coherence_score(const SentencePair& p) { return lexical_coherence_score(p.first, p.second); }

// P(IsNext) per pair, one output per input, each in [0, 1].
class CoherenceScorer {
 public:
  virtual ~CoherenceScorer() = default;
  virtual std::vector<double> score_pairs(const std::vector<SentencePair>& pairs) = 0;
};

class LexicalCoherenceScorer final : public CoherenceScorer {
 public:
  std::vector<double> score_pairs(const std::vector<SentencePair>& pairs) override;
};

// Lexical overlap lives on a different scale than P(IsNext). On grammar output
// clean visits stay above 0.2875 while off-topic treatment text drops most
// records below 0.275.
inline constexpr double kLexicalCoherenceThreshold = 0.28;
inline constexpr double kRemoteCoherenceThreshold = 0.99;

struct CoherenceResult {
  std::string record_id;
  std::vector<double> probabilities;
  double average_probability = 1.0;
  bool flagged = false;
};

// Mean over the given pair scores; no pairs -> 1.0, never flagged.
CoherenceResult coherence_from_scores(std::string record_id, std::vector<double> probabilities, double threshold);

CoherenceResult assess_record_coherence(const std::string& record_id, const std::vector<SentencePair>& pairs,
                                        CoherenceScorer& scorer, double threshold);

// Scores every record's pairs in a single scorer call, so remote scorers can
// batch across records.
std::vector<CoherenceResult> assess_coherence(const std::vector<RecordView>& records, CoherenceScorer& scorer,
                                              double threshold);

}  // namespace ehrsynth
