#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ehrsynth/catalog.hpp"
#include "ehrsynth/record_view.hpp"

namespace ehrsynth {

enum class NliLabel { entailment, neutral, contradiction };
std::string to_string(NliLabel label);

struct NliLabelDistribution {
  double entailment = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;

  // Ties resolve entailment > neutral > contradiction.
  NliLabel argmax() const;
};

using Facts = std::map<std::string, std::string, std::less<>>;

// Premise/hypothesis text plus the structured facts the built-in classifier
// decides on; remote classifiers only see the text.
struct PremiseHypothesis {
  std::string premise;
  std::string hypothesis;
  std::string rule_id;
  Facts facts;
};

struct ConsistencyRule {
  std::string id;
  std::string description;
  std::function<NliLabel(const Facts&)> decide;
};

// R1 allergy vs medication class, R2 vitals vs severity class, R3 diagnosis
// vs treatment topic, R4 discharge vs admission diagnosis.
class RuleSet {
 public:
  explicit RuleSet(DrugClassMap drugs = default_drug_classes(), double epsilon = 0.005);

  const ConsistencyRule& rule(const std::string& id) const;  // UnknownRule
  bool has(const std::string& id) const { return rules_.count(id) > 0; }
  std::vector<std::string> ids() const;
  void enable_only(const std::vector<std::string>& ids);  // UnknownRule
  bool enabled(const std::string& id) const;

  const DrugClassMap& drugs() const { return *drugs_; }
  double epsilon() const { return epsilon_; }

 private:
  std::shared_ptr<DrugClassMap> drugs_;
  double epsilon_;
  std::map<std::string, ConsistencyRule> rules_;
  std::vector<std::string> enabled_;
};

std::vector<PremiseHypothesis> build_premise_hypothesis_pairs(const RecordView& record, const RuleSet& rules);

// Decided label gets 1 - 2ε, the others ε.
NliLabelDistribution rule_based_nli(const PremiseHypothesis& pair, const RuleSet& rules);

class NliClassifier {
 public:
  virtual ~NliClassifier() = default;
  virtual std::vector<NliLabelDistribution> classify(const std::vector<PremiseHypothesis>& pairs) = 0;
};

class RuleBasedNli final : public NliClassifier {
 public:
  explicit RuleBasedNli(const RuleSet& rules) : rules_(rules) {}
  std::vector<NliLabelDistribution> classify(const std::vector<PremiseHypothesis>& pairs) override;

 private:
  const RuleSet& rules_;
};

struct ConsistencyResult {
  std::string record_id;
  std::vector<PremiseHypothesis> pairs;
  std::vector<NliLabelDistribution> labels;
  double consistency_score = 1.0;    // mean entailment probability
  double max_contradiction = 0.0;    // largest P(contradiction) over pairs
  bool flagged = false;              // some pair's argmax is contradiction
};

ConsistencyResult consistency_from_labels(std::string record_id, std::vector<PremiseHypothesis> pairs,
                                          std::vector<NliLabelDistribution> labels);

ConsistencyResult assess_consistency(const std::string& record_id, std::vector<PremiseHypothesis> pairs,
                                     NliClassifier& classifier);

// One classifier call over every record's pairs.
std::vector<ConsistencyResult> assess_consistency(const std::vector<RecordView>& records, const RuleSet& rules,
                                                  NliClassifier& classifier);

}  // namespace ehrsynth
