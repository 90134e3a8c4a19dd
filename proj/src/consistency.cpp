#include "ehrsynth/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/text.hpp"

namespace ehrsynth {

std::string to_string(NliLabel label) {
  switch (label) {
    case NliLabel::entailment: return "entailment";
    case NliLabel::neutral: return "neutral";
    case NliLabel::contradiction: return "contradiction";
  }
  return "neutral";
}

NliLabel NliLabelDistribution::argmax() const {
  if (entailment >= neutral && entailment >= contradiction) return NliLabel::entailment;
  if (neutral >= contradiction) return NliLabel::neutral;
  return NliLabel::contradiction;
}

namespace {

std::string normalized(std::string_view s) { return to_lower(trim(s)); }

std::optional<double> number_fact(const Facts& f, const char* key) {
  auto it = f.find(key);
  if (it == f.end()) return std::nullopt;
  try {
    return std::stod(it->second);
  } catch (...) {
    return std::nullopt;
  }
}

std::string fact(const Facts& f, const char* key) {
  auto it = f.find(key);
  return it == f.end() ? std::string{} : it->second;
}

}  // namespace

RuleSet::RuleSet(DrugClassMap drugs, double epsilon)
    : drugs_(std::make_shared<DrugClassMap>(std::move(drugs))), epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0 / 3.0)) throw ConfigError("nli epsilon must lie in [0, 1/3)");
  auto drugs_ptr = drugs_;
  rules_["R1"] = ConsistencyRule{
      "R1", "allergy vs medication class", [drugs_ptr](const Facts& f) {
        const auto allergen = drugs_ptr->allergen_class(normalized(fact(f, "allergen")));
        const auto drug = drugs_ptr->drug_class(normalized(fact(f, "drug")));
        if (!allergen || !drug) return NliLabel::neutral;
        return *allergen == *drug ? NliLabel::contradiction : NliLabel::entailment;
      }};
  rules_["R2"] = ConsistencyRule{"R2", "vitals vs severity classification", [](const Facts& f) {
                                   const auto sys = number_fact(f, "systolic_bp");
                                   const auto dia = number_fact(f, "diastolic_bp");
                                   const auto severity = normalized(fact(f, "severity_class"));
                                   if (!sys || !dia || severity_rank(severity) < 0) return NliLabel::neutral;
                                   return classify_blood_pressure(*sys, *dia) == severity ? NliLabel::entailment
                                                                                           : NliLabel::contradiction;
                                 }};
  rules_["R3"] = ConsistencyRule{"R3", "diagnosis vs treatment-plan topic", [](const Facts& f) {
                                   const auto* cond = find_condition(normalized(fact(f, "condition")));
                                   const auto topic = normalized(fact(f, "topic"));
                                   const auto topics = treatment_topics();
                                   if (!cond || std::find(topics.begin(), topics.end(), topic) == topics.end())
                                     return NliLabel::neutral;
                                   return cond->topic == topic ? NliLabel::entailment : NliLabel::contradiction;
                                 }};
  rules_["R4"] = ConsistencyRule{"R4", "discharge vs admission diagnosis", [](const Facts& f) {
                                   const auto admitted = normalized(fact(f, "admission_diagnosis"));
                                   const auto discharged = normalized(fact(f, "discharge_diagnosis"));
                                   if (admitted == discharged && !admitted.empty()) return NliLabel::entailment;
                                   if (!find_condition(admitted) || !find_condition(discharged)) return NliLabel::neutral;
                                   return NliLabel::contradiction;
                                 }};
  enabled_ = ids();
}

const ConsistencyRule& RuleSet::rule(const std::string& id) const {
  auto it = rules_.find(id);
  if (it == rules_.end()) throw UnknownRule("unknown consistency rule '" + id + "'");
  return it->second;
}

std::vector<std::string> RuleSet::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : rules_) out.push_back(id);
  return out;
}

void RuleSet::enable_only(const std::vector<std::string>& ids) {
  if (ids.empty()) throw ConfigError("at least one consistency rule must be enabled");
  for (const auto& id : ids) rule(id);
  enabled_ = ids;
}

bool RuleSet::enabled(const std::string& id) const {
  return std::find(enabled_.begin(), enabled_.end(), id) != enabled_.end();
}

std::vector<PremiseHypothesis> build_premise_hypothesis_pairs(const RecordView& r, const RuleSet& rules) {
  std::vector<PremiseHypothesis> out;
  if (rules.enabled("R1")) {
    for (const Row* a : r.allergies) {
      const auto allergen = RecordView::text_of(a, "allergen");
      if (allergen.empty()) continue;
      for (const Row* m : r.medications) {
        const auto drug = RecordView::text_of(m, "drug_name");
        if (drug.empty()) continue;
        out.push_back(PremiseHypothesis{"the patient is allergic to " + allergen,
                                        "the patient is prescribed " + drug + " safely", "R1",
                                        Facts{{"allergen", allergen}, {"drug", drug}}});
      }
    }
  }
  if (rules.enabled("R2")) {
    for (const Row* v : r.vitals) {
      const auto sys = RecordView::text_of(v, "systolic_bp"), dia = RecordView::text_of(v, "diastolic_bp");
      const auto severity = RecordView::text_of(v, "severity_class");
      if (sys.empty() || dia.empty() || severity.empty()) continue;
      std::string readable = severity;
      std::replace(readable.begin(), readable.end(), '_', ' ');
      out.push_back(PremiseHypothesis{"the patient has blood pressure " + sys + "/" + dia + " mmhg",
                                      "the blood pressure is classified as " + readable, "R2",
                                      Facts{{"systolic_bp", sys}, {"diastolic_bp", dia}, {"severity_class", severity}}});
    }
  }
  if (rules.enabled("R3")) {
    for (const Row* p : r.plans) {
      const auto topic = RecordView::text_of(p, "topic");
      const Value* did = find_cell(*p, "diagnosis_id");
      std::string condition;
      for (const Row* d : r.diagnoses) {
        const Value* x = find_cell(*d, "diagnosis_id");
        if (did && x && as_integer(*did) == as_integer(*x)) condition = RecordView::text_of(d, "condition");
      }
      if (topic.empty() || condition.empty()) continue;
      out.push_back(PremiseHypothesis{"the patient is diagnosed with " + condition,
                                      "the treatment plan addresses " + topic, "R3",
                                      Facts{{"condition", condition}, {"topic", topic}}});
    }
  }
  if (rules.enabled("R4")) {
    const auto admitted = RecordView::text_of(r.diagnoses, "condition");
    for (const Row* d : r.discharges) {
      const auto discharged = RecordView::text_of(d, "discharge_diagnosis");
      if (admitted.empty() || discharged.empty()) continue;
      out.push_back(PremiseHypothesis{"the patient was admitted with " + admitted,
                                      "the patient was discharged with a diagnosis of " + discharged, "R4",
                                      Facts{{"admission_diagnosis", admitted}, {"discharge_diagnosis", discharged}}});
    }
  }
  return out;
}

NliLabelDistribution rule_based_nli(const PremiseHypothesis& pair, const RuleSet& rules) {
  const NliLabel label = rules.rule(pair.rule_id).decide(pair.facts);
  const double eps = rules.epsilon(), top = 1.0 - 2.0 * eps;
  NliLabelDistribution d{eps, eps, eps};
  switch (label) {
    case NliLabel::entailment: d.entailment = top; break;
    case NliLabel::neutral: d.neutral = top; break;
    case NliLabel::contradiction: d.contradiction = top; break;
  }
  return d;
}

std::vector<NliLabelDistribution> RuleBasedNli::classify(const std::vector<PremiseHypothesis>& pairs) {
  std::vector<NliLabelDistribution> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(rule_based_nli(p, rules_));
  return out;
}

ConsistencyResult consistency_from_labels(std::string record_id, std::vector<PremiseHypothesis> pairs,
                                          std::vector<NliLabelDistribution> labels) {
  if (labels.size() != pairs.size()) throw ScorerError("nli classifier returned a mismatched number of labels");
  ConsistencyResult r;
  r.record_id = std::move(record_id);
  double sum = 0.0;
  for (const auto& l : labels) {
    for (double p : {l.entailment, l.neutral, l.contradiction})
      if (!(p >= 0.0 && p <= 1.0)) throw ScorerError("nli probability outside [0, 1]");
    if (std::abs(l.entailment + l.neutral + l.contradiction - 1.0) > 1e-6)
      throw ScorerError("nli label distribution does not sum to 1");
    sum += l.entailment;
    r.max_contradiction = std::max(r.max_contradiction, l.contradiction);
    if (l.argmax() == NliLabel::contradiction) r.flagged = true;
  }
  if (!labels.empty()) r.consistency_score = sum / static_cast<double>(labels.size());
  r.pairs = std::move(pairs);
  r.labels = std::move(labels);
  return r;
}

ConsistencyResult assess_consistency(const std::string& record_id, std::vector<PremiseHypothesis> pairs,
                                     NliClassifier& classifier) {
  std::vector<NliLabelDistribution> labels;
  if (!pairs.empty()) labels = classifier.classify(pairs);
  return consistency_from_labels(record_id, std::move(pairs), std::move(labels));
}

std::vector<ConsistencyResult> assess_consistency(const std::vector<RecordView>& records, const RuleSet& rules,
                                                  NliClassifier& classifier) {
  std::vector<std::vector<PremiseHypothesis>> per_record;
  std::vector<PremiseHypothesis> all;
  for (const auto& r : records) {
    per_record.push_back(build_premise_hypothesis_pairs(r, rules));
    all.insert(all.end(), per_record.back().begin(), per_record.back().end());
  }
  std::vector<NliLabelDistribution> labels;
  if (!all.empty()) labels = classifier.classify(all);
  if (labels.size() != all.size()) throw ScorerError("nli classifier returned a mismatched number of labels");
  std::vector<ConsistencyResult> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t n = per_record[i].size();
    std::vector<NliLabelDistribution> mine(labels.begin() + static_cast<std::ptrdiff_t>(pos),
                                           labels.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    out.push_back(consistency_from_labels(records[i].record_id, std::move(per_record[i]), std::move(mine)));
  }
  return out;
}

}  // namespace ehrsynth
