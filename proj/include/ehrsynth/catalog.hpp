#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ehrsynth {

// Clinical reference data: conditions the grammar backend can generate, the
// drug-class fixture used by the allergy/medication rule, and blood-pressure
// severity bands. A documented fixture, not clinical ground truth.

struct ConditionInfo {
  std::string name;
  std::string icd10;
  std::string department;          // default department for the visit
  double weight_pediatric = 0.0;   // relative sampling weights per age band
  double weight_adult = 0.0;
  double weight_geriatric = 0.0;
  bool chronic = false;            // may appear in medical histories
  std::string topic;               // treatment-plan topic
  std::vector<std::string> presentations;  // presenting complaints
  std::vector<std::string> medications;    // first-line drugs
  std::string plan;                // treatment-plan phrase
};

const std::vector<ConditionInfo>& condition_catalog();
const ConditionInfo* find_condition(std::string_view name);

std::vector<std::string> condition_names();
std::vector<std::string> treatment_topics();
std::vector<std::string> prescribable_drugs();

struct DrugInfo {
  std::string name;
  std::string drug_class;
  double dose_mg = 0.0;
  std::string frequency;
  std::string route;
};

// Drug name -> class lookup plus allergen aliases ("sulfa" -> sulfonamides).
class DrugClassMap {
 public:
  DrugClassMap() = default;
  DrugClassMap(std::vector<DrugInfo> drugs, std::map<std::string, std::string> allergen_aliases);

  std::optional<std::string> drug_class(std::string_view drug) const;
  std::optional<std::string> allergen_class(std::string_view allergen) const;
  const DrugInfo* drug(std::string_view name) const;

  const std::vector<DrugInfo>& drugs() const { return drugs_; }
  const std::map<std::string, std::string>& aliases() const { return aliases_; }
  std::vector<std::string> classes() const;
  std::vector<std::string> members(std::string_view drug_class) const;

 private:
  std::vector<DrugInfo> drugs_;
  std::map<std::string, std::string> aliases_;
};

const DrugClassMap& default_drug_classes();
DrugClassMap load_drug_classes(const std::string& json_text);

// Classes that can trigger an allergy conflict in the shipped fixture.
const std::vector<std::string>& allergy_relevant_classes();

// ACC/AHA-style adult bands: normal, elevated, hypertension_stage_1,
// hypertension_stage_2, hypertensive_crisis (>= 180 systolic or >= 120 diastolic).
std::string classify_blood_pressure(double systolic, double diastolic);
int severity_rank(std::string_view severity_class);

const std::vector<std::string>& department_names();

}  // namespace ehrsynth

namespace ehrsynth {

// "amoxicillin 500 mg three times daily"; shared by narratives and the corpus.
std::string medication_phrase(std::string_view drug, double dose_mg, std::string_view frequency);

// "the patient has blood pressure 128/82 mmhg and heart rate 76 bpm ..."
std::string vitals_sentence(double systolic, double diastolic, double heart_rate, double temperature_c);

}  // namespace ehrsynth
