#include "ehrsynth/catalog.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/text.hpp"
#include "ehrsynth/value.hpp"

namespace ehrsynth {

const std::vector<ConditionInfo>& condition_catalog() {
  static const std::vector<ConditionInfo> kConditions{
      {"hypertension", "I10", "cardiology", 0.0, 1.2, 1.2, true, "blood pressure control",
       {"headache and elevated blood pressure", "dizziness with high blood pressure readings"},
       {"lisinopril", "amlodipine", "hydrochlorothiazide", "losartan"},
       "start antihypertensive therapy with home blood pressure monitoring"},
      {"type 2 diabetes mellitus", "E11.9", "internal medicine", 0.1, 1.0, 1.0, true, "glycemic control",
       {"increased thirst and frequent urination", "fatigue with high blood glucose"},
       {"metformin", "insulin glargine", "sitagliptin"},
       "begin glucose lowering therapy with diet counseling and glucose monitoring"},
      {"community acquired pneumonia", "J18.9", "pulmonology", 0.7, 0.8, 1.2, false, "antibiotic therapy",
       {"fever with productive cough and shortness of breath", "cough and chest pain with fever"},
       {"amoxicillin", "azithromycin", "ceftriaxone", "doxycycline"},
       "treat the infection with antibiotic therapy and monitor oxygen saturation"},
      {"urinary tract infection", "N39.0", "internal medicine", 0.4, 1.0, 1.0, false, "antibiotic therapy",
       {"painful urination and urinary frequency", "lower abdominal pain with burning urination"},
       {"nitrofurantoin", "trimethoprim-sulfamethoxazole", "cephalexin", "ciprofloxacin"},
       "treat the infection with oral antibiotic therapy and encourage fluid intake"},
      {"asthma exacerbation", "J45.901", "pulmonology", 1.5, 0.8, 0.3, true, "airway management",
       {"wheezing and shortness of breath", "chest tightness with wheezing"},
       {"albuterol", "prednisone", "fluticasone"},
       "relieve airway obstruction with bronchodilator and steroid therapy"},
      {"osteoarthritis of the knee", "M17.9", "orthopedics", 0.0, 0.6, 1.5, true, "pain management",
       {"knee pain and stiffness", "joint pain that worsens with walking"},
       {"ibuprofen", "naproxen", "acetaminophen", "meloxicam"},
       "control joint pain with analgesic therapy and physical therapy"},
      {"congestive heart failure", "I50.9", "cardiology", 0.0, 0.4, 1.5, true, "fluid management",
       {"shortness of breath and leg swelling", "fatigue with swelling of the ankles"},
       {"furosemide", "metoprolol", "lisinopril", "spironolactone"},
       "reduce fluid overload with diuretic therapy and daily weight checks"},
      {"cellulitis", "L03.90", "internal medicine", 0.5, 1.0, 0.8, false, "antibiotic therapy",
       {"redness and swelling of the lower leg", "warm painful skin with fever"},
       {"cephalexin", "dicloxacillin", "clindamycin"},
       "treat the skin infection with antibiotic therapy and limb elevation"},
      {"migraine", "G43.909", "neurology", 0.4, 1.0, 0.3, true, "headache management",
       {"severe headache with sensitivity to light", "throbbing headache with nausea"},
       {"sumatriptan", "ibuprofen", "propranolol"},
       "abort headache attacks with triptan therapy and avoid known triggers"},
      {"atrial fibrillation", "I48.91", "cardiology", 0.0, 0.4, 1.4, true, "rate control and anticoagulation",
       {"palpitations and an irregular heartbeat", "irregular heart rate with fatigue"},
       {"apixaban", "metoprolol", "diltiazem"},
       "control the heart rate and start anticoagulation therapy"},
      {"major depressive disorder", "F32.9", "psychiatry", 0.3, 1.0, 0.6, true, "mood stabilization",
       {"low mood and loss of interest", "poor sleep with persistent sadness"},
       {"sertraline", "fluoxetine"},
       "start antidepressant therapy with counseling and follow up"},
      {"hyperlipidemia", "E78.5", "cardiology", 0.0, 1.0, 1.0, true, "lipid management",
       {"elevated cholesterol on screening", "high cholesterol found on routine testing"},
       {"atorvastatin", "simvastatin"},
       "lower cholesterol with statin therapy and diet changes"},
      {"acute otitis media", "H66.90", "pediatrics", 1.6, 0.2, 0.1, false, "antibiotic therapy",
       {"ear pain with fever", "ear pain and irritability"},
       {"amoxicillin", "cefdinir", "azithromycin"},
       "treat the ear infection with antibiotic therapy and pain control"},
      {"streptococcal pharyngitis", "J02.0", "internal medicine", 1.4, 0.6, 0.2, false, "antibiotic therapy",
       {"sore throat with fever", "sore throat and swollen glands"},
       {"penicillin v", "amoxicillin", "azithromycin", "cephalexin"},
       "treat the throat infection with antibiotic therapy and rest"},
      {"copd exacerbation", "J44.1", "pulmonology", 0.0, 0.4, 1.3, true, "airway management",
       {"worsening shortness of breath and cough", "increased sputum with shortness of breath"},
       {"albuterol", "prednisone", "azithromycin"},
       "relieve airway obstruction with bronchodilator and steroid therapy"},
      {"acute gastroenteritis", "K52.9", "emergency medicine", 1.2, 0.8, 0.6, false, "hydration and symptom control",
       {"vomiting and diarrhea", "abdominal cramps with diarrhea"},
       {"ondansetron", "acetaminophen"},
       "restore hydration with fluids and control nausea"},
  };
  return kConditions;
}

const ConditionInfo* find_condition(std::string_view name) {
  const auto lname = to_lower(name);
  for (const auto& c : condition_catalog())
    if (c.name == lname) return &c;
  return nullptr;
}

std::vector<std::string> condition_names() {
  std::vector<std::string> out;
  for (const auto& c : condition_catalog()) out.push_back(c.name);
  return out;
}

std::vector<std::string> treatment_topics() {
  std::set<std::string> topics;
  for (const auto& c : condition_catalog()) topics.insert(c.topic);
  return {topics.begin(), topics.end()};
}

std::vector<std::string> prescribable_drugs() {
  std::set<std::string> drugs;
  for (const auto& c : condition_catalog()) drugs.insert(c.medications.begin(), c.medications.end());
  return {drugs.begin(), drugs.end()};
}

DrugClassMap::DrugClassMap(std::vector<DrugInfo> drugs, std::map<std::string, std::string> allergen_aliases)
    : drugs_(std::move(drugs)), aliases_(std::move(allergen_aliases)) {
  for (auto& d : drugs_) {
    d.name = to_lower(d.name);
    d.drug_class = to_lower(d.drug_class);
  }
}

const DrugInfo* DrugClassMap::drug(std::string_view name) const {
  const auto lname = to_lower(trim(name));
  for (const auto& d : drugs_)
    if (d.name == lname) return &d;
  return nullptr;
}

std::optional<std::string> DrugClassMap::drug_class(std::string_view drug_name) const {
  if (const auto* d = drug(drug_name)) return d->drug_class;
  return std::nullopt;
}

std::optional<std::string> DrugClassMap::allergen_class(std::string_view allergen) const {
  const auto key = to_lower(trim(allergen));
  if (auto it = aliases_.find(key); it != aliases_.end()) return it->second;
  return drug_class(key);
}

std::vector<std::string> DrugClassMap::classes() const {
  std::set<std::string> out;
  for (const auto& d : drugs_) out.insert(d.drug_class);
  return {out.begin(), out.end()};
}

std::vector<std::string> DrugClassMap::members(std::string_view cls) const {
  std::vector<std::string> out;
  for (const auto& d : drugs_)
    if (d.drug_class == cls) out.push_back(d.name);
  return out;
}

const DrugClassMap& default_drug_classes() {
  static const DrugClassMap kMap{
      {
          // allergy-relevant classes
          {"penicillin", "penicillins", 500, "four times daily", "oral"},
          {"penicillin v", "penicillins", 500, "four times daily", "oral"},
          {"amoxicillin", "penicillins", 500, "three times daily", "oral"},
          {"ampicillin", "penicillins", 1000, "every six hours", "intravenous"},
          {"piperacillin", "penicillins", 4000, "every eight hours", "intravenous"},
          {"dicloxacillin", "penicillins", 500, "four times daily", "oral"},
          {"nafcillin", "penicillins", 2000, "every four hours", "intravenous"},
          {"amoxicillin-clavulanate", "penicillins", 875, "twice daily", "oral"},
          {"azithromycin", "macrolides", 500, "once daily", "oral"},
          {"clarithromycin", "macrolides", 500, "twice daily", "oral"},
          {"erythromycin", "macrolides", 400, "four times daily", "oral"},
          {"cephalexin", "cephalosporins", 500, "four times daily", "oral"},
          {"cefazolin", "cephalosporins", 1000, "every eight hours", "intravenous"},
          {"ceftriaxone", "cephalosporins", 1000, "once daily", "intravenous"},
          {"cefuroxime", "cephalosporins", 500, "twice daily", "oral"},
          {"cefdinir", "cephalosporins", 300, "twice daily", "oral"},
          {"cefepime", "cephalosporins", 2000, "every twelve hours", "intravenous"},
          {"ibuprofen", "nsaids", 400, "every six hours as needed", "oral"},
          {"naproxen", "nsaids", 500, "twice daily", "oral"},
          {"aspirin", "nsaids", 325, "once daily", "oral"},
          {"diclofenac", "nsaids", 50, "three times daily", "oral"},
          {"celecoxib", "nsaids", 200, "once daily", "oral"},
          {"meloxicam", "nsaids", 15, "once daily", "oral"},
          {"ketorolac", "nsaids", 30, "every six hours", "intravenous"},
          {"sulfamethoxazole", "sulfonamides", 800, "twice daily", "oral"},
          {"trimethoprim-sulfamethoxazole", "sulfonamides", 960, "twice daily", "oral"},
          {"sulfasalazine", "sulfonamides", 500, "twice daily", "oral"},
          {"sulfadiazine", "sulfonamides", 1000, "four times daily", "oral"},
          // other prescribable classes
          {"lisinopril", "ace inhibitors", 10, "once daily", "oral"},
          {"losartan", "angiotensin receptor blockers", 50, "once daily", "oral"},
          {"amlodipine", "calcium channel blockers", 5, "once daily", "oral"},
          {"diltiazem", "calcium channel blockers", 120, "once daily", "oral"},
          {"hydrochlorothiazide", "diuretics", 25, "once daily", "oral"},
          {"furosemide", "diuretics", 40, "once daily", "oral"},
          {"spironolactone", "diuretics", 25, "once daily", "oral"},
          {"metoprolol", "beta blockers", 50, "twice daily", "oral"},
          {"propranolol", "beta blockers", 40, "twice daily", "oral"},
          {"metformin", "biguanides", 500, "twice daily", "oral"},
          {"insulin glargine", "insulins", 10, "once daily at bedtime", "subcutaneous"},
          {"sitagliptin", "dpp-4 inhibitors", 100, "once daily", "oral"},
          {"atorvastatin", "statins", 20, "once daily", "oral"},
          {"simvastatin", "statins", 20, "once daily at bedtime", "oral"},
          {"albuterol", "bronchodilators", 2.5, "every four hours as needed", "inhaled"},
          {"prednisone", "corticosteroids", 40, "once daily", "oral"},
          {"fluticasone", "corticosteroids", 0.25, "twice daily", "inhaled"},
          {"sertraline", "ssris", 50, "once daily", "oral"},
          {"fluoxetine", "ssris", 20, "once daily", "oral"},
          {"apixaban", "anticoagulants", 5, "twice daily", "oral"},
          {"acetaminophen", "analgesics", 650, "every six hours as needed", "oral"},
          {"sumatriptan", "triptans", 50, "at onset of headache", "oral"},
          {"doxycycline", "tetracyclines", 100, "twice daily", "oral"},
          {"nitrofurantoin", "nitrofurans", 100, "twice daily", "oral"},
          {"clindamycin", "lincosamides", 300, "four times daily", "oral"},
          {"ciprofloxacin", "fluoroquinolones", 500, "twice daily", "oral"},
          {"ondansetron", "antiemetics", 4, "every eight hours as needed", "oral"},
      },
      {
          {"penicillin", "penicillins"},
          {"penicillins", "penicillins"},
          {"macrolides", "macrolides"},
          {"cephalosporins", "cephalosporins"},
          {"nsaids", "nsaids"},
          {"sulfa", "sulfonamides"},
          {"sulfa drugs", "sulfonamides"},
          {"sulfonamides", "sulfonamides"},
      }};
  return kMap;
}

DrugClassMap load_drug_classes(const std::string& json_text) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    std::vector<DrugInfo> drugs;
    for (const auto& d : doc.at("drugs")) {
      drugs.push_back(DrugInfo{d.at("name").get<std::string>(), d.at("class").get<std::string>(),
                               d.value("dose_mg", 0.0), d.value("frequency", std::string{}),
                               d.value("route", std::string{"oral"})});
    }
    std::map<std::string, std::string> aliases;
    if (doc.contains("allergen_aliases")) {
      for (const auto& [k, v] : doc.at("allergen_aliases").items()) aliases[to_lower(k)] = to_lower(v.get<std::string>());
    }
    return DrugClassMap(std::move(drugs), std::move(aliases));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed drug class file: ") + e.what());
  }
}

const std::vector<std::string>& allergy_relevant_classes() {
  static const std::vector<std::string> kClasses{"penicillins", "macrolides", "cephalosporins", "nsaids",
                                                 "sulfonamides"};
  return kClasses;
}

std::string classify_blood_pressure(double systolic, double diastolic) {
  if (systolic >= 180 || diastolic >= 120) return "hypertensive_crisis";
  if (systolic >= 140 || diastolic >= 90) return "hypertension_stage_2";
  if (systolic >= 130 || diastolic >= 80) return "hypertension_stage_1";
  if (systolic >= 120) return "elevated";
  return "normal";
}

int severity_rank(std::string_view severity_class) {
  static const std::vector<std::string> kOrder{"normal", "elevated", "hypertension_stage_1", "hypertension_stage_2",
                                               "hypertensive_crisis"};
  for (std::size_t i = 0; i < kOrder.size(); ++i)
    if (kOrder[i] == severity_class) return static_cast<int>(i);
  return -1;
}

const std::vector<std::string>& department_names() {
  static const std::vector<std::string> kNames{"emergency medicine", "internal medicine", "cardiology",
                                               "pulmonology",        "pediatrics",        "geriatrics",
                                               "orthopedics",        "neurology",         "psychiatry"};
  return kNames;
}

}  // namespace ehrsynth

namespace ehrsynth {

std::string medication_phrase(std::string_view drug, double dose_mg, std::string_view frequency) {
  std::string out(drug);
  out += " " + format_double(dose_mg) + " mg";
  if (!frequency.empty()) out += " " + std::string(frequency);
  return out;
}

std::string vitals_sentence(double systolic, double diastolic, double heart_rate, double temperature_c) {
  return "the patient has blood pressure " + format_double(systolic) + "/" + format_double(diastolic) +
         " mmhg with heart rate " + format_double(heart_rate) + " bpm and temperature " +
         format_double(temperature_c) + " c";
}

}  // namespace ehrsynth
