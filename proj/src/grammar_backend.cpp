#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "ehrsynth/backend.hpp"
#include "ehrsynth/catalog.hpp"
#include "ehrsynth/prompt.hpp"
#include "ehrsynth/rng.hpp"
#include "ehrsynth/text.hpp"
#include "ehrsynth/value.hpp"

namespace ehrsynth {

namespace {

using Weighted = std::vector<std::pair<std::string, double>>;

std::string pick_weighted(Rng& rng, const Weighted& options) {
  std::vector<double> w;
  w.reserve(options.size());
  for (const auto& o : options) w.push_back(o.second);
  return options[rng.weighted_index(w)].first;
}

const std::vector<std::string> kFemaleNames{"maria", "aisha", "mei", "sofia", "olivia", "fatima", "priya", "emma",
                                            "grace", "lucia", "amara", "hana", "chloe", "nadia", "rosa", "leila"};
const std::vector<std::string> kMaleNames{"james", "wei", "omar", "diego", "liam", "kwame", "arjun", "noah",
                                          "mateo", "hiroshi", "samuel", "ivan", "yusuf", "daniel", "tomas", "ethan"};
const std::vector<std::string> kNeutralNames{"alex", "jordan", "taylor", "riley", "casey", "morgan", "avery", "quinn"};
const std::vector<std::string> kLastNames{"garcia", "nguyen", "smith", "okafor", "patel", "kim", "johnson", "haddad",
                                          "martinez", "chen", "williams", "rossi", "mensah", "silva", "kowalski",
                                          "tanaka", "brown", "ali", "lopez", "cohen", "mwangi", "singh", "murphy"};

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string ctx(const PromptContext& c, std::string_view key, std::string fallback = {}) {
  auto it = c.find(key);
  return it == c.end() ? fallback : it->second;
}

double ctx_number(const PromptContext& c, std::string_view key, double fallback) {
  auto it = c.find(key);
  if (it == c.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    return fallback;
  }
}

double round_to(double x, int decimals) {
  const double f = std::pow(10.0, decimals);
  return std::round(x * f) / f;
}

std::string age_band(double age) {
  if (age < 18) return "pediatric";
  if (age < 65) return "adult";
  return "geriatric";
}

std::string phone(Rng& rng) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "555-%04d", static_cast<int>(rng.uniform_int(100, 9999)));
  return buf;
}

std::string first_name_for(Rng& rng, const std::string& gender) {
  if (gender == "female") return capitalize(rng.pick(kFemaleNames));
  if (gender == "male") return capitalize(rng.pick(kMaleNames));
  return capitalize(rng.pick(kNeutralNames));
}

const ConditionInfo& context_condition(const PromptContext& c, Rng& rng) {
  if (const auto* cond = find_condition(ctx(c, "condition"))) return *cond;
  return rng.pick(condition_catalog());
}

std::vector<std::string> allergy_classes(const PromptContext& c) {
  std::vector<std::string> classes;
  const auto allergies = ctx(c, "allergies");
  for (const auto& a : split(allergies, ',')) {
    if (auto cls = default_drug_classes().allergen_class(trim(a))) classes.push_back(*cls);
  }
  return classes;
}

std::vector<std::string> chronic_candidates(double age) {
  std::vector<std::string> out;
  const auto band = age_band(age);
  for (const auto& c : condition_catalog()) {
    if (!c.chronic) continue;
    const double w = band == "pediatric" ? c.weight_pediatric : band == "adult" ? c.weight_adult : c.weight_geriatric;
    if (w > 0.3) out.push_back(c.name);
  }
  return out;
}

const std::vector<std::string> kWordSalad{"purple", "umbrella", "quietly", "galaxy", "invoice", "trombone",
                                          "saddle", "lantern", "orbit",   "marmalade", "gravel",  "tundra"};

std::string word_salad(Rng& rng, int n) {
  std::vector<std::string> words;
  for (int i = 0; i < n; ++i) words.push_back(rng.pick(kWordSalad));
  return join(words, " ");
}

const std::vector<std::string> kOffTopic{
    "the cafeteria will serve vegetable soup on friday",
    "parking garage level three is closed for painting",
    "the quarterly newsletter is available in the lobby",
    "remember to submit timesheets before the holiday weekend",
};

// Mutable per-row state: fields generated so far, keyed by field name.
struct RowState {
  const PromptContext& context;
  std::map<std::string, std::string, std::less<>> fields;
  std::string error_field;  // field chosen for deliberate corruption, if any

  bool corrupt(std::string_view field) const { return error_field == field; }
  double number(std::string_view field, double fallback) const {
    auto it = fields.find(field);
    if (it == fields.end()) return fallback;
    try {
      return std::stod(it->second);
    } catch (...) {
      return fallback;
    }
  }
};

using FieldGenerator = std::function<std::string(Rng&, RowState&)>;

std::string vital(double value, const char* unit) { return format_double(value) + " " + unit; }

std::string choose_medication(Rng& rng, RowState& st) {
  const auto& cond = context_condition(st.context, rng);
  const auto& classes = default_drug_classes();
  const auto allergic = allergy_classes(st.context);
  const auto current = split(ctx(st.context, "current_medications"), ',');
  auto conflicts = [&](const std::string& drug) {
    const auto cls = classes.drug_class(drug);
    return cls && std::find(allergic.begin(), allergic.end(), *cls) != allergic.end();
  };
  auto already = [&](const std::string& drug) {
    return std::any_of(current.begin(), current.end(), [&](const std::string& m) { return trim(m) == drug; });
  };
  if (st.corrupt("drug_name") && !allergic.empty()) {
    // Deliberate allergy conflict: prescribe a member of an allergy class.
    const auto members = classes.members(rng.pick(allergic));
    if (!members.empty()) return rng.pick(members);
  }
  std::vector<std::string> safe;
  for (const auto& d : cond.medications)
    if (!conflicts(d) && !already(d)) safe.push_back(d);
  if (safe.empty()) {
    for (const auto& d : std::vector<std::string>{"acetaminophen", "ondansetron"})
      if (!already(d)) safe.push_back(d);
  }
  if (safe.empty()) return "acetaminophen";
  return rng.pick(safe);
}

const std::map<std::string, FieldGenerator, std::less<>>& field_generators() {
  static const std::map<std::string, FieldGenerator, std::less<>> kGen{
      // -- reference tables ------------------------------------------------
      {"staff.first_name",
       [](Rng& r, RowState&) { return first_name_for(r, r.bernoulli(0.5) ? "female" : "male"); }},
      {"staff.last_name", [](Rng& r, RowState&) { return capitalize(r.pick(kLastNames)); }},
      {"staff.role",
       [](Rng& r, RowState&) {
         return pick_weighted(r, {{"physician", 0.4}, {"nurse", 0.35}, {"surgeon", 0.08}, {"technician", 0.1},
                                  {"pharmacist", 0.04}, {"administrator", 0.03}});
       }},
      {"staff.specialty",
       [](Rng&, RowState& st) -> std::string {
         const auto dept = ctx(st.context, "department_name", "general medicine");
         const auto role = st.fields.count("role") ? st.fields["role"] : std::string("physician");
         if (role == "nurse") return dept + " nursing";
         if (role == "technician") return dept + " diagnostics";
         if (role == "pharmacist") return "clinical pharmacy";
         if (role == "administrator") return "hospital administration";
         return dept;
       }},
      {"staff.email",
       [](Rng& r, RowState& st) {
         return to_lower(ctx(st.context, "first_name", st.fields["first_name"])) + "." +
                to_lower(st.fields["last_name"]) + std::to_string(r.uniform_int(1, 99)) + "@hospital.example";
       }},
      {"staff.hire_date",
       [](Rng& r, RowState&) {
         char buf[16];
         std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", static_cast<int>(r.uniform_int(1995, 2023)),
                       static_cast<int>(r.uniform_int(1, 12)), static_cast<int>(r.uniform_int(1, 28)));
         return std::string(buf);
       }},
      {"departments.floor", [](Rng& r, RowState&) { return std::to_string(r.uniform_int(1, 9)); }},
      {"departments.phone", [](Rng& r, RowState&) { return phone(r); }},
      {"wards.name",
       [](Rng&, RowState& st) {
         const int ordinal = static_cast<int>(ctx_number(st.context, "ordinal", 1));
         return ctx(st.context, "department_name", "general") + " ward " + std::string(1, static_cast<char>('a' + (ordinal - 1) % 26));
       }},
      {"wards.capacity", [](Rng& r, RowState&) { return std::to_string(r.uniform_int(12, 36)); }},
      {"beds.bed_number",
       [](Rng&, RowState& st) {
         return "bed " + std::to_string(static_cast<int>(ctx_number(st.context, "ordinal", 1)));
       }},
      {"beds.bed_type",
       [](Rng& r, RowState& st) {
         if (ctx(st.context, "department_name") == "pediatrics") return std::string("pediatric");
         return pick_weighted(r, {{"standard", 0.75}, {"icu", 0.2}, {"maternity", 0.05}});
       }},

      // -- patient-level tables -------------------------------------------
      {"patient_details.first_name", [](Rng& r, RowState& st) { return first_name_for(r, ctx(st.context, "gender")); }},
      {"patient_details.last_name", [](Rng& r, RowState&) { return capitalize(r.pick(kLastNames)); }},
      {"patient_details.blood_group",
       [](Rng& r, RowState&) {
         return pick_weighted(r, {{"O+", 0.37}, {"A+", 0.33}, {"B+", 0.09}, {"AB+", 0.03}, {"O-", 0.07},
                                  {"A-", 0.06}, {"B-", 0.02}, {"AB-", 0.01}});
       }},
      {"patient_details.phone", [](Rng& r, RowState&) { return phone(r); }},
      {"emergency_contacts.full_name",
       [](Rng& r, RowState& st) {
         return first_name_for(r, r.bernoulli(0.5) ? "female" : "male") + " " +
                ctx(st.context, "last_name", capitalize(r.pick(kLastNames)));
       }},
      {"emergency_contacts.relationship",
       [](Rng& r, RowState& st) {
         if (ctx_number(st.context, "age", 40) < 18)
           return pick_weighted(r, {{"parent", 0.85}, {"guardian", 0.15}});
         return pick_weighted(r, {{"spouse", 0.4}, {"child", 0.2}, {"sibling", 0.2}, {"friend", 0.1}, {"parent", 0.1}});
       }},
      {"emergency_contacts.phone", [](Rng& r, RowState&) { return phone(r); }},
      {"immunizations.vaccine",
       [](Rng& r, RowState& st) {
         const auto band = age_band(ctx_number(st.context, "age", 40));
         if (band == "pediatric")
           return r.pick(std::vector<std::string>{"measles mumps rubella", "dtap", "varicella", "hepatitis b", "polio"});
         if (band == "adult") return r.pick(std::vector<std::string>{"influenza", "tdap", "covid-19", "hepatitis b"});
         return r.pick(std::vector<std::string>{"influenza", "pneumococcal", "shingles", "covid-19"});
       }},
      {"allergies.allergen",
       [](Rng& r, RowState&) {
         return pick_weighted(r, {{"penicillin", 0.22}, {"sulfa drugs", 0.1}, {"aspirin", 0.06},
                                  {"cephalosporins", 0.04}, {"erythromycin", 0.03}, {"peanuts", 0.15},
                                  {"shellfish", 0.1}, {"latex", 0.1}, {"pollen", 0.12}, {"eggs", 0.08}});
       }},
      {"allergies.reaction",
       [](Rng& r, RowState& st) {
         const auto allergen = st.fields["allergen"];
         if (default_drug_classes().allergen_class(allergen))
           return r.pick(std::vector<std::string>{"hives", "skin rash", "facial swelling", "anaphylaxis"});
         return r.pick(std::vector<std::string>{"itching", "swelling of the lips", "sneezing", "wheezing"});
       }},
      {"allergies.severity",
       [](Rng& r, RowState& st) {
         if (st.fields["reaction"] == "anaphylaxis") return std::string("severe");
         return pick_weighted(r, {{"mild", 0.5}, {"moderate", 0.4}, {"severe", 0.1}});
       }},
      {"medical_histories.chronic_conditions",
       [](Rng& r, RowState& st) {
         auto candidates = chronic_candidates(ctx_number(st.context, "age", 40));
         const auto n = candidates.empty() ? 0 : r.weighted_index(std::vector<double>{0.35, 0.4, 0.25});
         if (n == 0) return std::string("the patient has no chronic conditions");
         r.shuffle(candidates);
         candidates.resize(std::min<std::size_t>(n, candidates.size()));
         return "the patient has chronic " + join(candidates, " and ");
       }},
      {"medical_histories.past_surgeries",
       [](Rng& r, RowState&) {
         const auto& s = pick_weighted(r, {{"", 0.45}, {"appendectomy", 0.12}, {"cholecystectomy", 0.1},
                                           {"tonsillectomy", 0.1}, {"knee arthroscopy", 0.08},
                                           {"cesarean section", 0.07}, {"hernia repair", 0.08}});
         if (s.empty()) return std::string("the patient has no past surgeries");
         return "the patient has a past surgery of " + s + " in " + std::to_string(r.uniform_int(1990, 2022));
       }},
      {"medical_histories.family_history",
       [](Rng& r, RowState&) {
         const auto& f = pick_weighted(r, {{"", 0.25}, {"heart disease", 0.2}, {"type 2 diabetes mellitus", 0.18},
                                           {"hypertension", 0.15}, {"breast cancer", 0.07}, {"asthma", 0.08},
                                           {"stroke", 0.07}});
         if (f.empty()) return std::string("the patient has no significant family history of disease");
         return "the patient has a family history of " + f + " in a " +
                r.pick(std::vector<std::string>{"parent", "sibling", "grandparent"});
       }},
      {"appointments.status",
       [](Rng& r, RowState&) {
         return pick_weighted(r, {{"completed", 0.55}, {"scheduled", 0.25}, {"cancelled", 0.12}, {"no_show", 0.08}});
       }},
      {"appointments.purpose",
       [](Rng& r, RowState&) {
         return r.pick(std::vector<std::string>{"annual physical examination", "follow up visit", "medication review",
                                                "vaccination visit", "laboratory results review"});
       }},

      // -- visit-level tables ---------------------------------------------
      {"hospital_visits.reason",
       [](Rng& r, RowState& st) { return r.pick(context_condition(st.context, r).presentations); }},
      {"vital_signs.systolic_bp",
       [](Rng& r, RowState& st) {
         const double age = ctx_number(st.context, "age", 40);
         const auto cond = ctx(st.context, "condition");
         double mean = age < 18 ? 105 : 112 + 0.3 * (age - 18);
         if (cond == "hypertension") mean += 28;
         if (st.corrupt("systolic_bp")) return vital(r.bernoulli(0.5) ? 300 : 30, "mmHg");
         return vital(std::round(std::clamp(r.normal(mean, 10), 85.0, 195.0)), "mmHg");
       }},
      {"vital_signs.diastolic_bp",
       [](Rng& r, RowState& st) {
         if (st.corrupt("diastolic_bp")) return vital(0, "mmHg");
         const double sys = st.number("systolic_bp", 120);
         return vital(std::round(std::clamp(sys * 0.62 + r.normal(4, 5), 45.0, 118.0)), "mmHg");
       }},
      {"vital_signs.heart_rate",
       [](Rng& r, RowState& st) {
         const double age = ctx_number(st.context, "age", 40);
         double mean = age < 12 ? 95 : 76;
         if (ctx(st.context, "condition") == "atrial fibrillation") mean += 25;
         if (st.corrupt("heart_rate")) return vital(0, "bpm");
         return vital(std::round(std::clamp(r.normal(mean, 9), 45.0, 145.0)), "bpm");
       }},
      {"vital_signs.temperature_c",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         const double mean = cond.topic == "antibiotic therapy" ? 38.2 : 36.9;
         return vital(round_to(std::clamp(r.normal(mean, 0.35), 35.5, 39.8), 1), "C");
       }},
      {"vital_signs.height_cm",
       [](Rng& r, RowState& st) {
         const double age = ctx_number(st.context, "age", 40);
         const bool male = ctx(st.context, "gender") == "male";
         double h = age < 18 ? 75 + 6.2 * age : (male ? 176 : 163);
         if (age >= 70) h -= 3;
         return vital(round_to(std::clamp(r.normal(h, age < 18 ? 5 : 7), 50.0, 205.0), 1), "cm");
       }},
      {"vital_signs.weight_kg",
       [](Rng& r, RowState& st) {
         const double h = st.number("height_cm", 170) / 100.0;
         const double age = ctx_number(st.context, "age", 40);
         const double bmi = std::clamp(r.normal(age < 18 ? 18 : 26.5, age < 18 ? 2.5 : 4.0), 13.0, 45.0);
         return vital(round_to(std::clamp(bmi * h * h, 3.0, 240.0), 1), "kg");
       }},
      {"vital_signs.severity_class",
       [](Rng& r, RowState& st) {
         const auto actual = classify_blood_pressure(st.number("systolic_bp", 120), st.number("diastolic_bp", 80));
         if (st.corrupt("severity_class")) {
           // Understate a high reading or overstate a normal one.
           return severity_rank(actual) >= 2 ? std::string("normal") : std::string("hypertensive_crisis");
         }
         (void)r;
         return actual;
       }},
      {"test_results.potassium_mmol_l",
       [](Rng& r, RowState& st) {
         if (st.corrupt("potassium_mmol_l")) return vital(15, "mmol/L");
         return vital(round_to(std::clamp(r.normal(4.2, 0.35), 3.2, 5.4), 1), "mmol/L");
       }},
      {"test_results.sodium_mmol_l",
       [](Rng& r, RowState&) { return vital(std::round(std::clamp(r.normal(140, 2.5), 130.0, 150.0)), "mmol/L"); }},
      {"test_results.glucose_mg_dl",
       [](Rng& r, RowState& st) {
         const bool diabetic = ctx(st.context, "condition") == "type 2 diabetes mellitus" ||
                               ctx(st.context, "chronic_conditions").find("diabetes") != std::string::npos;
         return vital(std::round(std::clamp(diabetic ? r.normal(165, 35) : r.normal(96, 11), 65.0, 320.0)), "mg/dL");
       }},
      {"test_results.hemoglobin_g_dl",
       [](Rng& r, RowState& st) {
         const double mean = ctx(st.context, "gender") == "male" ? 14.8 : 13.3;
         return vital(round_to(std::clamp(r.normal(mean, 1.0), 9.0, 18.5), 1), "g/dL");
       }},
      {"test_results.wbc_k_ul",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         const double mean = cond.topic == "antibiotic therapy" ? 13.5 : 7.2;
         return format_double(round_to(std::clamp(r.normal(mean, 1.8), 3.0, 24.0), 1));
       }},
      {"test_results.interpretation",
       [](Rng&, RowState& st) {
         std::vector<std::string> notes;
         const double k = st.number("potassium_mmol_l", 4.2);
         if (k > 5.0) notes.push_back("elevated potassium");
         else if (k < 3.5) notes.push_back("low potassium");
         if (st.number("glucose_mg_dl", 95) > 125) notes.push_back("elevated glucose");
         if (st.number("wbc_k_ul", 7) > 11) notes.push_back("elevated white cell count");
         if (notes.empty()) return std::string("all results within normal limits");
         return join(notes, " and ");
       }},
      {"diagnoses.icd10_code", [](Rng& r, RowState& st) { return context_condition(st.context, r).icd10; }},
      {"diagnoses.description",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         return "the patient was diagnosed with " + cond.name + " after presenting with " +
                ctx(st.context, "reason", r.pick(cond.presentations));
       }},
      {"admissions.admission_reason",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         if (st.corrupt("admission_reason")) return word_salad(r, 9);
         return "admitted with " + ctx(st.context, "reason", r.pick(cond.presentations)) + " due to " + cond.name;
       }},
      {"admissions.admission_note",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         return "the patient was admitted for " + cond.name + " and started on " + cond.topic +
                " with close monitoring";
       }},
      {"treatment_plans.topic", [](Rng& r, RowState& st) { return context_condition(st.context, r).topic; }},
      {"treatment_plans.plan_description",
       [](Rng& r, RowState& st) {
         if (st.corrupt("plan_description")) return r.pick(kOffTopic);
         const auto& cond = context_condition(st.context, r);
         return "the patient with " + cond.name + " was started on " + cond.topic + " to " + cond.plan;
       }},
      {"medications.drug_name", choose_medication},
      {"medications.dose_mg",
       [](Rng&, RowState& st) {
         const auto* d = default_drug_classes().drug(st.fields["drug_name"]);
         double dose = d ? d->dose_mg : 100.0;
         if (ctx_number(st.context, "age", 40) < 12) dose = round_to(dose / 2.0, 2);
         return format_double(dose) + " mg";
       }},
      {"medications.frequency",
       [](Rng&, RowState& st) {
         const auto* d = default_drug_classes().drug(st.fields["drug_name"]);
         return d ? d->frequency : std::string("once daily");
       }},
      {"medications.route",
       [](Rng&, RowState& st) {
         const auto* d = default_drug_classes().drug(st.fields["drug_name"]);
         return d ? d->route : std::string("oral");
       }},
      {"clinical_notes.note_text",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         return ctx(st.context, "age", "adult") + " year old " + ctx(st.context, "gender", "") + " patient seen for " +
                ctx(st.context, "reason", cond.presentations.front()) + ". assessment: " + cond.name +
                ". plan: " + cond.topic + " and follow up";
       }},
      {"visit_logs.event",
       [](Rng& r, RowState&) {
         return r.pick(std::vector<std::string>{"patient checked in", "vital signs recorded",
                                                "physician assessment completed", "laboratory samples collected",
                                                "medication administered", "patient discharged from visit"});
       }},
      {"discharge_summaries.discharge_diagnosis",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         if (st.corrupt("discharge_diagnosis")) {
           std::vector<std::string> others;
           for (const auto& c : condition_catalog())
             if (c.name != cond.name) others.push_back(c.name);
           return r.pick(others);
         }
         return cond.name;
       }},
      {"discharge_summaries.summary_text",
       [](Rng& r, RowState& st) {
         const auto& cond = context_condition(st.context, r);
         return "the patient was treated for " + cond.name + " with " + cond.topic + " and improved";
       }},
      {"discharge_summaries.follow_up",
       [](Rng& r, RowState& st) {
         return "follow up with " + ctx(st.context, "department_name", "primary care") + " in " +
                std::to_string(r.uniform_int(1, 4)) + " weeks";
       }},
      {"referrals.urgency",
       [](Rng& r, RowState&) { return pick_weighted(r, {{"routine", 0.7}, {"urgent", 0.25}, {"emergent", 0.05}}); }},
      {"referrals.reason",
       [](Rng& r, RowState& st) {
         return "referral for further evaluation of " + context_condition(st.context, r).name;
       }},
      {"billing.amount_usd",
       [](Rng& r, RowState& st) {
         const auto type = ctx(st.context, "visit_type", "outpatient");
         double lo = 150, hi = 600;
         if (type == "emergency") lo = 800, hi = 3500;
         if (type == "inpatient") lo = 4000, hi = 25000;
         return format_double(round_to(r.uniform(lo, hi), 2));
       }},
      {"billing.insurance_provider",
       [](Rng& r, RowState&) {
         return r.pick(std::vector<std::string>{"medicare", "medicaid", "blue cross", "aetna", "united health",
                                                "self pay"});
       }},
      {"billing.status",
       [](Rng& r, RowState&) { return pick_weighted(r, {{"paid", 0.6}, {"pending", 0.32}, {"denied", 0.08}}); }},
  };
  return kGen;
}

// Fields the backend is allowed to corrupt, per table.
const std::map<std::string, std::vector<std::string>, std::less<>>& error_fields() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> kErrors{
      {"vital_signs", {"diastolic_bp", "systolic_bp", "heart_rate", "severity_class"}},
      {"test_results", {"potassium_mmol_l"}},
      {"medications", {"drug_name"}},
      {"treatment_plans", {"plan_description"}},
      {"admissions", {"admission_reason"}},
      {"discharge_summaries", {"discharge_diagnosis"}},
  };
  return kErrors;
}

std::string fallback_value(Rng& rng, const std::string& field) {
  return field + " value " + std::to_string(rng.uniform_int(1, 999));
}

}  // namespace

std::string GrammarBackend::complete(const std::string& prompt, std::uint64_t seed, int max_len) {
  const PromptRequest req = parse_prompt_request(prompt);
  Rng rng(seed ^ Rng::hash(req.table));
  RowState state{req.context, {}, {}};

  if (options_.error_rate > 0.0 && rng.bernoulli(options_.error_rate)) {
    auto it = error_fields().find(req.table);
    if (it != error_fields().end()) {
      std::vector<std::string> eligible;
      for (const auto& f : it->second)
        if (std::find(req.fields.begin(), req.fields.end(), f) != req.fields.end()) eligible.push_back(f);
      if (!eligible.empty()) state.error_field = rng.pick(eligible);
    }
  }

  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& field : req.fields) {
    auto gen = field_generators().find(req.table + "." + field);
    std::string value = gen != field_generators().end() ? gen->second(rng, state) : fallback_value(rng, field);
    state.fields[field] = value;
    out.emplace_back(field, std::move(value));
  }
  std::string text = "Here is the requested " + req.table + " record.\n" + format_record_block(out);
  if (max_len > 0 && text.size() > static_cast<std::size_t>(max_len)) text.resize(static_cast<std::size_t>(max_len));
  return text;
}

std::vector<std::string> build_reference_corpus(std::uint64_t seed, std::size_t sentences) {
  Rng rng(seed);
  std::vector<std::string> corpus;
  corpus.reserve(sentences);
  const auto& gens = field_generators();
  auto run = [&](const std::string& key, PromptContext& c) {
    RowState st{c, {}, {}};
    return gens.at(key)(rng, st);
  };
  while (corpus.size() < sentences) {
    const auto& cond = rng.pick(condition_catalog());
    PromptContext c;
    c["condition"] = cond.name;
    c["age"] = std::to_string(rng.uniform_int(1, 95));
    c["reason"] = rng.pick(cond.presentations);
    switch (rng.uniform_int(0, 4)) {
      case 0: corpus.push_back(run("admissions.admission_reason", c)); break;
      case 1: corpus.push_back(run("diagnoses.description", c)); break;
      case 2: corpus.push_back(run("medical_histories.chronic_conditions", c)); break;
      case 3: {
        c["allergies"] = "";
        RowState st{c, {}, {}};
        const auto drug = choose_medication(rng, st);
        const auto* info = default_drug_classes().drug(drug);
        corpus.push_back("prescribed " +
                         medication_phrase(drug, info ? info->dose_mg : 100.0, info ? info->frequency : "once daily"));
        break;
      }
      default: corpus.push_back(run("treatment_plans.plan_description", c)); break;
    }
  }
  return corpus;
}

}  // namespace ehrsynth
