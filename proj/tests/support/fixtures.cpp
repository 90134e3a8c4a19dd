#include "fixtures.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "ehrsynth/backend.hpp"
#include "ehrsynth/load.hpp"

namespace fixtures {

using ehrsynth::Row;
using ehrsynth::Value;

AnomalyFixture anomaly_fixture(std::uint64_t seed) {
  AnomalyFixture f;
  f.plan.numeric = {"vital_signs.systolic_bp",      "vital_signs.diastolic_bp",   "vital_signs.heart_rate",
                    "vital_signs.temperature_c",    "test_results.potassium_mmol_l", "test_results.sodium_mmol_l",
                    "test_results.glucose_mg_dl",   "test_results.hemoglobin_g_dl"};

  struct Col {
    double mean, a, b, noise;
  };
  // mean, loading on factor 1, loading on factor 2, independent noise
  const Col cols[] = {{125, 12, 3, 2},   {80, 8, 2, 1.5},   {78, 4, 8, 2},    {36.9, 0.1, 0.3, 0.05},
                      {4.2, 0.1, 0.3, 0.05}, {139, 1, 2, 0.5}, {110, 15, 10, 4}, {13.5, 0.6, 0.4, 0.2}};

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  auto make_row = [&] {
    const double z1 = n01(gen), z2 = n01(gen);
    Row r;
    for (std::size_t i = 0; i < f.plan.numeric.size(); ++i) {
      const auto& c = cols[i];
      r[f.plan.numeric[i]] = c.mean + c.a * z1 + c.b * z2 + c.noise * n01(gen);
    }
    return r;
  };
  for (int i = 0; i < 1000; ++i) f.rows.push_back(make_row());

  const std::pair<const char*, double> impossible[] = {
      {"test_results.potassium_mmol_l", 15.0}, {"vital_signs.diastolic_bp", 0.0},
      {"vital_signs.systolic_bp", 300.0},      {"vital_signs.heart_rate", 0.0},
      {"test_results.sodium_mmol_l", 190.0},   {"test_results.glucose_mg_dl", 2000.0},
      {"test_results.hemoglobin_g_dl", 1.0},   {"vital_signs.temperature_c", 44.5}};
  // Outliers are interleaved at fixed positions.
  std::vector<Row> all;
  std::size_t next = 0;
  for (int i = 0; i < 20; ++i) {
    Row r = make_row();
    const auto& [col, v] = impossible[i % 8];
    r[col] = v;
    const std::size_t at = static_cast<std::size_t>(i) * 50 + 25;
    while (next < at) all.push_back(f.rows[next++]);
    f.outliers.push_back(all.size());
    all.push_back(std::move(r));
  }
  while (next < f.rows.size()) all.push_back(f.rows[next++]);
  f.rows = std::move(all);
  return f;
}

ehrsynth::Cohort grammar_cohort(int patients, std::uint64_t seed, double error_rate) {
  const auto schema = ehrsynth::build_default_schema();
  ehrsynth::GrammarBackend backend(ehrsynth::GrammarOptions{error_rate});
  return ehrsynth::generate_cohort(schema, ehrsynth::default_templates(schema), backend, patients, seed,
                                   ehrsynth::default_generation_config());
}

const std::vector<std::string>& perplexity_sentences() {
  static const std::vector<std::string> s{
      "the patient was diagnosed with pneumonia after presenting with cough and fever",
      "the patient has chronic hypertension",
      "prescribed amoxicillin 500 mg three times daily",
      "the patient reports chest pain radiating to the left arm",
      "blood pressure was elevated on arrival",
      "the patient has a family history of heart disease",
      "started on insulin therapy for glycemic control",
      "the patient was admitted for observation overnight",
      "no known drug allergies were documented",
      "the patient has chronic asthma and seasonal allergies",
      "prescribed lisinopril 10 mg once daily",
      "the patient was diagnosed with urinary tract infection after presenting with dysuria",
      "discharged home in stable condition",
      "the patient complains of shortness of breath on exertion",
      "follow up with cardiology in two weeks",
      "the patient was diagnosed with acute bronchitis",
      "heart rate was regular and temperature normal",
      "the patient has a past surgery of appendectomy",
      "prescribed metformin 500 mg twice daily",
      "the patient denies fever or chills",
      "xylophone quasar nebula",
      "the patient was started on antibiotic therapy",
      "laboratory results showed elevated glucose",
      "the patient has chronic kidney disease",
      "prescribed ibuprofen 400 mg every six hours",
      "the patient was diagnosed with migraine after presenting with headache",
      "physical therapy was recommended for knee pain",
      "the patient is allergic to penicillin",
      "the patient was transferred to the intensive care unit",
      "oxygen saturation improved with supplemental oxygen",
      "the patient has type 2 diabetes mellitus",
      "the patient was diagnosed with gastroenteritis after presenting with vomiting",
      "prescribed albuterol inhaler as needed",
      "the patient reports improvement in symptoms",
      "cafeteria parking newsletter",
      "the patient was counseled on smoking cessation",
      "the patient has a family history of stroke",
      "prescribed atorvastatin 20 mg at bedtime",
      "the patient was diagnosed with otitis media",
      "wound care instructions were provided",
      "the patient has no chronic conditions",
      "the patient presented with abdominal pain and nausea",
      "prescribed omeprazole 20 mg before breakfast",
      "vital signs remained stable throughout the stay",
      "the patient was diagnosed with cellulitis of the leg",
      "patient",
      "the the the the",
      "hypertension",
      "the patient was diagnosed with hyperlipidemia after presenting with elevated cholesterol on screening",
      "the patient has chronic copd exacerbation and congestive heart failure",
  };
  return s;
}

void make_allergy_record(AllergyRecord& rec, const std::string& allergen, const std::vector<std::string>& drugs) {
  rec.allergy = Row{{"allergen", Value{allergen}}};
  rec.meds.clear();
  for (const auto& d : drugs) rec.meds.push_back(Row{{"drug_name", Value{d}}});
  rec.view = ehrsynth::RecordView{};
  rec.view.record_id = "visit-1";
  rec.view.allergies = {&rec.allergy};
  for (const auto& m : rec.meds) rec.view.medications.push_back(&m);
}

const std::vector<HandPair>& coherence_hand_pairs() {
  static const std::vector<HandPair> pairs{
    {"patient reports chest pain", "chest pain started yesterday", 2, 4, 4},
    {"fever and cough", "fever and cough", 3, 3, 3},
    {"fever", "rash", 0, 1, 1},
    {"the patient has hypertension", "the patient takes lisinopril", 2, 4, 4},
    {"Blood pressure 150/95 mmHg", "blood pressure is high", 2, 5, 4},
    {"the the the patient", "patient", 1, 2, 1},
    {"no known allergies", "allergies: none known", 2, 3, 3},
    {"chronic kidney disease stage 3", "kidney function declining", 1, 5, 3},
    {"appendectomy in 2010", "appendectomy 2010 uncomplicated", 2, 3, 3},
    {"family history of diabetes", "diagnosed with type 2 diabetes", 1, 4, 5},
    {"Started amoxicillin", "amoxicillin 500 mg", 1, 2, 3},
    {"heart rate 110 bpm", "tachycardia noted", 0, 4, 2},
    {"admitted for pneumonia", "pneumonia treated with antibiotics", 1, 3, 4},
    {"a b c d e", "a b c d e f g h", 5, 5, 8},
    {"x-ray shows no fracture", "no fracture on x ray", 4, 5, 5},
    {"Insulin, metformin; diet.", "diet and insulin", 2, 3, 3},
    {"MRI BRAIN NORMAL", "brain mri normal", 3, 3, 3},
    {"one two three", "four five six seven", 0, 3, 4},
    {"pain pain pain", "pain relief", 1, 1, 2},
    {"sepsis suspected lactate 4", "lactate elevated 4 mmol", 2, 4, 4},
  };
  return pairs;
}

std::optional<std::string> pg_server_url() {
  const char* v = std::getenv("EHRSYNTH_TEST_PG_URL");
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::string fresh_database(const std::string& name) {
  const auto server = pg_server_url();
  if (!server) throw std::runtime_error("EHRSYNTH_TEST_PG_URL is not set");
  ehrsynth::execute_sql(*server + "/postgres", "DROP DATABASE IF EXISTS " + name);
  ehrsynth::execute_sql(*server + "/postgres", "CREATE DATABASE " + name);
  return *server + "/" + name;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures

namespace fixtures {

CommandResult run_command(const std::string& command) {
  CommandResult r;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int raw = ::pclose(pipe);
  if (raw != -1 && WIFEXITED(raw)) r.status = WEXITSTATUS(raw);
  return r;
}

}  // namespace fixtures
