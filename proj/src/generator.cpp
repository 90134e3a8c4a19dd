#include "ehrsynth/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "ehrsynth/catalog.hpp"
#include "ehrsynth/errors.hpp"
#include "ehrsynth/rng.hpp"
#include "ehrsynth/text.hpp"

namespace ehrsynth {

namespace {

// Civil-date arithmetic (days since 1970-01-01).
long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u", y + (m <= 2), m, d);
  return buf;
}

long parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 1, d = 1;
  if (std::sscanf(iso.c_str(), "%d-%u-%u", &y, &m, &d) != 3) throw ConfigError("invalid date '" + iso + "'");
  return days_from_civil(y, m, d);
}

std::string timestamp(const std::string& date, Rng& rng, int min_hour = 7, int max_hour = 19) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s %02d:%02d:00", date.c_str(), static_cast<int>(rng.uniform_int(min_hour, max_hour)),
                static_cast<int>(rng.uniform_int(0, 59)));
  return buf;
}

std::string age_band(int age) {
  if (age < 18) return "pediatric";
  if (age < 65) return "adult";
  return "geriatric";
}

Value typed_from_string(const ColumnDef& column, const std::string& s) {
  switch (column.kind) {
    case ColumnKind::integer: return static_cast<std::int64_t>(std::stoll(s));
    case ColumnKind::decimal: return std::stod(s);
    case ColumnKind::boolean: return s == "true";
    default: return s;
  }
}

bool is_key_column(const TableDef& t, const ColumnDef& c) {
  return c.name == t.primary_key || t.foreign_key(c.name) != nullptr;
}

// Row under construction plus what its descendants inherit.
struct Scope {
  PromptContext text;                                 // prompt-visible values
  std::map<std::string, std::int64_t, std::less<>> keys;  // id columns for FK resolution
};

struct GeneratedTable {
  std::vector<Row>* rows = nullptr;
  std::vector<Scope> scopes;  // parallel to rows
};

class BundleBuilder {
 public:
  BundleBuilder(const SchemaDef& schema, const TemplateSet& templates, GenerationBackend& backend,
                const GenerationConfig& config, std::uint64_t seed, TableRows& rows, std::vector<Provenance>& prov,
                const TableRows* reference)
      : schema_(schema),
        templates_(templates),
        backend_(backend),
        config_(config),
        seed_(seed),
        rng_(seed),
        rows_(rows),
        provenance_(prov),
        reference_(reference) {}

  Scope base;
  std::int64_t key_base = 0;  // patient_id * stride, 0 for reference data
  long patient_index = -1;

  void generate_table(const std::string& table_name) {
    const TableDef& table = *schema_.table(table_name);
    const RowPlan plan = plan_for(table_name);
    auto tmpl_it = templates_.find(table_name);
    if (tmpl_it == templates_.end())
      throw GenerationFailed(table_name, "no prompt template for table", patient_index);
    const PromptTemplate& tmpl = tmpl_it->second;
    const OutputSpec spec = make_output_spec(table, tmpl.output_fields);
    check_coverage(table, plan, tmpl);

    auto& out_rows = rows_[table_name];
    auto& out_scopes = scopes_[table_name];

    // Parent groups: one per parent row, or a single group scoped to `base`.
    std::vector<const Scope*> parents;
    std::vector<const Row*> parent_rows;
    if (plan.parent.empty()) {
      parents.push_back(&base);
      parent_rows.push_back(nullptr);
    } else {
      auto it = scopes_.find(plan.parent);
      if (it == scopes_.end())
        throw GenerationFailed(table_name, "parent table '" + plan.parent + "' not generated yet", patient_index);
      const auto& prow = rows_[plan.parent];
      for (std::size_t i = 0; i < it->second.size(); ++i) {
        parents.push_back(&it->second[i]);
        parent_rows.push_back(&prow[i]);
      }
    }

    for (std::size_t pi = 0; pi < parents.size(); ++pi) {
      const Scope& parent = *parents[pi];
      if (!plan.when_column.empty()) {
        const Value* v = parent_rows[pi] ? find_cell(*parent_rows[pi], plan.when_column) : nullptr;
        if (!v || to_display(*v) != plan.when_value) continue;
      }
      const bool forced = plan.ensure_first && pi == 0;
      if (!forced && plan.probability < 1.0 && !rng_.bernoulli(plan.probability)) continue;
      const int count = static_cast<int>(rng_.uniform_int(plan.min_count, std::max(plan.min_count, plan.max_count)));
      std::vector<std::string> group_values;  // e.g. medications already in this plan
      for (int j = 0; j < count; ++j) {
        Scope scope = parent;
        scope.text["ordinal"] = std::to_string(j + 1);
        if (table_name == "medications") scope.text["current_medications"] = group_values.empty() ? "none" : join(group_values, ", ");
        plan_hook(table_name, j, pi, scope);

        const std::int64_t key = next_key(table_name);
        Row row;
        row[table.primary_key] = key;
        resolve_foreign_keys(table, plan, parent, scope, row);
        for (const auto& [column, ctx_key] : plan.planned) {
          const ColumnDef* c = table.column(column);
          auto it = scope.text.find(ctx_key);
          if (!c) continue;
          if (it == scope.text.end())
            throw GenerationFailed(table_name, "planned value '" + ctx_key + "' unavailable", patient_index);
          row[column] = typed_from_string(*c, it->second);
        }

        if (!spec.empty()) {
          PromptContext prompt_ctx = scope.text;
          const std::string prompt = render_prompt(tmpl, spec, prompt_ctx);
          const std::uint64_t row_seed = Rng::mix(seed_ ^ Rng::hash(table_name)) + static_cast<std::uint64_t>(key);
          int attempts = 0;
          std::string last_error;
          bool ok = false;
          for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
            ++attempts;
            try {
              const std::string completion = backend_.complete(prompt, row_seed + static_cast<std::uint64_t>(attempt), config_.max_len);
              Row fields = parse_structured_output(completion, spec);
              for (auto& [k, v] : fields) row[k] = std::move(v);
              ok = true;
              provenance_.push_back(Provenance{table_name, key, backend_.id(), row_seed + static_cast<std::uint64_t>(attempt), attempts});
              break;
            } catch (const ParseError& e) {
              last_error = e.what();
            } catch (const TransportError& e) {
              last_error = e.what();
            }
          }
          if (!ok)
            throw GenerationFailed(table_name, "retry limit exhausted after " + std::to_string(attempts) +
                                                   " attempts: " + last_error,
                                   patient_index);
        }
        for (const auto& c : table.columns)
          if (!row.count(c.name)) row[c.name] = std::monostate{};

        // Descendants inherit this row's values.
        for (const auto& c : table.columns) {
          if (is_key_column(table, c)) {
            if (auto id = as_integer(row[c.name])) scope.keys[c.name] = *id;
          } else if (!is_null(row[c.name])) {
            scope.text[c.name] = to_display(row[c.name]);
          }
        }
        if (table_name == "departments") scope.text["department_name"] = as_text(row["name"]);
        if (table_name == "wards") scope.text["ward_name"] = as_text(row["name"]);
        if (table_name == "medications") group_values.push_back(as_text(row["drug_name"]));
        after_row(table_name, row);

        out_rows.push_back(std::move(row));
        out_scopes.push_back(std::move(scope));
      }
    }
  }

 private:
  RowPlan plan_for(const std::string& table) const {
    auto it = config_.plans.find(table);
    if (it != config_.plans.end()) return it->second;
    return RowPlan{};
  }

  void check_coverage(const TableDef& table, const RowPlan& plan, const PromptTemplate& tmpl) const {
    for (const auto& c : table.columns) {
      if (is_key_column(table, c) || c.nullable || plan.planned.count(c.name)) continue;
      if (std::find(tmpl.output_fields.begin(), tmpl.output_fields.end(), c.name) != tmpl.output_fields.end()) continue;
      throw GenerationFailed(table.name, "column '" + c.name + "' is neither planned nor requested from the backend",
                             patient_index);
    }
  }

  std::int64_t next_key(const std::string& table) {
    if (table == kPatientTable && key_base > 0) return key_base / kStride;
    return key_base + (++counters_[table]);
  }

  const std::vector<Row>* lookup_rows(const std::string& table) const {
    if (reference_) {
      auto it = reference_->find(table);
      if (it != reference_->end()) return &it->second;
    }
    auto it = rows_.find(table);
    if (it != rows_.end()) return &it->second;
    return nullptr;
  }

  void resolve_foreign_keys(const TableDef& table, const RowPlan& plan, const Scope& parent, Scope& scope, Row& row) {
    for (const auto& fk : table.foreign_keys) {
      if (!plan.parent.empty() && fk.target_table == plan.parent) {
        auto it = parent.keys.find(schema_.table(plan.parent)->primary_key);
        if (it != parent.keys.end()) {
          row[fk.column] = it->second;
          continue;
        }
      }
      if (auto it = scope.keys.find(fk.column); it != scope.keys.end()) {
        row[fk.column] = it->second;
        continue;
      }
      const std::vector<Row>* candidates = lookup_rows(fk.target_table);
      if (!candidates || candidates->empty()) {
        const ColumnDef* c = table.column(fk.column);
        if (c && c->nullable) {
          row[fk.column] = std::monostate{};
          continue;
        }
        throw GenerationFailed(table.name, "no rows available in '" + fk.target_table + "' for " + fk.column,
                               patient_index);
      }
      // Prefer rows in the same department, and clinicians for staff links.
      std::vector<const Row*> pool;
      for (const auto& r : *candidates) pool.push_back(&r);
      auto narrow = [&](auto pred) {
        std::vector<const Row*> kept;
        for (const Row* r : pool)
          if (pred(*r)) kept.push_back(r);
        if (!kept.empty()) pool = std::move(kept);
      };
      if (auto dept = scope.keys.find("department_id"); dept != scope.keys.end()) {
        narrow([&](const Row& r) {
          const Value* v = find_cell(r, "department_id");
          return v && as_integer(*v) == dept->second;
        });
      }
      if (fk.target_table == "staff") {
        narrow([](const Row& r) {
          const Value* v = find_cell(r, "role");
          return v && (as_text(*v) == "physician" || as_text(*v) == "surgeon");
        });
      }
      const Row& chosen = *pool[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
      row[fk.column] = chosen.at(fk.target_column);
    }
  }

  // Generator-side planning for tables whose values must not come from the
  // backend: demographics-driven dates, visit condition/type/department.
  void plan_hook(const std::string& table, int ordinal, std::size_t parent_index, Scope& scope) {
    (void)parent_index;
    if (table == "departments") {
      const auto& names = department_names();
      scope.text["department_name"] = names[static_cast<std::size_t>(ordinal) % names.size()];
    } else if (table == "hospital_visits") {
      plan_visit(ordinal, scope);
    } else if (table == "immunizations") {
      scope.text["immunization_date"] = civil_from_days(parse_date(config_.start_date) - rng_.uniform_int(30, 3000));
    } else if (table == "medical_histories") {
      scope.text["history_date"] = civil_from_days(parse_date(config_.start_date) - rng_.uniform_int(1, 60));
    } else if (table == "appointments") {
      const auto day = civil_from_days(parse_date(config_.start_date) + rng_.uniform_int(0, 540));
      scope.text["appointment_time"] = timestamp(day, rng_, 8, 17);
    }
    if (auto it = scope.text.find("visit_date"); it != scope.text.end() && table != "hospital_visits") {
      scope.text["event_timestamp"] = timestamp(it->second, rng_);
    }
  }

  void plan_visit(int ordinal, Scope& scope) {
    const int age = std::stoi(scope.text.at("age"));
    const auto band = age_band(age);
    const auto& catalog = condition_catalog();
    std::vector<double> weights;
    for (const auto& c : catalog)
      weights.push_back(band == "pediatric" ? c.weight_pediatric : band == "adult" ? c.weight_adult : c.weight_geriatric);
    const auto& cond = catalog[rng_.weighted_index(weights)];

    std::string visit_type;
    if (ordinal == 0) {
      visit_type = "inpatient";
    } else {
      static const std::vector<std::string> kTypes{"outpatient", "emergency", "inpatient"};
      visit_type = kTypes[rng_.weighted_index(std::vector<double>{0.45, 0.25, 0.30})];
    }
    last_visit_day_ = (ordinal == 0 ? parse_date(config_.start_date) + rng_.uniform_int(0, 120)
                                    : last_visit_day_ + rng_.uniform_int(10, 90));
    const auto visit_date = civil_from_days(last_visit_day_);

    std::string department = cond.department;
    if (band == "pediatric") department = "pediatrics";
    else if (band == "geriatric" && rng_.bernoulli(0.3)) department = "geriatrics";
    if (visit_type == "emergency") department = "emergency medicine";

    scope.text["condition"] = cond.name;
    scope.text["visit_type"] = visit_type;
    scope.text["visit_date"] = visit_date;
    scope.text["discharge_date"] = civil_from_days(last_visit_day_ + (visit_type == "inpatient" ? rng_.uniform_int(1, 7) : 0));
    scope.text["department_name"] = department;
    if (const std::vector<Row>* depts = lookup_rows("departments")) {
      for (const auto& d : *depts) {
        if (const Value* n = find_cell(d, "name"); n && as_text(*n) == department) {
          scope.keys["department_id"] = *as_integer(d.at("department_id"));
          break;
        }
      }
    }
  }

  // Patient-level facts later prompts depend on.
  void after_row(const std::string& table, const Row& row) {
    if (table == "allergies") {
      allergies_.push_back(as_text(row.at("allergen")));
      base_update("allergies", join(allergies_, ", "));
    } else if (table == "medical_histories") {
      base_update("chronic_conditions", as_text(row.at("chronic_conditions")));
    } else if (table == kPatientTable) {
      base_update("first_name", as_text(row.at("first_name")));
      base_update("last_name", as_text(row.at("last_name")));
    }
  }

  void base_update(const std::string& key, const std::string& value) {
    base.text[key] = value;
    // Scopes already stored keep their snapshot; later tables start from
    // parents whose scope predates the update, so refresh them too.
    for (auto& [_, scopes] : scopes_)
      for (auto& s : scopes) s.text[key] = value;
  }

  static constexpr std::int64_t kStride = 100000;

  const SchemaDef& schema_;
  const TemplateSet& templates_;
  GenerationBackend& backend_;
  const GenerationConfig& config_;
  std::uint64_t seed_;
  Rng rng_;
  TableRows& rows_;
  std::vector<Provenance>& provenance_;
  const TableRows* reference_;
  std::map<std::string, std::vector<Scope>, std::less<>> scopes_;
  std::map<std::string, std::int64_t, std::less<>> counters_;
  std::vector<std::string> allergies_;
  long last_visit_day_ = 0;

 public:
  static constexpr std::int64_t stride() { return kStride; }
};

}  // namespace

Demographics sample_demographics(const DiversityParams& params, Rng& rng) {
  Demographics d;
  std::vector<double> w;
  for (const auto& b : params.age_bands) w.push_back(b.weight);
  const auto& band = params.age_bands.at(rng.weighted_index(w));
  d.age = static_cast<int>(rng.uniform_int(band.min_age, band.max_age));
  w.clear();
  for (const auto& g : params.genders) w.push_back(g.weight);
  d.gender = params.genders.at(rng.weighted_index(w)).value;
  w.clear();
  for (const auto& e : params.ethnicities) w.push_back(e.weight);
  d.ethnicity = params.ethnicities.at(rng.weighted_index(w)).value;
  w.clear();
  for (const auto& p : params.places) w.push_back(p.weight);
  const auto& place = params.places.at(rng.weighted_index(w));
  d.city = place.city;
  d.state = place.state;
  return d;
}

GenerationConfig default_generation_config() {
  GenerationConfig c;
  auto& p = c.plans;
  const int n_departments = static_cast<int>(department_names().size());
  p["departments"] = RowPlan{"", n_departments, n_departments, 1.0, false, "", "", {{"name", "department_name"}}};
  p["wards"] = RowPlan{"departments", 2, 2, 1.0, false, "", "", {}};
  p["beds"] = RowPlan{"wards", 4, 4, 1.0, false, "", "", {}};
  p["staff"] = RowPlan{"departments", 3, 4, 1.0, false, "", "", {}};

  p["patient_details"] = RowPlan{"", 1, 1, 1.0, false, "", "",
                                 {{"date_of_birth", "date_of_birth"},
                                  {"age", "age"},
                                  {"gender", "gender"},
                                  {"ethnicity", "ethnicity"},
                                  {"city", "city"},
                                  {"state", "state"}}};
  p["emergency_contacts"] = RowPlan{"", 1, 2, 1.0, false, "", "", {}};
  p["immunizations"] =
      RowPlan{"", 1, 4, 1.0, false, "", "", {{"administered_on", "immunization_date"}, {"dose_number", "ordinal"}}};
  p["allergies"] = RowPlan{"", 1, 2, 1.0, false, "", "", {}};
  p["medical_histories"] = RowPlan{"", 1, 1, 1.0, false, "", "", {{"recorded_on", "history_date"}}};
  p["appointments"] = RowPlan{"", 1, 3, 1.0, false, "", "", {{"scheduled_at", "appointment_time"}}};
  p["hospital_visits"] =
      RowPlan{"", 3, 8, 1.0, false, "", "", {{"visit_date", "visit_date"}, {"visit_type", "visit_type"}}};
  p["vital_signs"] = RowPlan{"hospital_visits", 1, 1, 1.0, false, "", "", {{"recorded_at", "event_timestamp"}}};
  p["test_results"] = RowPlan{"hospital_visits", 1, 1, 1.0, false, "", "", {{"collected_at", "event_timestamp"}}};
  p["diagnoses"] = RowPlan{"hospital_visits", 1, 1, 1.0, false, "", "",
                           {{"condition", "condition"}, {"diagnosed_on", "visit_date"}}};
  p["admissions"] = RowPlan{"hospital_visits", 1, 1, 1.0, false, "visit_type", "inpatient",
                            {{"admitted_at", "event_timestamp"}}};
  p["treatment_plans"] = RowPlan{"diagnoses", 1, 1, 1.0, false, "", "", {{"start_date", "visit_date"}}};
  p["medications"] = RowPlan{"treatment_plans", 1, 2, 1.0, false, "", "", {}};
  p["clinical_notes"] = RowPlan{"hospital_visits", 1, 1, 1.0, false, "", "",
                                {{"patient_age", "age"},
                                 {"patient_gender", "gender"},
                                 {"patient_ethnicity", "ethnicity"},
                                 {"written_at", "event_timestamp"}}};
  p["visit_logs"] = RowPlan{"hospital_visits", 1, 3, 1.0, false, "", "", {{"logged_at", "event_timestamp"}}};
  p["discharge_summaries"] = RowPlan{"admissions", 1, 1, 1.0, false, "", "", {{"discharged_on", "discharge_date"}}};
  p["referrals"] = RowPlan{"hospital_visits", 1, 1, 0.35, true, "", "", {}};
  p["billing"] = RowPlan{"hospital_visits", 1, 1, 1.0, false, "", "", {{"billed_on", "discharge_date"}}};
  return c;
}

TemplateSet default_templates(const SchemaDef& schema) {
  static const std::map<std::string, std::string, std::less<>> kText{
      {"staff", "Create one staff member who works in the {department_name} department of a general hospital."},
      {"departments", "Describe the {department_name} department of a general hospital."},
      {"wards", "Describe ward {ordinal} of the {department_name} department."},
      {"beds", "Describe bed {ordinal} in {ward_name} of the {department_name} department."},
      {"patient_details",
       "Create a realistic synthetic patient: a {age}-year-old {gender} patient of {ethnicity} ethnicity living in "
       "{city}, {state}."},
      {"emergency_contacts", "Create an emergency contact for {first_name} {last_name}, a {age}-year-old patient."},
      {"vital_signs",
       "Record the vital signs of a {age}-year-old {gender} patient presenting with {reason} (working diagnosis: "
       "{condition}). Include the blood pressure severity classification."},
      {"immunizations", "Record one immunization given to a {age}-year-old patient."},
      {"allergies", "Record one documented allergy for a {age}-year-old patient."},
      {"medical_histories",
       "Summarize the medical history of a {age}-year-old {gender} patient as one sentence per field, each about "
       "the patient."},
      {"appointments", "Create an outpatient appointment for a {age}-year-old patient."},
      {"hospital_visits",
       "Describe the presenting complaint for a {visit_type} visit on {visit_date} by a {age}-year-old {gender} "
       "patient who will be diagnosed with {condition}."},
      {"test_results",
       "Report a basic metabolic panel and blood count for a {age}-year-old {gender} patient with {condition}."},
      {"diagnoses", "Give the diagnosis for a patient presenting with {reason}; the confirmed diagnosis is {condition}."},
      {"admissions", "Write the admission reason and admission note for a patient admitted with {reason} due to {condition}."},
      {"treatment_plans", "Write a treatment plan for {condition} in a {age}-year-old patient."},
      {"medications",
       "Prescribe one medication for {condition} in a {age}-year-old patient. Known allergies: {allergies}. Current "
       "medications: {current_medications}. Never prescribe a drug the patient is allergic to."},
      {"clinical_notes",
       "Write a one-line clinical note for a {age}-year-old {gender} patient seen for {reason}, covering symptoms, "
       "assessment ({condition}), and plan."},
      {"visit_logs", "Log one event from the {visit_type} visit on {visit_date}."},
      {"discharge_summaries",
       "Write a discharge summary for a patient admitted for {condition} under {department_name}."},
      {"referrals", "Write a referral for further care of a patient with {condition}."},
      {"billing", "Create a bill for a {visit_type} visit on {visit_date}."},
  };
  const auto config = default_generation_config();
  TemplateSet set;
  for (const auto& table : schema.tables) {
    PromptTemplate t;
    t.table = table.name;
    auto it = kText.find(table.name);
    t.text = it != kText.end() ? it->second : "Create one realistic row for the " + table.name + " table.";
    const auto plan_it = config.plans.find(table.name);
    for (const auto& c : table.columns) {
      if (is_key_column(table, c)) continue;
      if (plan_it != config.plans.end() && plan_it->second.planned.count(c.name)) continue;
      t.output_fields.push_back(c.name);
    }
    set[table.name] = std::move(t);
  }
  return set;
}

std::vector<std::string> reference_tables(const SchemaDef& schema) {
  const auto patient_facing = schema.tables_reaching(kPatientTable);
  std::vector<std::string> out;
  for (const auto& name : topological_order(schema))
    if (std::find(patient_facing.begin(), patient_facing.end(), name) == patient_facing.end()) out.push_back(name);
  return out;
}

ReferenceData generate_reference(const SchemaDef& schema, const TemplateSet& templates, GenerationBackend& backend,
                                 std::uint64_t seed, const GenerationConfig& config) {
  ReferenceData ref;
  BundleBuilder builder(schema, templates, backend, config, Rng::mix(seed ^ 0x5eedULL), ref.rows, ref.provenance,
                        nullptr);
  for (const auto& table : reference_tables(schema)) builder.generate_table(table);
  return ref;
}

PatientBundle generate_bundle(const SchemaDef& schema, const TemplateSet& templates, GenerationBackend& backend,
                              std::uint64_t patient_seed, std::int64_t patient_id, const ReferenceData& reference,
                              const GenerationConfig& config) {
  PatientBundle bundle;
  bundle.patient_id = patient_id;
  bundle.seed = patient_seed;
  BundleBuilder builder(schema, templates, backend, config, patient_seed, bundle.rows, bundle.provenance,
                        &reference.rows);
  builder.key_base = patient_id * BundleBuilder::stride();
  builder.patient_index = static_cast<long>(patient_id) - 1;

  Rng demo_rng(Rng::mix(patient_seed ^ 0xde70ULL));
  const Demographics d = sample_demographics(config.diversity, demo_rng);
  auto& t = builder.base.text;
  t["age"] = std::to_string(d.age);
  t["age_band"] = age_band(d.age);
  t["gender"] = d.gender;
  t["ethnicity"] = d.ethnicity;
  t["city"] = d.city;
  t["state"] = d.state;
  t["allergies"] = "none recorded";
  t["chronic_conditions"] = "none recorded";
  {
    // Birthday chosen so the age holds on the reference date.
    int ref_year = 0;
    unsigned ref_month = 1, ref_dom = 1;
    std::sscanf(config.reference_date.c_str(), "%d-%u-%u", &ref_year, &ref_month, &ref_dom);
    const auto month = static_cast<unsigned>(demo_rng.uniform_int(1, 12));
    const auto day = static_cast<unsigned>(demo_rng.uniform_int(1, 28));
    int year = ref_year - d.age;
    if (month > ref_month || (month == ref_month && day > ref_dom)) year -= 1;
    t["date_of_birth"] = civil_from_days(days_from_civil(year, month, day));
  }
  builder.base.keys["patient_id"] = patient_id;

  const auto patient_facing = schema.tables_reaching(kPatientTable);
  if (patient_facing.empty()) throw SchemaError("schema has no patient_details table");
  for (const auto& table : topological_order(schema)) {
    if (std::find(patient_facing.begin(), patient_facing.end(), table) == patient_facing.end()) continue;
    if (table == kPatientTable) {
      builder.base.keys.erase("patient_id");
      builder.generate_table(table);
      builder.base.keys["patient_id"] = patient_id;
    } else {
      builder.generate_table(table);
    }
  }
  return bundle;
}

Cohort generate_cohort(const SchemaDef& schema, const TemplateSet& templates, GenerationBackend& backend, int n,
                       std::uint64_t base_seed, const GenerationConfig& config) {
  if (n < 1) throw ConfigError("cohort size must be at least 1");
  schema.validate();
  Cohort cohort;
  cohort.base_seed = base_seed;
  cohort.backend = backend.id();
  cohort.reference = generate_reference(schema, templates, backend, base_seed, config);
  cohort.patients.resize(static_cast<std::size_t>(n));

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  int first_error_index = n;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        cohort.patients[static_cast<std::size_t>(i)] =
            generate_bundle(schema, templates, backend, base_seed + static_cast<std::uint64_t>(i), i + 1,
                            cohort.reference, config);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(n)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  return cohort;
}

TableRows flatten(const Cohort& cohort) {
  TableRows out = cohort.reference.rows;
  for (const auto& p : cohort.patients)
    for (const auto& [table, rows] : p.rows) {
      auto& dst = out[table];
      dst.insert(dst.end(), rows.begin(), rows.end());
    }
  return out;
}

}  // namespace ehrsynth
