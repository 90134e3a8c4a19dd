#include "ehrsynth/schema.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ehrsynth/errors.hpp"

namespace ehrsynth {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::integer: return "integer";
    case ColumnKind::decimal: return "decimal";
    case ColumnKind::text: return "text";
    case ColumnKind::date: return "date";
    case ColumnKind::timestamp: return "timestamp";
    case ColumnKind::boolean: return "boolean";
    case ColumnKind::enumeration: return "enum";
  }
  return "text";
}

ColumnKind column_kind_from_string(std::string_view name) {
  if (name == "integer") return ColumnKind::integer;
  if (name == "decimal") return ColumnKind::decimal;
  if (name == "text") return ColumnKind::text;
  if (name == "date") return ColumnKind::date;
  if (name == "timestamp") return ColumnKind::timestamp;
  if (name == "boolean") return ColumnKind::boolean;
  if (name == "enum") return ColumnKind::enumeration;
  throw SchemaError("unknown column kind '" + std::string(name) + "'");
}

const ColumnDef* TableDef::column(std::string_view column_name) const {
  for (const auto& c : columns)
    if (c.name == column_name) return &c;
  return nullptr;
}

ColumnDef* TableDef::column(std::string_view column_name) {
  for (auto& c : columns)
    if (c.name == column_name) return &c;
  return nullptr;
}

const ForeignKey* TableDef::foreign_key(std::string_view column_name) const {
  for (const auto& fk : foreign_keys)
    if (fk.column == column_name) return &fk;
  return nullptr;
}

const TableDef* SchemaDef::table(std::string_view name) const {
  for (const auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

TableDef* SchemaDef::table(std::string_view name) {
  for (auto& t : tables)
    if (t.name == name) return &t;
  return nullptr;
}

void SchemaDef::validate() const {
  std::set<std::string> table_names;
  for (const auto& t : tables) {
    if (t.name.empty()) throw SchemaError("table with empty name");
    if (!table_names.insert(t.name).second) throw SchemaError("duplicate table '" + t.name + "'");
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (c.name.empty()) throw SchemaError("empty column name in table '" + t.name + "'");
      if (!cols.insert(c.name).second)
        throw SchemaError("duplicate column '" + c.name + "' in table '" + t.name + "'");
      if (c.kind == ColumnKind::enumeration && c.enum_values.empty())
        throw SchemaError("enum column '" + t.name + "." + c.name + "' has no values");
      if (c.range && !c.range->well_ordered())
        throw SchemaError("range for '" + t.name + "." + c.name + "' violates hard_min <= soft_min <= soft_max <= hard_max");
    }
    if (!t.column(t.primary_key))
      throw SchemaError("primary key '" + t.primary_key + "' missing from table '" + t.name + "'");
    for (const auto& fk : t.foreign_keys) {
      if (!t.column(fk.column))
        throw SchemaError("foreign key column '" + fk.column + "' missing from table '" + t.name + "'");
    }
  }
  for (const auto& t : tables) {
    for (const auto& fk : t.foreign_keys) {
      const TableDef* target = table(fk.target_table);
      if (!target) throw SchemaError("foreign key " + t.name + "." + fk.column + " targets unknown table '" + fk.target_table + "'");
      if (!target->column(fk.target_column))
        throw SchemaError("foreign key " + t.name + "." + fk.column + " targets unknown column '" +
                          fk.target_table + "." + fk.target_column + "'");
    }
  }
}

std::vector<std::string> SchemaDef::tables_reaching(std::string_view root) const {
  std::set<std::string, std::less<>> reach;
  if (table(root)) reach.insert(std::string(root));
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& t : tables) {
      if (reach.count(t.name)) continue;
      for (const auto& fk : t.foreign_keys) {
        if (fk.target_table != t.name && reach.count(fk.target_table)) {
          reach.insert(t.name);
          grew = true;
          break;
        }
      }
    }
  }
  std::vector<std::string> out;
  for (const auto& t : tables)
    if (reach.count(t.name)) out.push_back(t.name);
  return out;
}

std::vector<std::string> topological_order(const SchemaDef& schema) {
  const std::size_t n = schema.tables.size();
  std::vector<bool> placed(n, false);
  std::set<std::string, std::less<>> done;
  std::vector<std::string> order;
  order.reserve(n);
  while (order.size() < n) {
    bool progress = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      const auto& t = schema.tables[i];
      const bool ready = std::all_of(t.foreign_keys.begin(), t.foreign_keys.end(), [&](const ForeignKey& fk) {
        return done.count(fk.target_table) > 0;
      });
      if (ready) {
        placed[i] = true;
        done.insert(t.name);
        order.push_back(t.name);
        progress = true;
        break;  // restart scan so ties resolve by declaration order
      }
    }
    if (!progress) {
      std::vector<std::string> stuck;
      for (std::size_t i = 0; i < n; ++i)
        if (!placed[i]) stuck.push_back(schema.tables[i].name);
      std::string msg = "foreign-key graph contains a cycle among:";
      for (const auto& s : stuck) msg += " " + s;
      throw CycleError(msg);
    }
  }
  return order;
}

std::string sql_type(const ColumnDef& column) {
  switch (column.kind) {
    case ColumnKind::integer: return "BIGINT";
    case ColumnKind::decimal: return "DOUBLE PRECISION";
    case ColumnKind::text: return "VARCHAR(4000)";
    case ColumnKind::date: return "DATE";
    case ColumnKind::timestamp: return "TIMESTAMP";
    case ColumnKind::boolean: return "BOOLEAN";
    case ColumnKind::enumeration: return "VARCHAR(64)";
  }
  return "VARCHAR(4000)";
}

namespace {

std::string quote_literal(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

}  // namespace

std::string emit_ddl(const SchemaDef& schema) {
  std::ostringstream out;
  for (const auto& name : topological_order(schema)) {
    const TableDef& t = *schema.table(name);
    out << "CREATE TABLE " << t.name << " (\n";
    std::vector<std::string> lines;
    for (const auto& c : t.columns) {
      std::string line = "  " + c.name + " " + sql_type(c);
      if (!c.nullable || c.name == t.primary_key) line += " NOT NULL";
      if (c.kind == ColumnKind::enumeration) {
        line += " CHECK (" + c.name + " IN (";
        for (std::size_t i = 0; i < c.enum_values.size(); ++i) {
          if (i) line += ", ";
          line += quote_literal(c.enum_values[i]);
        }
        line += "))";
      }
      lines.push_back(std::move(line));
    }
    lines.push_back("  CONSTRAINT pk_" + t.name + " PRIMARY KEY (" + t.primary_key + ")");
    for (const auto& fk : t.foreign_keys) {
      lines.push_back("  CONSTRAINT fk_" + t.name + "_" + fk.column + " FOREIGN KEY (" + fk.column +
                      ") REFERENCES " + fk.target_table + " (" + fk.target_column + ")");
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out << lines[i] << (i + 1 < lines.size() ? ",\n" : "\n");
    }
    out << ");\n\n";
  }
  return out.str();
}

std::vector<RangeViolation> check_value_ranges(const TableDef& table, const Row& row) {
  if (row.size() != table.columns.size())
    throw SchemaMismatch("row for '" + table.name + "' has " + std::to_string(row.size()) + " columns, table has " +
                         std::to_string(table.columns.size()));
  for (const auto& [col, _] : row) {
    if (!table.column(col)) throw SchemaMismatch("column '" + col + "' not in table '" + table.name + "'");
  }
  std::vector<RangeViolation> out;
  for (const auto& c : table.columns) {
    if (!c.range) continue;
    const auto v = as_number(row.find(c.name)->second);
    if (!v) continue;
    const auto& r = *c.range;
    auto add = [&](const char* bound, double limit, RangeSeverity sev) {
      out.push_back(RangeViolation{table.name, c.name, *v, bound, limit, sev});
    };
    if (*v < r.hard_min) add("hard_min", r.hard_min, RangeSeverity::hard);
    else if (*v > r.hard_max) add("hard_max", r.hard_max, RangeSeverity::hard);
    else if (*v < r.soft_min) add("soft_min", r.soft_min, RangeSeverity::soft);
    else if (*v > r.soft_max) add("soft_max", r.soft_max, RangeSeverity::soft);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Default schema

namespace {

struct TableBuilder {
  TableDef def;

  explicit TableBuilder(std::string name, std::string pk) {
    def.name = std::move(name);
    def.primary_key = pk;
    def.columns.push_back(ColumnDef{std::move(pk), ColumnKind::integer, false, {}, std::nullopt});
  }
  TableBuilder& col(std::string name, ColumnKind kind, bool nullable = false) {
    def.columns.push_back(ColumnDef{std::move(name), kind, nullable, {}, std::nullopt});
    return *this;
  }
  TableBuilder& enum_col(std::string name, std::vector<std::string> values) {
    def.columns.push_back(ColumnDef{std::move(name), ColumnKind::enumeration, false, std::move(values), std::nullopt});
    return *this;
  }
  TableBuilder& ranged(std::string name, PhysiologicRange range) {
    def.columns.push_back(ColumnDef{std::move(name), ColumnKind::decimal, false, {}, std::move(range)});
    return *this;
  }
  TableBuilder& fk(std::string name, std::string target, std::string target_col, bool nullable = false) {
    col(name, ColumnKind::integer, nullable);
    def.foreign_keys.push_back(ForeignKey{std::move(name), std::move(target), std::move(target_col)});
    return *this;
  }
  TableBuilder& patient() { return fk("patient_id", "patient_details", "patient_id"); }
  TableBuilder& visit() { return fk("visit_id", "hospital_visits", "visit_id"); }
};

const std::vector<std::string> kGenders{"female", "male", "non_binary", "other"};
const std::vector<std::string> kEthnicities{"asian", "black", "hispanic", "white", "indigenous", "multiracial"};
const std::vector<std::string> kBloodGroups{"A+", "A-", "B+", "B-", "AB+", "AB-", "O+", "O-"};

}  // namespace

SchemaDef build_default_schema() {
  using K = ColumnKind;
  SchemaDef s;

  s.tables.push_back(TableBuilder("staff", "staff_id")
                         .col("first_name", K::text)
                         .col("last_name", K::text)
                         .enum_col("role", {"physician", "nurse", "surgeon", "technician", "pharmacist", "administrator"})
                         .col("specialty", K::text)
                         .fk("department_id", "departments", "department_id")
                         .col("email", K::text)
                         .col("hire_date", K::date)
                         .def);
  s.tables.push_back(TableBuilder("departments", "department_id")
                         .col("name", K::text)
                         .col("floor", K::integer)
                         .col("phone", K::text)
                         .def);
  s.tables.push_back(TableBuilder("wards", "ward_id")
                         .fk("department_id", "departments", "department_id")
                         .col("name", K::text)
                         .col("capacity", K::integer)
                         .def);
  s.tables.push_back(TableBuilder("beds", "bed_id")
                         .fk("ward_id", "wards", "ward_id")
                         .col("bed_number", K::text)
                         .enum_col("bed_type", {"standard", "icu", "pediatric", "maternity"})
                         .def);
  {
    TableBuilder b("patient_details", "patient_id");
    b.col("first_name", K::text)
        .col("last_name", K::text)
        .col("date_of_birth", K::date)
        .col("age", K::integer)
        .enum_col("gender", kGenders)
        .enum_col("ethnicity", kEthnicities)
        .enum_col("blood_group", kBloodGroups)
        .col("city", K::text)
        .col("state", K::text)
        .col("phone", K::text)
        .fk("primary_physician_id", "staff", "staff_id", true);
    b.def.column("age")->range = PhysiologicRange{0, 0, 105, 120, "years"};
    s.tables.push_back(b.def);
  }
  s.tables.push_back(TableBuilder("emergency_contacts", "contact_id")
                         .patient()
                         .col("full_name", K::text)
                         .enum_col("relationship", {"spouse", "parent", "child", "sibling", "friend", "guardian"})
                         .col("phone", K::text)
                         .def);
  s.tables.push_back(TableBuilder("vital_signs", "vital_id")
                         .patient()
                         .visit()
                         .col("recorded_at", K::timestamp)
                         .ranged("systolic_bp", {50, 80, 200, 260, "mmHg"})
                         .ranged("diastolic_bp", {20, 40, 120, 150, "mmHg"})
                         .ranged("heart_rate", {20, 40, 150, 260, "bpm"})
                         .ranged("temperature_c", {30, 35, 40, 44, "C"})
                         .ranged("height_cm", {30, 45, 210, 250, "cm"})
                         .ranged("weight_kg", {0.5, 2, 250, 400, "kg"})
                         .enum_col("severity_class", {"normal", "elevated", "hypertension_stage_1",
                                                      "hypertension_stage_2", "hypertensive_crisis"})
                         .def);
  s.tables.push_back(TableBuilder("immunizations", "immunization_id")
                         .patient()
                         .col("vaccine", K::text)
                         .col("administered_on", K::date)
                         .fk("administered_by", "staff", "staff_id")
                         .col("dose_number", K::integer)
                         .def);
  s.tables.push_back(TableBuilder("allergies", "allergy_id")
                         .patient()
                         .col("allergen", K::text)
                         .col("reaction", K::text)
                         .enum_col("severity", {"mild", "moderate", "severe"})
                         .def);
  s.tables.push_back(TableBuilder("medical_histories", "history_id")
                         .patient()
                         .col("chronic_conditions", K::text)
                         .col("past_surgeries", K::text)
                         .col("family_history", K::text)
                         .col("recorded_on", K::date)
                         .def);
  s.tables.push_back(TableBuilder("appointments", "appointment_id")
                         .patient()
                         .fk("staff_id", "staff", "staff_id")
                         .fk("department_id", "departments", "department_id")
                         .col("scheduled_at", K::timestamp)
                         .enum_col("status", {"scheduled", "completed", "cancelled", "no_show"})
                         .col("purpose", K::text)
                         .def);
  s.tables.push_back(TableBuilder("hospital_visits", "visit_id")
                         .patient()
                         .fk("department_id", "departments", "department_id")
                         .fk("attending_staff_id", "staff", "staff_id")
                         .col("visit_date", K::date)
                         .enum_col("visit_type", {"outpatient", "emergency", "inpatient"})
                         .col("reason", K::text)
                         .def);
  s.tables.push_back(TableBuilder("test_results", "test_id")
                         .patient()
                         .visit()
                         .col("collected_at", K::timestamp)
                         .ranged("potassium_mmol_l", {1.0, 3.0, 6.0, 10.0, "mmol/L"})
                         .ranged("sodium_mmol_l", {100, 125, 155, 180, "mmol/L"})
                         .ranged("glucose_mg_dl", {10, 50, 400, 1500, "mg/dL"})
                         .ranged("hemoglobin_g_dl", {2, 7, 20, 25, "g/dL"})
                         .ranged("wbc_k_ul", {0.1, 2, 30, 200, "10^3/uL"})
                         .col("interpretation", K::text)
                         .def);
  s.tables.push_back(TableBuilder("diagnoses", "diagnosis_id")
                         .patient()
                         .visit()
                         .col("condition", K::text)
                         .col("icd10_code", K::text)
                         .col("description", K::text)
                         .col("diagnosed_on", K::date)
                         .def);
  s.tables.push_back(TableBuilder("admissions", "admission_id")
                         .patient()
                         .visit()
                         .fk("bed_id", "beds", "bed_id")
                         .col("admitted_at", K::timestamp)
                         .col("admission_reason", K::text)
                         .col("admission_note", K::text)
                         .def);
  s.tables.push_back(TableBuilder("treatment_plans", "plan_id")
                         .patient()
                         .fk("diagnosis_id", "diagnoses", "diagnosis_id")
                         .col("topic", K::text)
                         .col("plan_description", K::text)
                         .col("start_date", K::date)
                         .def);
  s.tables.push_back(TableBuilder("medications", "medication_id")
                         .patient()
                         .fk("plan_id", "treatment_plans", "plan_id")
                         .fk("prescribed_by", "staff", "staff_id")
                         .col("drug_name", K::text)
                         .col("dose_mg", K::decimal)
                         .col("frequency", K::text)
                         .col("route", K::text)
                         .def);
  s.tables.push_back(TableBuilder("clinical_notes", "note_id")
                         .patient()
                         .visit()
                         .fk("author_staff_id", "staff", "staff_id")
                         .col("patient_age", K::integer)
                         .enum_col("patient_gender", kGenders)
                         .enum_col("patient_ethnicity", kEthnicities)
                         .col("note_text", K::text)
                         .col("written_at", K::timestamp)
                         .def);
  s.tables.push_back(TableBuilder("visit_logs", "log_id")
                         .patient()
                         .visit()
                         .fk("staff_id", "staff", "staff_id")
                         .col("logged_at", K::timestamp)
                         .col("event", K::text)
                         .def);
  s.tables.push_back(TableBuilder("discharge_summaries", "summary_id")
                         .patient()
                         .fk("admission_id", "admissions", "admission_id")
                         .col("discharged_on", K::date)
                         .col("discharge_diagnosis", K::text)
                         .col("summary_text", K::text)
                         .col("follow_up", K::text)
                         .def);
  s.tables.push_back(TableBuilder("referrals", "referral_id")
                         .patient()
                         .visit()
                         .fk("referring_staff_id", "staff", "staff_id")
                         .fk("target_department_id", "departments", "department_id")
                         .enum_col("urgency", {"routine", "urgent", "emergent"})
                         .col("reason", K::text)
                         .def);
  s.tables.push_back(TableBuilder("billing", "bill_id")
                         .patient()
                         .visit()
                         .col("amount_usd", K::decimal)
                         .col("insurance_provider", K::text)
                         .enum_col("status", {"paid", "pending", "denied"})
                         .col("billed_on", K::date)
                         .def);
  return s;
}

}  // namespace ehrsynth
