#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <set>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/schema.hpp"
#include "ehrsynth/schema_io.hpp"

using namespace ehrsynth;

namespace {

const std::vector<std::string> kTables{
    "staff",          "departments",  "wards",           "beds",         "patient_details",  "emergency_contacts",
    "vital_signs",    "immunizations", "allergies",      "medical_histories", "appointments", "hospital_visits",
    "test_results",   "diagnoses",    "admissions",      "treatment_plans", "medications",   "clinical_notes",
    "visit_logs",     "discharge_summaries", "referrals", "billing"};

std::size_t position(const std::vector<std::string>& order, const std::string& name) {
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), name) - order.begin());
}

TableDef simple_table(std::string name, std::vector<ForeignKey> fks = {}) {
  TableDef t;
  t.name = std::move(name);
  t.primary_key = "id";
  t.columns.push_back(ColumnDef{"id", ColumnKind::integer, false, {}, std::nullopt});
  for (const auto& fk : fks) t.columns.push_back(ColumnDef{fk.column, ColumnKind::integer, true, {}, std::nullopt});
  t.foreign_keys = std::move(fks);
  return t;
}

}  // namespace

TEST(Schema, DefaultHasTheTwentyTwoTables) {
  const auto s = build_default_schema();
  ASSERT_EQ(s.tables.size(), 22u);
  std::set<std::string> names;
  for (const auto& t : s.tables) names.insert(t.name);
  EXPECT_EQ(names, std::set<std::string>(kTables.begin(), kTables.end()));
  EXPECT_NO_THROW(s.validate());
}

TEST(Schema, AllergiesReferencePatientDetails) {
  const auto s = build_default_schema();
  const auto* fk = s.table("allergies")->foreign_key("patient_id");
  ASSERT_NE(fk, nullptr);
  EXPECT_EQ(fk->target_table, "patient_details");
}

TEST(Schema, DiastolicHardMinimumIsPositive) {
  const auto s = build_default_schema();
  const auto* c = s.table("vital_signs")->column("diastolic_bp");
  ASSERT_TRUE(c && c->range);
  EXPECT_GT(c->range->hard_min, 0.0);
}

TEST(Schema, PatientFacingTablesReachPatientDetails) {
  const auto s = build_default_schema();
  const auto reaching = s.tables_reaching(kPatientTable);
  const std::set<std::string> reach(reaching.begin(), reaching.end());
  for (const char* t : {"emergency_contacts", "vital_signs", "immunizations", "allergies", "medical_histories",
                        "appointments", "hospital_visits", "test_results", "diagnoses", "admissions",
                        "treatment_plans", "medications", "clinical_notes", "visit_logs", "discharge_summaries",
                        "referrals", "billing"})
    EXPECT_TRUE(reach.count(t)) << t;
  for (const char* t : {"staff", "departments", "wards", "beds"}) EXPECT_FALSE(reach.count(t)) << t;
}

TEST(Schema, ClinicalEventsLinkToVisitsOrAdmissions) {
  const auto s = build_default_schema();
  for (const char* t : {"vital_signs", "test_results", "diagnoses", "admissions", "clinical_notes", "visit_logs",
                        "referrals", "billing"})
    EXPECT_NE(s.table(t)->foreign_key("visit_id"), nullptr) << t;
  EXPECT_NE(s.table("discharge_summaries")->foreign_key("admission_id"), nullptr);
}

TEST(Schema, TopologicalOrderRespectsEveryEdge) {
  const auto s = build_default_schema();
  const auto order = topological_order(s);
  ASSERT_EQ(order.size(), 22u);
  for (const auto& t : s.tables)
    for (const auto& fk : t.foreign_keys) {
      if (fk.target_table == t.name) continue;
      EXPECT_LT(position(order, fk.target_table), position(order, t.name)) << t.name << " -> " << fk.target_table;
    }
  EXPECT_LT(position(order, "patient_details"), position(order, "emergency_contacts"));
}

TEST(Schema, SingleEdgeOrder) {
  SchemaDef s;
  s.tables.push_back(simple_table("a", {{"b_id", "b", "id"}}));
  s.tables.push_back(simple_table("b"));
  EXPECT_EQ(topological_order(s), (std::vector<std::string>{"b", "a"}));
}

TEST(Schema, TwoTableCycleIsRejected) {
  SchemaDef s;
  s.tables.push_back(simple_table("a", {{"b_id", "b", "id"}}));
  s.tables.push_back(simple_table("b", {{"a_id", "a", "id"}}));
  EXPECT_THROW(topological_order(s), CycleError);
  EXPECT_THROW(emit_ddl(s), CycleError);
}

TEST(Schema, ValidateCatchesBrokenReferences) {
  SchemaDef s;
  s.tables.push_back(simple_table("a", {{"b_id", "missing", "id"}}));
  EXPECT_THROW(s.validate(), SchemaError);
  SchemaDef dup;
  dup.tables.push_back(simple_table("a"));
  dup.tables.push_back(simple_table("a"));
  EXPECT_THROW(dup.validate(), SchemaError);
  SchemaDef bad_range;
  bad_range.tables.push_back(simple_table("a"));
  bad_range.tables[0].columns[0].range = PhysiologicRange{5, 1, 10, 20, ""};
  EXPECT_THROW(bad_range.validate(), SchemaError);
}

TEST(Schema, DdlIsDeterministicAndComplete) {
  const auto s = build_default_schema();
  const auto t0 = std::chrono::steady_clock::now();
  const auto a = emit_ddl(s);
  const auto b = emit_ddl(build_default_schema());
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
  EXPECT_EQ(a, b);
  std::size_t creates = 0;
  for (auto p = a.find("CREATE TABLE"); p != std::string::npos; p = a.find("CREATE TABLE", p + 1)) ++creates;
  EXPECT_EQ(creates, 22u);
  EXPECT_NE(a.find("PRIMARY KEY"), std::string::npos);
  EXPECT_NE(a.find("FOREIGN KEY"), std::string::npos);
  EXPECT_EQ(emit_ddl(SchemaDef{}), "");
}

TEST(Schema, DdlCreatesTargetsFirst) {
  const auto ddl = emit_ddl(build_default_schema());
  EXPECT_LT(ddl.find("CREATE TABLE patient_details"), ddl.find("CREATE TABLE emergency_contacts"));
  EXPECT_LT(ddl.find("CREATE TABLE hospital_visits"), ddl.find("CREATE TABLE vital_signs"));
}

namespace {

Row row_for(const TableDef& t) {
  Row r;
  for (const auto& c : t.columns) {
    if (c.range) r[c.name] = (c.range->soft_min + c.range->soft_max) / 2.0;
    else r[c.name] = std::monostate{};
  }
  return r;
}

}  // namespace

TEST(Schema, RangeChecks) {
  const auto s = build_default_schema();
  const auto& labs = *s.table("test_results");
  Row r = row_for(labs);
  EXPECT_TRUE(check_value_ranges(labs, r).empty());

  r["potassium_mmol_l"] = 15.0;
  auto v = check_value_ranges(labs, r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].column, "potassium_mmol_l");
  EXPECT_EQ(v[0].severity, RangeSeverity::hard);
  EXPECT_EQ(v[0].bound, "hard_max");
  EXPECT_DOUBLE_EQ(v[0].value, 15.0);

  const auto& vitals = *s.table("vital_signs");
  Row vr = row_for(vitals);
  vr["diastolic_bp"] = 0.0;
  v = check_value_ranges(vitals, vr);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].bound, "hard_min");
  EXPECT_EQ(v[0].severity, RangeSeverity::hard);

  vr["diastolic_bp"] = 125.0;  // above soft_max 120, below hard_max 150
  v = check_value_ranges(vitals, vr);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].severity, RangeSeverity::soft);
}

TEST(Schema, RangeCheckRejectsMismatchedRows) {
  const auto s = build_default_schema();
  const auto& labs = *s.table("test_results");
  Row r = row_for(labs);
  r["unexpected"] = 1.0;
  EXPECT_THROW(check_value_ranges(labs, r), SchemaMismatch);
  r = row_for(labs);
  r.erase(r.begin());
  EXPECT_THROW(check_value_ranges(labs, r), SchemaMismatch);
}

TEST(Schema, JsonRoundTrip) {
  const auto s = build_default_schema();
  const auto text = schema_to_json(s);
  const auto back = schema_from_json(text);
  EXPECT_EQ(schema_to_json(back), text);
  EXPECT_EQ(emit_ddl(back), emit_ddl(s));
  EXPECT_THROW(schema_from_json("{\"tables\": 3}"), Error);
}
