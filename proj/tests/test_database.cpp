#include <gtest/gtest.h>

#include "ehrsynth/load.hpp"
#include "ehrsynth/schema.hpp"
#include "fixtures.hpp"

using namespace ehrsynth;

namespace {

std::size_t count_rows(const std::string& url, const std::string& table) {
  const auto rows = query_rows(url, "SELECT COUNT(*) AS n FROM " + table);
  return static_cast<std::size_t>(std::stoull(*rows.at(0).at("n")));
}

}  // namespace

class Database : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!database_support_available()) GTEST_SKIP() << "built without a PostgreSQL client";
    if (!fixtures::pg_server_url()) GTEST_SKIP() << "EHRSYNTH_TEST_PG_URL not set";
  }
};

TEST_F(Database, DdlAppliesCleanly) {
  const auto url = fixtures::fresh_database("ehrsynth_ddl");
  const auto schema = build_default_schema();
  execute_sql(url, emit_ddl(schema));
  const auto tables = query_rows(url, "SELECT COUNT(*) AS n FROM information_schema.tables WHERE table_schema = 'public'");
  EXPECT_EQ(*tables.at(0).at("n"), "22");
}

TEST_F(Database, CohortLoadsAndReadsBack) {
  const auto url = fixtures::fresh_database("ehrsynth_load");
  const auto schema = build_default_schema();
  const auto data = flatten(fixtures::grammar_cohort(4, 17));
  const auto summary = load_database(url, schema, data, {true, 50});
  EXPECT_TRUE(summary.committed);
  std::size_t expected = 0;
  for (const auto& [table, rows] : data) {
    expected += rows.size();
    EXPECT_EQ(count_rows(url, table), rows.size()) << table;
  }
  EXPECT_EQ(summary.total_rows, expected);

  const auto& first = data.at("patient_details").front();
  const auto id = to_display(*find_cell(first, "patient_id"));
  const auto back = query_rows(url, "SELECT first_name, date_of_birth FROM patient_details WHERE patient_id = " + id);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(*back[0].at("first_name"), as_text(*find_cell(first, "first_name")));
  EXPECT_EQ(*back[0].at("date_of_birth"), as_text(*find_cell(first, "date_of_birth")));
}

TEST_F(Database, InjectedForeignKeyRollsBackEverything) {
  const auto url = fixtures::fresh_database("ehrsynth_fk");
  const auto schema = build_default_schema();
  auto data = flatten(fixtures::grammar_cohort(3, 23));
  data["vital_signs"].back()["visit_id"] = Value{std::int64_t{424242}};
  ASSERT_EQ(verify_referential_integrity(data, schema).size(), 1u);
  execute_sql(url, emit_ddl(schema));
  try {
    load_database(url, schema, data);
    FAIL() << "load should have failed";
  } catch (const ConstraintViolation& e) {
    EXPECT_EQ(e.sqlstate(), "23503");
  }
  for (const auto& t : schema.tables) EXPECT_EQ(count_rows(url, t.name), 0u) << t.name;
}

TEST_F(Database, CreateSchemaIsPartOfTheTransaction) {
  const auto url = fixtures::fresh_database("ehrsynth_tx");
  const auto schema = build_default_schema();
  auto data = flatten(fixtures::grammar_cohort(2, 29));
  data["medications"].front()["plan_id"] = Value{std::int64_t{777777}};
  EXPECT_THROW(load_database(url, schema, data, {true, 500}), ConstraintViolation);
  const auto tables = query_rows(url, "SELECT COUNT(*) AS n FROM information_schema.tables WHERE table_schema = 'public'");
  EXPECT_EQ(*tables.at(0).at("n"), "0");
}
