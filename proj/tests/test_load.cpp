#include <gtest/gtest.h>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/load.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ehrsynth;

namespace {

ColumnDef col(ColumnKind kind) {
  ColumnDef c;
  c.name = "c";
  c.kind = kind;
  return c;
}

}  // namespace

TEST(Load, Literals) {
  EXPECT_EQ(sql_literal(col(ColumnKind::integer), Value{std::int64_t{42}}), "42");
  EXPECT_EQ(sql_literal(col(ColumnKind::decimal), Value{4.5}), "4.5");
  EXPECT_EQ(sql_literal(col(ColumnKind::decimal), Value{std::int64_t{4}}), "4");
  EXPECT_EQ(sql_literal(col(ColumnKind::boolean), Value{true}), "TRUE");
  EXPECT_EQ(sql_literal(col(ColumnKind::date), Value{std::string("2024-01-02")}), "DATE '2024-01-02'");
  EXPECT_EQ(sql_literal(col(ColumnKind::timestamp), Value{std::string("2024-01-02 03:04:05")}),
            "TIMESTAMP '2024-01-02 03:04:05'");
  EXPECT_EQ(sql_literal(col(ColumnKind::text), Value{std::string("O'Brien; DROP")}), "'O''Brien; DROP'");
  EXPECT_EQ(sql_literal(col(ColumnKind::text), Value{}), "NULL");
  EXPECT_THROW(sql_literal(col(ColumnKind::integer), Value{std::string("x")}), SchemaMismatch);
  EXPECT_THROW(sql_literal(col(ColumnKind::decimal), Value{std::nan("")}), SchemaMismatch);
  EXPECT_THROW(sql_literal(col(ColumnKind::boolean), Value{std::int64_t{1}}), SchemaMismatch);
}

TEST(Load, InsertsFollowTopologicalOrderAndBatch) {
  const auto schema = build_default_schema();
  const auto data = flatten(fixtures::grammar_cohort(3, 5));
  const auto stmts = insert_statements(data, schema, 7);
  const auto order = topological_order(schema);
  std::size_t last = 0, rows = 0, expected = 0;
  for (const auto& [_, r] : data) expected += r.size();
  for (const auto& s : stmts) {
    const auto table = s.substr(12, s.find(' ', 12) - 12);
    const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), table) - order.begin());
    ASSERT_LT(pos, order.size()) << table;
    EXPECT_GE(pos, last);
    last = pos;
    const auto n = static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) - 1;  // minus the header line
    EXPECT_LE(n, 7u);
    rows += n;
  }
  EXPECT_EQ(rows, expected);
  EXPECT_EQ(emit_inserts(data, schema), emit_inserts(data, schema));
  EXPECT_TRUE(insert_statements({}, schema).empty());
  EXPECT_THROW(insert_statements(data, schema, 0), ConfigError);
}

TEST(Load, UnknownTableOrColumnIsMismatch) {
  const auto schema = build_default_schema();
  TableRows bad;
  bad["nope"] = {Row{{"a", Value{std::int64_t{1}}}}};
  EXPECT_THROW(insert_statements(bad, schema), SchemaMismatch);
  auto data = flatten(fixtures::grammar_cohort(1, 5));
  data["vital_signs"][0]["extra"] = Value{std::int64_t{1}};
  EXPECT_THROW(insert_statements(data, schema), SchemaMismatch);
}

TEST(Load, IntegrityAgreesWithOracle) {
  const auto schema = build_default_schema();
  auto data = flatten(fixtures::grammar_cohort(5, 9));
  EXPECT_TRUE(verify_referential_integrity(data, schema).empty());
  EXPECT_TRUE(oracle::fk_scan(data, schema).empty());

  data["vital_signs"][0]["visit_id"] = Value{std::int64_t{987654}};
  const auto v = verify_referential_integrity(data, schema);
  const auto o = oracle::fk_scan(data, schema);
  ASSERT_EQ(v.size(), 1u);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_EQ(v[0].table, "vital_signs");
  EXPECT_EQ(v[0].column, "visit_id");
  EXPECT_EQ(v[0].value, "987654");
  EXPECT_EQ(v[0].target_table, "hospital_visits");
  EXPECT_EQ(o[0].value, v[0].value);
}

TEST(Load, IntegrityMatchesOracleUnderRandomMutations) {
  const auto schema = build_default_schema();
  const auto clean = flatten(fixtures::grammar_cohort(3, 21));
  std::vector<std::pair<std::string, std::string>> fk_cells;
  for (const auto& t : schema.tables)
    for (const auto& fk : t.foreign_keys)
      if (clean.count(t.name) && !clean.at(t.name).empty()) fk_cells.emplace_back(t.name, fk.column);
  ASSERT_GT(fk_cells.size(), 15u);
  for (std::size_t i = 0; i < fk_cells.size(); ++i) {
    auto data = clean;
    auto& row = data[fk_cells[i].first][i % data[fk_cells[i].first].size()];
    row[fk_cells[i].second] = Value{std::int64_t{900000 + static_cast<std::int64_t>(i)}};
    EXPECT_EQ(verify_referential_integrity(data, schema).size(), oracle::fk_scan(data, schema).size())
        << fk_cells[i].first << "." << fk_cells[i].second;
    EXPECT_EQ(verify_referential_integrity(data, schema).size(), 1u);
  }
}

TEST(Load, BadUrlIsConnectionError) {
  if (!database_support_available()) GTEST_SKIP() << "built without a PostgreSQL client";
  const auto schema = build_default_schema();
  EXPECT_THROW(load_database("postgresql://nobody@127.0.0.1:1/none?connect_timeout=2", schema, {}, {true, 500}),
               ConnectionError);
}
