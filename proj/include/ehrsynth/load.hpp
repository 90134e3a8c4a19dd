#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/schema.hpp"
#include "ehrsynth/value.hpp"

namespace ehrsynth {

// A statement the database rejected. Integrity failures (SQLSTATE class 23)
// raise ConstraintViolation; anything else raises StatementError.
class StatementError : public Error {
 public:
  StatementError(std::string kind, std::string statement, std::string sqlstate, const std::string& message)
      : Error(std::move(kind), message), statement_(std::move(statement)), sqlstate_(std::move(sqlstate)) {}
  StatementError(std::string statement, std::string sqlstate, const std::string& message)
      : StatementError("StatementError", std::move(statement), std::move(sqlstate), message) {}

  const std::string& statement() const noexcept { return statement_; }
  const std::string& sqlstate() const noexcept { return sqlstate_; }

 private:
  std::string statement_;
  std::string sqlstate_;
};

class ConstraintViolation : public StatementError {
 public:
  ConstraintViolation(std::string statement, std::string sqlstate, const std::string& message)
      : StatementError("ConstraintViolation", std::move(statement), std::move(sqlstate), message) {}
};

// Standard SQL literal for a cell of the given column.
std::string sql_literal(const ColumnDef& column, const Value& value);

// Multi-row INSERTs grouped per table in topological order, at most
// `batch_rows` rows each. SchemaMismatch when a row's columns differ from its
// table or a value does not fit the column kind.
std::vector<std::string> insert_statements(const TableRows& data, const SchemaDef& schema,
                                           std::size_t batch_rows = 500);
std::string emit_inserts(const TableRows& data, const SchemaDef& schema, std::size_t batch_rows = 500);

struct IntegrityViolation {
  std::string table;
  std::string column;
  std::string value;
  std::string target_table;
  std::string target_column;
};

// One entry per non-null FK value with no matching target row.
std::vector<IntegrityViolation> verify_referential_integrity(const TableRows& data, const SchemaDef& schema);

struct LoadOptions {
  bool create_schema = false;  // run the DDL inside the same transaction
  std::size_t batch_rows = 500;
};

struct LoadSummary {
  bool committed = false;
  std::map<std::string, std::size_t> rows_per_table;
  std::size_t total_rows = 0;
};

// Single transaction; on any failure it rolls back and rethrows
// (ConnectionError, ConstraintViolation, StatementError), so nothing from a
// failed call persists.
LoadSummary load_database(const std::string& url, const SchemaDef& schema, const TableRows& data,
                          const LoadOptions& options = {});

// Runs a script outside an explicit transaction (e.g. CREATE DATABASE).
void execute_sql(const std::string& url, const std::string& sql);

using ResultRow = std::map<std::string, std::optional<std::string>>;
std::vector<ResultRow> query_rows(const std::string& url, const std::string& sql);

// False when the library was built without a PostgreSQL client.
bool database_support_available();

}  // namespace ehrsynth
