#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehrsynth/value.hpp"

namespace ehrsynth {

enum class ColumnKind { integer, decimal, text, date, timestamp, boolean, enumeration };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view name);

// Soft bounds mark implausible values, hard bounds physiologically impossible
// ones. Ordering: hard_min <= soft_min <= soft_max <= hard_max.
struct PhysiologicRange {
  double hard_min = 0.0;
  double soft_min = 0.0;
  double soft_max = 0.0;
  double hard_max = 0.0;
  std::string unit;

  bool well_ordered() const {
    return hard_min <= soft_min && soft_min <= soft_max && soft_max <= hard_max;
  }
};

struct ColumnDef {
  std::string name;
  ColumnKind kind = ColumnKind::text;
  bool nullable = false;
  std::vector<std::string> enum_values;  // only for ColumnKind::enumeration
  std::optional<PhysiologicRange> range;
};

struct ForeignKey {
  std::string column;
  std::string target_table;
  std::string target_column;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  std::string primary_key;
  std::vector<ForeignKey> foreign_keys;

  const ColumnDef* column(std::string_view column_name) const;
  ColumnDef* column(std::string_view column_name);
  const ForeignKey* foreign_key(std::string_view column_name) const;
};

struct SchemaDef {
  std::vector<TableDef> tables;

  const TableDef* table(std::string_view name) const;
  TableDef* table(std::string_view name);

  // Throws SchemaError on any structural invariant violation. FK acyclicity is
  // checked separately by topological_order (CycleError).
  void validate() const;

  // Tables that reach `root` through foreign keys (including root itself).
  std::vector<std::string> tables_reaching(std::string_view root) const;
};

inline constexpr std::string_view kPatientTable = "patient_details";

// The 22-table hospital schema. Column lists are a documented design choice.
SchemaDef build_default_schema();

// Kahn's algorithm; ties broken by declaration order so output is stable.
std::vector<std::string> topological_order(const SchemaDef& schema);

// Portable CREATE TABLE statements in topological order.
std::string emit_ddl(const SchemaDef& schema);

std::string sql_type(const ColumnDef& column);

enum class RangeSeverity { soft, hard };

struct RangeViolation {
  std::string table;
  std::string column;
  double value = 0.0;
  std::string bound;  // "hard_min", "hard_max", "soft_min", "soft_max"
  double limit = 0.0;
  RangeSeverity severity = RangeSeverity::hard;
};

// Throws SchemaMismatch when the row's column set differs from the table's.
std::vector<RangeViolation> check_value_ranges(const TableDef& table, const Row& row);

}  // namespace ehrsynth
