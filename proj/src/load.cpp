#include "ehrsynth/load.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace ehrsynth {

namespace {

std::string quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "''";
    else out += c;
  }
  return out + "'";
}

[[noreturn]] void mismatch(const ColumnDef& c, const Value& v) {
  throw SchemaMismatch("value " + to_display(v) + " does not fit column '" + c.name + "' (" +
                       std::string(to_string(c.kind)) + ")");
}

}  // namespace

std::string sql_literal(const ColumnDef& c, const Value& v) {
  if (is_null(v)) return "NULL";
  switch (c.kind) {
    case ColumnKind::integer:
      if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
      mismatch(c, v);
    case ColumnKind::decimal: {
      if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
      if (auto d = std::get_if<double>(&v)) {
        if (!std::isfinite(*d)) mismatch(c, v);
        return format_double(*d);
      }
      mismatch(c, v);
    }
    case ColumnKind::boolean:
      if (auto b = std::get_if<bool>(&v)) return *b ? "TRUE" : "FALSE";
      mismatch(c, v);
    case ColumnKind::date:
      if (auto s = std::get_if<std::string>(&v)) return "DATE " + quote(*s);
      mismatch(c, v);
    case ColumnKind::timestamp:
      if (auto s = std::get_if<std::string>(&v)) return "TIMESTAMP " + quote(*s);
      mismatch(c, v);
    case ColumnKind::text:
    case ColumnKind::enumeration:
      if (auto s = std::get_if<std::string>(&v)) return quote(*s);
      mismatch(c, v);
  }
  mismatch(c, v);
}

std::vector<std::string> insert_statements(const TableRows& data, const SchemaDef& schema, std::size_t batch_rows) {
  if (batch_rows < 1) throw ConfigError("insert batch size must be >= 1");
  for (const auto& [table, rows] : data)
    if (!rows.empty() && !schema.table(table)) throw SchemaMismatch("rows for unknown table '" + table + "'");
  std::vector<std::string> out;
  for (const auto& name : topological_order(schema)) {
    auto it = data.find(name);
    if (it == data.end() || it->second.empty()) continue;
    const TableDef& t = *schema.table(name);
    std::string header = "INSERT INTO " + t.name + " (";
    for (std::size_t i = 0; i < t.columns.size(); ++i) header += (i ? ", " : "") + t.columns[i].name;
    header += ") VALUES\n";
    const auto& rows = it->second;
    for (std::size_t start = 0; start < rows.size(); start += batch_rows) {
      std::string stmt = header;
      const std::size_t end = std::min(rows.size(), start + batch_rows);
      for (std::size_t r = start; r < end; ++r) {
        const Row& row = rows[r];
        if (row.size() != t.columns.size())
          throw SchemaMismatch("row for '" + t.name + "' has " + std::to_string(row.size()) + " columns, table has " +
                               std::to_string(t.columns.size()));
        stmt += "  (";
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
          const Value* v = find_cell(row, t.columns[i].name);
          if (!v) throw SchemaMismatch("row for '" + t.name + "' lacks column '" + t.columns[i].name + "'");
          stmt += (i ? ", " : "") + sql_literal(t.columns[i], *v);
        }
        stmt += r + 1 < end ? "),\n" : ");\n";
      }
      out.push_back(std::move(stmt));
    }
  }
  return out;
}

std::string emit_inserts(const TableRows& data, const SchemaDef& schema, std::size_t batch_rows) {
  std::string out;
  for (const auto& s : insert_statements(data, schema, batch_rows)) out += s + "\n";
  return out;
}

std::vector<IntegrityViolation> verify_referential_integrity(const TableRows& data, const SchemaDef& schema) {
  std::map<std::pair<std::string, std::string>, std::set<std::string>> targets;
  auto target_values = [&](const std::string& table, const std::string& column) -> const std::set<std::string>& {
    auto key = std::make_pair(table, column);
    auto it = targets.find(key);
    if (it != targets.end()) return it->second;
    std::set<std::string> values;
    if (auto rows = data.find(table); rows != data.end())
      for (const auto& row : rows->second)
        if (const Value* v = find_cell(row, column); v && !is_null(*v)) values.insert(to_display(*v));
    return targets.emplace(key, std::move(values)).first->second;
  };
  std::vector<IntegrityViolation> out;
  for (const auto& t : schema.tables) {
    auto rows = data.find(t.name);
    if (rows == data.end()) continue;
    for (const auto& fk : t.foreign_keys) {
      const auto& valid = target_values(fk.target_table, fk.target_column);
      for (const auto& row : rows->second) {
        const Value* v = find_cell(row, fk.column);
        if (!v || is_null(*v)) continue;
        const std::string s = to_display(*v);
        if (!valid.count(s)) out.push_back(IntegrityViolation{t.name, fk.column, s, fk.target_table, fk.target_column});
      }
    }
  }
  return out;
}

}  // namespace ehrsynth
