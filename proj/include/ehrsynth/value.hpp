#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ehrsynth {

// A single cell. Dates and timestamps travel as ISO-8601 text
// ("YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS"); the column kind decides how they are
// rendered into SQL.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

using Row = std::map<std::string, Value, std::less<>>;
using TableRows = std::map<std::string, std::vector<Row>, std::less<>>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

// Numeric view of integer/decimal cells, nullopt otherwise.
std::optional<double> as_number(const Value& v);
std::optional<std::int64_t> as_integer(const Value& v);
std::string as_text(const Value& v);

// Shortest round-trip formatting, stable across runs.
std::string format_double(double x);

// Human-readable rendering used in prompts, narratives, and CSV output.
std::string to_display(const Value& v);

const Value* find_cell(const Row& row, std::string_view column);

}  // namespace ehrsynth
