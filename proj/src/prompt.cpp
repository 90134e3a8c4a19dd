#include "ehrsynth/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/text.hpp"

namespace ehrsynth {

namespace {

constexpr std::string_view kContextHeader = "Context:";
constexpr std::string_view kTableLine = "Table: ";
constexpr std::string_view kFieldsLine = "Fields: ";
constexpr std::string_view kFence = "```";

bool is_placeholder_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::optional<double> leading_number(std::string_view s) {
  const auto t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), v);
  if (ec != std::errc{} || ptr == begin) return std::nullopt;
  // A unit may follow ("172 cm", "36.8C"); glued numeric junk ("2024-01-02") may not.
  if (ptr != t.data() + t.size()) {
    const char c = *ptr;
    if (c == '-' || c == '+' || c == '.' || c == ',' || c == ':') return std::nullopt;
  }
  return v;
}

bool valid_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::optional<std::string> normalize_timestamp(std::string_view s) {
  if (s.size() < 16 || !valid_date(s.substr(0, 10))) return std::nullopt;
  if (s[10] != ' ' && s[10] != 'T') return std::nullopt;
  std::string out(s.substr(0, 10));
  out += ' ';
  auto time = s.substr(11);
  if (time.size() == 5) return out + std::string(time) + ":00";
  if (time.size() >= 8 && time[2] == ':' && time[5] == ':') return out + std::string(time.substr(0, 8));
  return std::nullopt;
}

Value type_value(const OutputField& field, const std::string& raw) {
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("field '" + field.name + "': " + why + " (got '" + raw + "')");
  };
  switch (field.kind) {
    case ColumnKind::integer: {
      const auto v = leading_number(raw);
      if (!v || std::floor(*v) != *v) throw fail("expected an integer");
      return static_cast<std::int64_t>(*v);
    }
    case ColumnKind::decimal: {
      const auto v = leading_number(raw);
      if (!v) throw fail("expected a number");
      return *v;
    }
    case ColumnKind::boolean: {
      const auto l = to_lower(raw);
      if (l == "true" || l == "yes") return true;
      if (l == "false" || l == "no") return false;
      throw fail("expected true/false");
    }
    case ColumnKind::date:
      if (!valid_date(raw)) throw fail("expected YYYY-MM-DD");
      return raw;
    case ColumnKind::timestamp: {
      auto ts = normalize_timestamp(raw);
      if (!ts) throw fail("expected YYYY-MM-DD HH:MM:SS");
      return *ts;
    }
    case ColumnKind::enumeration: {
      const auto l = to_lower(raw);
      for (const auto& v : field.enum_values)
        if (to_lower(v) == l) return v;
      throw fail("not one of the allowed values");
    }
    case ColumnKind::text:
      if (raw.empty()) throw fail("empty text");
      return raw;
  }
  return raw;
}

// Parses `key: value` lines; nullopt if any non-blank line is not of that form.
std::optional<std::map<std::string, std::string, std::less<>>> parse_kv_lines(std::string_view body) {
  std::map<std::string, std::string, std::less<>> out;
  for (const auto& line_raw : split(body, '\n')) {
    const auto line = trim(line_raw);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos || colon == 0) return std::nullopt;
    auto key = to_lower(trim(std::string_view(line).substr(0, colon)));
    if (key.empty() || !std::all_of(key.begin(), key.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
        }))
      return std::nullopt;
    out[key] = trim(std::string_view(line).substr(colon + 1));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

// Bodies of every fenced block in order of appearance.
std::vector<std::string> fenced_blocks(std::string_view text) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find(kFence, pos);
    if (open == std::string_view::npos) break;
    const auto line_end = text.find('\n', open);
    if (line_end == std::string_view::npos) break;
    const auto close = text.find(kFence, line_end + 1);
    if (close == std::string_view::npos) break;
    blocks.emplace_back(text.substr(line_end + 1, close - line_end - 1));
    pos = close + kFence.size();
  }
  return blocks;
}

std::string describe(const OutputField& f) {
  std::string d(to_string(f.kind));
  if (f.kind == ColumnKind::enumeration) d = "one of " + join(f.enum_values, "|");
  if (f.kind == ColumnKind::date) d = "YYYY-MM-DD";
  if (f.kind == ColumnKind::timestamp) d = "YYYY-MM-DD HH:MM:SS";
  if (!f.unit.empty()) d += " " + f.unit;
  return d;
}

}  // namespace

OutputSpec make_output_spec(const TableDef& table, const std::vector<std::string>& fields) {
  OutputSpec spec;
  for (const auto& name : fields) {
    const ColumnDef* c = table.column(name);
    if (!c) throw SchemaError("output field '" + name + "' is not a column of '" + table.name + "'");
    spec.push_back(OutputField{c->name, c->kind, c->enum_values, c->range ? c->range->unit : std::string{}});
  }
  return spec;
}

std::vector<std::string> placeholders(std::string_view text) {
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_placeholder_char(text[j])) ++j;
    if (j < text.size() && text[j] == '}' && j > i + 1) {
      std::string key(text.substr(i + 1, j - i - 1));
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(std::move(key));
      i = j;
    }
  }
  return keys;
}

std::string render_prompt(const PromptTemplate& tmpl, const OutputSpec& spec, const PromptContext& context) {
  std::string out;
  const std::string_view text = tmpl.text;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_placeholder_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        const auto key = text.substr(i + 1, j - i - 1);
        auto it = context.find(key);
        if (it == context.end()) throw MissingPlaceholder(std::string(key));
        out += it->second;
        i = j;
        continue;
      }
    }
    out += text[i];
  }
  if (spec.empty()) return out;

  out += "\n\n";
  out += kContextHeader;
  out += "\n";
  for (const auto& [k, v] : context) out += "- " + k + ": " + v + "\n";
  out += "\n";
  out += kTableLine;
  out += tmpl.table + "\n";
  out += kFieldsLine;
  std::vector<std::string> names;
  for (const auto& f : spec) names.push_back(f.name);
  out += join(names, ", ") + "\n";
  out += "Reply with exactly one fenced block tagged `record` containing one `field: value` line per field:\n";
  out += "```record\n";
  for (const auto& f : spec) out += f.name + ": <" + describe(f) + ">\n";
  out += "```\n";
  return out;
}

PromptRequest parse_prompt_request(std::string_view prompt) {
  PromptRequest req;
  bool in_context = false;
  for (const auto& raw : split(prompt, '\n')) {
    const std::string_view line = raw;
    if (line == kContextHeader) {
      in_context = true;
      continue;
    }
    if (in_context) {
      if (line.rfind("- ", 0) == 0) {
        const auto colon = line.find(": ", 2);
        if (colon != std::string_view::npos) {
          req.context[std::string(line.substr(2, colon - 2))] = std::string(line.substr(colon + 2));
          continue;
        }
        const auto bare = line.find(':', 2);
        if (bare != std::string_view::npos && bare + 1 == line.size()) {
          req.context[std::string(line.substr(2, bare - 2))] = "";
          continue;
        }
      }
      in_context = false;
    }
    if (line.rfind(kTableLine, 0) == 0) req.table = trim(line.substr(kTableLine.size()));
    if (line.rfind(kFieldsLine, 0) == 0) {
      for (const auto& f : split(line.substr(kFieldsLine.size()), ',')) {
        auto name = trim(f);
        if (!name.empty()) req.fields.push_back(std::move(name));
      }
    }
  }
  return req;
}

Row parse_structured_output(std::string_view completion, const OutputSpec& spec) {
  std::vector<std::string> candidates = fenced_blocks(completion);
  if (candidates.empty()) candidates.emplace_back(completion);

  std::optional<std::map<std::string, std::string, std::less<>>> block;
  for (const auto& body : candidates) {
    if (auto kv = parse_kv_lines(body)) {
      block = std::move(kv);
      break;
    }
  }
  if (!block) throw ParseError("no well-formed `field: value` block in completion");

  Row row;
  for (const auto& field : spec) {
    auto it = block->find(to_lower(field.name));
    if (it == block->end()) throw ParseError("missing field '" + field.name + "'");
    row[field.name] = type_value(field, it->second);
  }
  return row;
}

std::string format_record_block(const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out = "```record\n";
  for (const auto& [k, v] : fields) out += k + ": " + v + "\n";
  return out + "```\n";
}

}  // namespace ehrsynth
