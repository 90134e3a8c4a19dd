#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ehrsynth/schema.hpp"
#include "ehrsynth/value.hpp"

namespace ehrsynth {

using PromptContext = std::map<std::string, std::string, std::less<>>;

// One field the completion must supply, typed by its column.
struct OutputField {
  std::string name;
  ColumnKind kind = ColumnKind::text;
  std::vector<std::string> enum_values;
  std::string unit;
};

using OutputSpec = std::vector<OutputField>;

struct PromptTemplate {
  std::string table;
  std::string text;                       // may contain {placeholder}s
  std::vector<std::string> output_fields; // subset of the table's columns
};

// Builds the typed output spec for a template; throws SchemaError if a field
// is not a column of the table.
OutputSpec make_output_spec(const TableDef& table, const std::vector<std::string>& fields);

std::vector<std::string> placeholders(std::string_view template_text);

// Substitutes placeholders from `context` (MissingPlaceholder on the first
// unresolved key). With a non-empty spec the prompt gains a context listing and
// the fenced-block output instructions; with an empty spec and no placeholders
// the template text comes back verbatim.
std::string render_prompt(const PromptTemplate& tmpl, const OutputSpec& spec, const PromptContext& context);

// Parsed view of a rendered prompt; used by the grammar backend, which only
// ever sees prompt text.
struct PromptRequest {
  std::string table;
  std::vector<std::string> fields;
  PromptContext context;
};
PromptRequest parse_prompt_request(std::string_view prompt);

// Extracts the first well-formed ```record block (or a bare key: value body)
// and types each spec field. Units after numbers are stripped. Throws
// ParseError on a malformed block, a missing field, or an untypable value.
Row parse_structured_output(std::string_view completion, const OutputSpec& spec);

// Formats a row as the fenced block the parser accepts.
std::string format_record_block(const std::vector<std::pair<std::string, std::string>>& fields);

}  // namespace ehrsynth
