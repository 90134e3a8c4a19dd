#pragma once

#include <filesystem>
#include <string>

#include "ehrsynth/schema.hpp"

namespace ehrsynth {

// JSON layout, one object per table:
//
//   {"tables": [
//     {"name": "vital_signs", "primary_key": "vital_id",
//      "columns": [{"name": "diastolic_bp", "kind": "decimal", "nullable": false,
//                   "range": {"hard_min": 20, "soft_min": 40, "soft_max": 120,
//                             "hard_max": 150, "unit": "mmHg"}},
//                  {"name": "severity_class", "kind": "enum", "values": ["normal", ...]}],
//      "foreign_keys": [{"column": "visit_id", "table": "hospital_visits",
//                        "target_column": "visit_id"}]}]}
std::string schema_to_json(const SchemaDef& schema);
SchemaDef schema_from_json(const std::string& text);

void save_schema(const SchemaDef& schema, const std::filesystem::path& path);
SchemaDef load_schema(const std::filesystem::path& path);

}  // namespace ehrsynth
