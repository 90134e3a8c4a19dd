#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ehrsynth/generator.hpp"

namespace ehrsynth {

// Cohort file: JSON document tagged "ehrsynth-cohort/1" holding the reference
// rows, every bundle, and per-row provenance. Integers, decimals, strings,
// booleans and nulls keep their JSON types, so a load/save round trip is
// lossless and byte-stable.
std::string cohort_to_json(const Cohort& cohort);
Cohort cohort_from_json(const std::string& text);

void save_cohort(const Cohort& cohort, const std::string& path);
Cohort load_cohort(const std::string& path);

// Table name -> array of row objects, cells keyed by column.
nlohmann::ordered_json table_rows_to_json(const TableRows& rows);

// Small file helpers shared by the CLI and the pipeline.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ehrsynth
