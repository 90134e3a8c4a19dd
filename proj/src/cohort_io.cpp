#include "ehrsynth/cohort_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ehrsynth/errors.hpp"

namespace ehrsynth {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kFormat = "ehrsynth-cohort/1";

json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else return x;
      },
      v);
}

Value value_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw ParseError("cohort file: unsupported cell value " + j.dump());
}

json rows_to_json(const TableRows& rows) {
  json out = json::object();
  for (const auto& [table, list] : rows) {
    json arr = json::array();
    for (const auto& row : list) {
      json r = json::object();
      for (const auto& [k, v] : row) r[k] = value_to_json(v);
      arr.push_back(std::move(r));
    }
    out[table] = std::move(arr);
  }
  return out;
}

TableRows rows_from_json(const json& j) {
  TableRows out;
  for (const auto& [table, arr] : j.items()) {
    auto& list = out[table];
    for (const auto& r : arr) {
      Row row;
      for (const auto& [k, v] : r.items()) row[k] = value_from_json(v);
      list.push_back(std::move(row));
    }
  }
  return out;
}

json provenance_to_json(const std::vector<Provenance>& prov) {
  json arr = json::array();
  for (const auto& p : prov)
    arr.push_back(json{{"table", p.table}, {"row", p.row_key}, {"backend", p.backend}, {"seed", p.seed},
                       {"attempts", p.attempts}});
  return arr;
}

std::vector<Provenance> provenance_from_json(const json& j) {
  std::vector<Provenance> out;
  for (const auto& p : j)
    out.push_back(Provenance{p.at("table").get<std::string>(), p.at("row").get<std::int64_t>(),
                             p.at("backend").get<std::string>(), p.at("seed").get<std::uint64_t>(),
                             p.at("attempts").get<int>()});
  return out;
}

}  // namespace

std::string cohort_to_json(const Cohort& cohort) {
  json j;
  j["format"] = kFormat;
  j["base_seed"] = cohort.base_seed;
  j["backend"] = cohort.backend;
  j["reference"] = json{{"rows", rows_to_json(cohort.reference.rows)},
                        {"provenance", provenance_to_json(cohort.reference.provenance)}};
  json patients = json::array();
  for (const auto& p : cohort.patients)
    patients.push_back(json{{"patient_id", p.patient_id},
                            {"seed", p.seed},
                            {"rows", rows_to_json(p.rows)},
                            {"provenance", provenance_to_json(p.provenance)}});
  j["patients"] = std::move(patients);
  return j.dump(1) + "\n";
}

Cohort cohort_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("cohort file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kFormat) throw ParseError("cohort file: expected format " + std::string(kFormat));
    Cohort c;
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    c.backend = j.at("backend").get<std::string>();
    c.reference.rows = rows_from_json(j.at("reference").at("rows"));
    c.reference.provenance = provenance_from_json(j.at("reference").at("provenance"));
    for (const auto& p : j.at("patients")) {
      PatientBundle b;
      b.patient_id = p.at("patient_id").get<std::int64_t>();
      b.seed = p.at("seed").get<std::uint64_t>();
      b.rows = rows_from_json(p.at("rows"));
      b.provenance = provenance_from_json(p.at("provenance"));
      c.patients.push_back(std::move(b));
    }
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("cohort file: ") + e.what());
  }
}

nlohmann::ordered_json table_rows_to_json(const TableRows& rows) { return rows_to_json(rows); }

void save_cohort(const Cohort& cohort, const std::string& path) { write_file(path, cohort_to_json(cohort)); }

Cohort load_cohort(const std::string& path) { return cohort_from_json(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace ehrsynth
