#include "ehrsynth/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ehrsynth/catalog.hpp"
#include "ehrsynth/errors.hpp"
#include "ehrsynth/schema.hpp"
#include "ehrsynth/text.hpp"

namespace ehrsynth {

double shannon_index(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw EmptyCounts("shannon index needs a positive total count");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h <= 0.0 ? 0.0 : h;
}

double category_coverage(const std::set<std::string>& observed, const std::set<std::string>& expected) {
  if (expected.empty()) throw EmptyExpected("coverage needs a nonempty expected category set");
  std::size_t hit = 0;
  for (const auto& e : expected) hit += observed.count(e);
  return static_cast<double>(hit) / static_cast<double>(expected.size());
}

std::vector<AgeBandCut> default_age_bands() { return {{"pediatric", 0}, {"adult", 18}, {"geriatric", 65}}; }

std::string age_band_of(double age, const std::vector<AgeBandCut>& bands) {
  std::string label = bands.empty() ? std::string{} : bands.front().label;
  for (const auto& b : bands)
    if (age >= b.min_age) label = b.label;
  return label;
}

std::vector<DiversityColumn> default_diversity_columns() {
  const SchemaDef schema = build_default_schema();
  auto enum_values = [&](const char* t, const char* c) {
    const auto& v = schema.table(t)->column(c)->enum_values;
    return std::set<std::string>(v.begin(), v.end());
  };
  std::set<std::string> bands;
  for (const auto& b : default_age_bands()) bands.insert(b.label);
  auto as_set = [](const std::vector<std::string>& v) { return std::set<std::string>(v.begin(), v.end()); };
  return {
      {"patient_details", "age", bands, true},
      {"patient_details", "gender", enum_values("patient_details", "gender"), false},
      {"patient_details", "ethnicity", enum_values("patient_details", "ethnicity"), false},
      {"diagnoses", "condition", as_set(condition_names()), false},
      {"treatment_plans", "topic", as_set(treatment_topics()), false},
      {"medications", "drug_name", as_set(prescribable_drugs()), false},
  };
}

DiversityReport diversity_report(const TableRows& data, const std::vector<DiversityColumn>& columns,
                                 double coverage_floor, const std::vector<AgeBandCut>& bands) {
  if (!(coverage_floor >= 0.0 && coverage_floor <= 1.0)) throw ConfigError("coverage floor must lie in [0, 1]");
  DiversityReport report;
  report.coverage_floor = coverage_floor;
  for (const auto& spec : columns) {
    const std::string name = spec.table + "." + spec.column;
    auto it = data.find(spec.table);
    if (it == data.end()) throw UnknownColumn("no table '" + spec.table + "' in dataset");
    ColumnDiversity col;
    col.name = name;
    bool seen = false;
    for (const auto& row : it->second) {
      const Value* v = find_cell(row, spec.column);
      if (!v) continue;
      seen = true;
      if (is_null(*v)) continue;
      std::string key;
      if (spec.age_banded) {
        const auto age = as_number(*v);
        if (!age) continue;
        key = age_band_of(*age, bands);
      } else {
        key = to_display(*v);
      }
      ++col.counts[key];
    }
    if (!seen && !it->second.empty()) throw UnknownColumn("no column '" + name + "' in dataset");
    if (it->second.empty()) throw UnknownColumn("table '" + spec.table + "' has no rows to analyse");
    std::vector<std::uint64_t> counts;
    std::set<std::string> observed;
    for (const auto& [k, c] : col.counts) {
      counts.push_back(c);
      observed.insert(k);
    }
    col.shannon = counts.empty() ? 0.0 : shannon_index(counts);
    col.coverage = spec.expected.empty() ? 1.0 : category_coverage(observed, spec.expected);
    col.underrepresented = col.coverage < coverage_floor;
    if (col.underrepresented) report.underrepresented.push_back(name);
    report.columns.push_back(std::move(col));
  }
  return report;
}

std::string diversity_report_text(const DiversityReport& r) {
  std::ostringstream out;
  out << "coverage_floor: " << format_double(r.coverage_floor) << "\n";
  for (const auto& c : r.columns) {
    out << "\n[" << c.name << "]\n";
    out << "shannon_index: " << format_double(c.shannon) << "\n";
    out << "coverage: " << format_double(c.coverage) << "\n";
    out << "categories: " << c.counts.size() << "\n";
    out << "underrepresented: " << (c.underrepresented ? "yes" : "no") << "\n";
    for (const auto& [k, n] : c.counts) out << "  " << k << ": " << n << "\n";
  }
  out << "\nunderrepresented_columns: " << (r.underrepresented.empty() ? "none" : join(r.underrepresented, ", "))
      << "\n";
  return out.str();
}

std::string diversity_report_csv(const DiversityReport& r) {
  std::ostringstream out;
  out << "column,shannon_index,coverage,categories,underrepresented\n";
  for (const auto& c : r.columns)
    out << csv_escape(c.name) << "," << format_double(c.shannon) << "," << format_double(c.coverage) << ","
        << c.counts.size() << "," << (c.underrepresented ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace ehrsynth
