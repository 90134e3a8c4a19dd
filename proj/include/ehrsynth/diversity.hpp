#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ehrsynth/value.hpp"

namespace ehrsynth {

// H = -Σ p ln p over nonzero counts (nats). EmptyCounts when Σ = 0.
double shannon_index(const std::vector<std::uint64_t>& counts);

// |observed ∩ expected| / |expected|. EmptyExpected for an empty expected set.
double category_coverage(const std::set<std::string>& observed, const std::set<std::string>& expected);

struct AgeBandCut {
  std::string label;
  double min_age;  // inclusive lower bound
};

// pediatric < 18 <= adult < 65 <= geriatric
std::vector<AgeBandCut> default_age_bands();
std::string age_band_of(double age, const std::vector<AgeBandCut>& bands);

struct DiversityColumn {
  std::string table;
  std::string column;
  std::set<std::string> expected;
  bool age_banded = false;  // bucket numeric ages before counting
};

// age, gender, ethnicity, diagnoses, treatment topics, medications.
std::vector<DiversityColumn> default_diversity_columns();

struct ColumnDiversity {
  std::string name;  // table.column
  double shannon = 0.0;
  std::map<std::string, std::uint64_t> counts;
  double coverage = 0.0;
  bool underrepresented = false;
};

struct DiversityReport {
  std::vector<ColumnDiversity> columns;
  std::vector<std::string> underrepresented;
  double coverage_floor = 0.8;
};

// UnknownColumn if a table is absent or none of its rows has the column.
DiversityReport diversity_report(const TableRows& data, const std::vector<DiversityColumn>& columns,
                                 double coverage_floor = 0.8,
                                 const std::vector<AgeBandCut>& bands = default_age_bands());

std::string diversity_report_text(const DiversityReport& report);
std::string diversity_report_csv(const DiversityReport& report);

}  // namespace ehrsynth
