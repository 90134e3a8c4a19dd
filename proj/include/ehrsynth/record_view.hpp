#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ehrsynth/value.hpp"

namespace ehrsynth {

// The unit every validation check scores: one hospital visit joined with the
// patient's demographics, history and allergies, plus everything recorded
// during that visit. Pointers refer into the TableRows the view was built
// from, which must outlive it.
struct RecordView {
  std::string record_id;  // "visit-<visit_id>"
  std::int64_t visit_id = 0;
  std::int64_t patient_id = 0;

  const Row* patient = nullptr;
  const Row* history = nullptr;
  const Row* visit = nullptr;
  std::vector<const Row*> allergies;
  std::vector<const Row*> vitals;
  std::vector<const Row*> tests;
  std::vector<const Row*> diagnoses;
  std::vector<const Row*> plans;        // treatment plans for the visit's diagnoses
  std::vector<const Row*> medications;  // medications of those plans
  std::vector<const Row*> admissions;
  std::vector<const Row*> discharges;
  std::vector<const Row*> notes;

  // Text of a column on the first row of a group; "" when absent or null.
  static std::string text_of(const std::vector<const Row*>& rows, std::string_view column);
  static std::string text_of(const Row* row, std::string_view column);
};

// One view per hospital visit, ordered by visit_id.
std::vector<RecordView> build_record_views(const TableRows& data);

}  // namespace ehrsynth
