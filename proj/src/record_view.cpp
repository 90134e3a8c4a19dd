#include "ehrsynth/record_view.hpp"

#include <map>

namespace ehrsynth {

namespace {

using Index = std::map<std::int64_t, std::vector<const Row*>>;

Index index_by(const TableRows& data, std::string_view table, std::string_view column) {
  Index idx;
  auto it = data.find(table);
  if (it == data.end()) return idx;
  for (const auto& row : it->second) {
    const Value* v = find_cell(row, column);
    if (!v) continue;
    if (auto id = as_integer(*v)) idx[*id].push_back(&row);
  }
  return idx;
}

const std::vector<const Row*>& lookup(const Index& idx, std::int64_t key) {
  static const std::vector<const Row*> kEmpty;
  auto it = idx.find(key);
  return it == idx.end() ? kEmpty : it->second;
}

std::int64_t id_of(const Row& row, std::string_view column) {
  const Value* v = find_cell(row, column);
  auto id = v ? as_integer(*v) : std::nullopt;
  return id.value_or(0);
}

}  // namespace

std::string RecordView::text_of(const Row* row, std::string_view column) {
  if (!row) return {};
  const Value* v = find_cell(*row, column);
  return v && !is_null(*v) ? to_display(*v) : std::string{};
}

std::string RecordView::text_of(const std::vector<const Row*>& rows, std::string_view column) {
  return rows.empty() ? std::string{} : text_of(rows.front(), column);
}

std::vector<RecordView> build_record_views(const TableRows& data) {
  const Index patients = index_by(data, "patient_details", "patient_id");
  const Index histories = index_by(data, "medical_histories", "patient_id");
  const Index allergies = index_by(data, "allergies", "patient_id");
  const Index vitals = index_by(data, "vital_signs", "visit_id");
  const Index tests = index_by(data, "test_results", "visit_id");
  const Index diagnoses = index_by(data, "diagnoses", "visit_id");
  const Index admissions = index_by(data, "admissions", "visit_id");
  const Index notes = index_by(data, "clinical_notes", "visit_id");
  const Index plans = index_by(data, "treatment_plans", "diagnosis_id");
  const Index meds = index_by(data, "medications", "plan_id");
  const Index discharges = index_by(data, "discharge_summaries", "admission_id");

  std::vector<RecordView> out;
  auto visits = data.find("hospital_visits");
  if (visits == data.end()) return out;
  std::map<std::int64_t, const Row*> ordered;
  for (const auto& row : visits->second) ordered[id_of(row, "visit_id")] = &row;

  for (const auto& [visit_id, visit] : ordered) {
    RecordView v;
    v.visit_id = visit_id;
    v.record_id = "visit-" + std::to_string(visit_id);
    v.visit = visit;
    v.patient_id = id_of(*visit, "patient_id");
    const auto& p = lookup(patients, v.patient_id);
    v.patient = p.empty() ? nullptr : p.front();
    const auto& h = lookup(histories, v.patient_id);
    v.history = h.empty() ? nullptr : h.front();
    v.allergies = lookup(allergies, v.patient_id);
    v.vitals = lookup(vitals, visit_id);
    v.tests = lookup(tests, visit_id);
    v.diagnoses = lookup(diagnoses, visit_id);
    v.admissions = lookup(admissions, visit_id);
    v.notes = lookup(notes, visit_id);
    for (const Row* d : v.diagnoses)
      for (const Row* plan : lookup(plans, id_of(*d, "diagnosis_id"))) {
        v.plans.push_back(plan);
        const auto& m = lookup(meds, id_of(*plan, "plan_id"));
        v.medications.insert(v.medications.end(), m.begin(), m.end());
      }
    for (const Row* a : v.admissions) {
      const auto& d = lookup(discharges, id_of(*a, "admission_id"));
      v.discharges.insert(v.discharges.end(), d.begin(), d.end());
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace ehrsynth
