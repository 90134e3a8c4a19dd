// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ehrsynth/anomaly.hpp"
#include "ehrsynth/catalog.hpp"
#include "ehrsynth/coherence.hpp"
#include "ehrsynth/consistency.hpp"
#include "ehrsynth/diversity.hpp"
#include "ehrsynth/load.hpp"
#include "ehrsynth/plausibility.hpp"
#include "ehrsynth/schema.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ehrsynth;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void criterion(const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "[exception: " << e.what() << "]";
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ehrsynth-acceptance-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void schema_criterion(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto schema = build_default_schema();
  schema.validate();
  const auto ddl = emit_ddl(schema);
  const std::set<std::string> expected{
      "staff",           "departments",   "wards",           "beds",
      "patient_details", "emergency_contacts", "vital_signs", "immunizations",
      "allergies",       "medical_histories", "appointments", "hospital_visits",
      "test_results",    "diagnoses",     "admissions",      "treatment_plans",
      "medications",     "clinical_notes", "visit_logs",     "discharge_summaries",
      "referrals",       "billing"};
  std::set<std::string> got;
  for (const auto& t : schema.tables) got.insert(t.name);
  o.require(schema.tables.size() == 22, "22 tables");
  o.require(got == expected, "table names");
  o.detail << schema.tables.size() << " tables; ";
  if (!database_support_available() || !fixtures::pg_server_url()) {
    o.require(false, "no PostgreSQL server to apply the DDL to");
  } else {
    const auto url = fixtures::fresh_database("ehrsynth_accept_ddl");
    execute_sql(url, ddl);
    const auto n = query_rows(url, "SELECT COUNT(*) AS n FROM information_schema.tables WHERE table_schema = 'public'");
    o.require(n.at(0).at("n") == "22", "22 tables created in PostgreSQL");
    o.detail << "DDL applied to PostgreSQL; ";
  }
  const double s = seconds_since(t0);
  o.require(s < 5.0, "runtime < 5 s");
  o.detail << "runtime " << s << " s";
}

// Pipeline runs are shared by the determinism and report criteria.
struct PipelineRuns {
  std::vector<std::pair<std::uint64_t, fs::path>> first;
  bool ok = true;
};

PipelineRuns& pipeline_runs() {
  static PipelineRuns runs;
  return runs;
}

void determinism_criterion(Outcome& o) {
  auto& runs = pipeline_runs();
  for (std::uint64_t seed : {1u, 42u}) {
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = scratch("seed" + std::to_string(seed) + "-" + std::to_string(rep));
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = fixtures::run_command(std::string(EHRSYNTH_CLI) + " pipeline --backend grammar --seed " +
                                           std::to_string(seed) + " --out " + dir.string());
      const double s = seconds_since(t0);
      o.require(r.status == 0, "pipeline exit status for seed " + std::to_string(seed));
      o.require(s < 180.0, "42-patient run under 3 min");
      if (rep == 0) o.detail << "seed " << seed << " run " << s << " s; ";
      dirs.push_back(dir);
    }
    for (const char* f : {"cohort.json", "validation_report.csv", "gated.sql", "schema.sql", "quarantine.json"}) {
      const auto a = fixtures::read_text((dirs[0] / f).string());
      const auto b = fixtures::read_text((dirs[1] / f).string());
      o.require(!a.empty() && a == b, std::string(f) + " identical for seed " + std::to_string(seed));
    }
    runs.first.emplace_back(seed, dirs[0]);
  }
  runs.ok = o.pass;
  if (o.pass) o.detail << "cohort, report and SQL byte-identical across reruns";
}

void perplexity_criterion(Outcome& o) {
  const auto corpus = load_corpus(default_corpus_path());
  const auto lm = train_ngram_lm(corpus, 3, 1.0);
  double worst = 0.0;
  for (const auto& s : fixtures::perplexity_sentences()) {
    const double want = oracle::brute_force_perplexity(corpus, 3, 1.0, s);
    worst = std::max(worst, std::abs(perplexity(lm, s) - want) / want);
  }
  o.require(fixtures::perplexity_sentences().size() == 50, "50 fixture sentences");
  o.require(worst <= 1e-9, "relative error <= 1e-9");
  o.detail << "max relative error " << worst << " over 50 sentences; ";

  std::vector<std::string> vocab;
  for (int i = 0; i < 37; ++i) vocab.push_back("w" + std::to_string(i));
  const auto uniform = NgramLm::uniform(vocab, 1);
  const double ppl = perplexity(uniform, "w1 w5 w9 unseen w36 w2 w2 w7");
  o.require(ppl == static_cast<double>(uniform.vocabulary_size()), "uniform perplexity == |V|");
  o.detail << "uniform perplexity " << ppl << " with |V| = " << uniform.vocabulary_size();
}

void percentile_criterion(Outcome& o) {
  std::vector<Narrative> narratives;
  std::vector<double> scores;
  for (int i = 0; i < 100; ++i) {
    scores.push_back(10.0 + 1.5 * ((i * 37) % 100));
    narratives.push_back({"r" + std::to_string(i), "text"});
  }
  const auto report = plausibility_from_scores(narratives, scores, 95.0);
  const auto flagged = std::count_if(report.results.begin(), report.results.end(),
                                     [](const PlausibilityResult& r) { return r.flagged; });
  o.require(flagged == 5, "exactly 5 flagged");
  o.detail << flagged << " of 100 flagged at threshold " << report.threshold;
}

double gradient_relative_error(Autoencoder& model, const Eigen::MatrixXd& x) {
  const Gradients g = model.gradients(x);
  const double h = 1e-6;
  double diff = 0, na = 0, nn = 0;
  auto probe = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double up = model.loss(x);
    p = saved - h;
    const double down = model.loss(x);
    p = saved;
    const double numeric = (up - down) / (2 * h);
    diff += (analytic - numeric) * (analytic - numeric);
    na += analytic * analytic;
    nn += numeric * numeric;
  };
  for (std::size_t l = 0; l < model.weights().size(); ++l) {
    auto& w = model.weights()[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) probe(w.data()[i], g.weights[l].data()[i]);
    auto& b = model.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) probe(b(i), g.biases[l](i));
  }
  return std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nn));
}

void autoencoder_criterion(Outcome& o) {
  std::mt19937_64 gen(314);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 4 + trial % 4;
    const int hidden = d - 1;
    const int latent = std::max(1, d / 2 - 1);
    Autoencoder model({d, hidden, latent, hidden, d}, 500 + trial);
    for (auto& b : model.biases())
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.1 * normal(gen);
    Eigen::MatrixXd x(8, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(gen);
    worst = std::max(worst, gradient_relative_error(model, x));
  }
  o.require(worst < 1e-4, "gradient check within 1e-4");
  o.detail << "gradient rel. error " << worst << "; ";

  const double th = threshold_and_flag({0.01, 0.02, 0.03}).threshold;
  o.require(std::abs(th - 0.0363299) <= 1e-7, "threshold 0.0363299");
  o.detail << "threshold " << th << "; ";

  const auto fx = fixtures::anomaly_fixture();
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = preprocess(fx.rows, fx.plan);
  const auto trained = train_autoencoder(p.matrix, default_widths(static_cast<int>(p.matrix.cols())), {});
  const auto report = threshold_and_flag(reconstruction_errors(trained.model, p.matrix));
  const double s = seconds_since(t0);
  std::size_t hits = 0;
  for (auto i : fx.outliers) hits += report.flags[i] ? 1 : 0;
  o.require(p.matrix.rows() == static_cast<Eigen::Index>(fx.rows.size()), "no fixture row dropped");
  o.require(hits * 10 >= fx.outliers.size() * 9, ">= 90% of outliers flagged");
  o.require(s < 60.0, "training < 60 s");
  o.detail << hits << "/" << fx.outliers.size() << " outliers flagged, training " << s << " s";
}

void consistency_criterion(Outcome& o) {
  const RuleSet rules;
  RuleBasedNli nli(rules);
  const auto& map = default_drug_classes();
  std::size_t same = 0, same_hit = 0, disjoint = 0, false_hits = 0;
  for (const auto& a_cls : map.classes()) {
    auto allergens = map.members(a_cls);
    for (const auto& [alias, c] : map.aliases())
      if (c == a_cls) allergens.push_back(alias);
    for (const auto& allergen : allergens)
      for (const auto& d_cls : map.classes())
        for (const auto& drug : map.members(d_cls)) {
          fixtures::AllergyRecord rec;
          fixtures::make_allergy_record(rec, allergen, {drug});
          const auto r = assess_consistency("r", build_premise_hypothesis_pairs(rec.view, rules), nli);
          const bool contradiction = !r.labels.empty() && r.labels[0].argmax() == NliLabel::contradiction;
          if (d_cls == a_cls) {
            ++same;
            same_hit += contradiction && r.flagged;
          } else {
            ++disjoint;
            false_hits += contradiction || r.flagged;
          }
        }
  }
  o.require(same > 0 && same_hit == same, "every same-class pair is a flagged contradiction");
  o.require(false_hits == 0, "no disjoint-class contradiction");
  o.detail << same_hit << "/" << same << " same-class pairs flagged; " << false_hits << "/" << disjoint
           << " disjoint-class false contradictions";
}

void coherence_criterion(Outcome& o) {
  std::size_t exact = 0;
  for (const auto& p : fixtures::coherence_hand_pairs()) {
    const double want = p.common / std::sqrt(static_cast<double>(p.a) * p.b);
    exact += lexical_coherence_score(p.first, p.second) == want;
  }
  o.require(exact == 20 && fixtures::coherence_hand_pairs().size() == 20, "20 hand pairs exact");
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> len(0, 6);
  std::size_t agree = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> ps(static_cast<std::size_t>(len(gen)));
    for (auto& p : ps) p = u(gen);
    const double t = u(gen);
    const auto r = coherence_from_scores("r", ps, t);
    double mean = 1.0;
    if (!ps.empty()) {
      mean = 0;
      for (double p : ps) mean += p;
      mean /= static_cast<double>(ps.size());
    }
    agree += r.flagged == (mean < t) && std::abs(r.average_probability - mean) < 1e-12;
  }
  o.require(agree == 1000, "flag iff average < threshold");
  o.detail << exact << "/20 hand pairs exact; " << agree << "/1000 randomized batches agree";
}

void diversity_criterion(Outcome& o) {
  for (std::uint64_t k : {2u, 4u, 10u}) {
    const double h = shannon_index(std::vector<std::uint64_t>(k, 3));
    o.require(std::abs(h - std::log(static_cast<double>(k))) <= 1e-9, "ln " + std::to_string(k));
    o.detail << "H(uniform " << k << ") = " << h << "; ";
  }
  const double h13 = shannon_index({1, 3});
  o.require(std::abs(h13 - 0.562335) <= 1e-6, "[1,3]");
  o.detail << "H([1,3]) = " << h13;
}

void integrity_criterion(Outcome& o) {
  if (!database_support_available()) {
    o.require(false, "built without a PostgreSQL client");
    return;
  }
  if (!fixtures::pg_server_url()) {
    o.require(false, "EHRSYNTH_TEST_PG_URL not set");
    return;
  }
  auto& runs = pipeline_runs();
  const auto schema = build_default_schema();
  // Gated output of the 42-patient seed-1 pipeline run.
  const fs::path dir = !runs.first.empty() ? runs.first.front().second : scratch("integrity");
  if (runs.first.empty()) {
    const auto r = fixtures::run_command(std::string(EHRSYNTH_CLI) + " pipeline --seed 1 --out " + dir.string());
    o.require(r.status == 0, "pipeline run");
  }
  const auto url = fixtures::fresh_database("ehrsynth_accept_load");
  execute_sql(url, fixtures::read_text((dir / "schema.sql").string()) + fixtures::read_text((dir / "gated.sql").string()));
  const auto visits = query_rows(url, "SELECT COUNT(*) AS n FROM hospital_visits");
  o.detail << "gated cohort loaded (" << *visits.at(0).at("n") << " visits); ";

  auto data = flatten(fixtures::grammar_cohort(42, 1));
  o.require(verify_referential_integrity(data, schema).empty(), "clean cohort has no dangling FK");
  data["medications"].front()["plan_id"] = Value{std::int64_t{31337}};
  const auto found = verify_referential_integrity(data, schema);
  o.require(found.size() == 1, "verifier finds the single mutation");
  const auto url2 = fixtures::fresh_database("ehrsynth_accept_fk");
  bool rejected = false;
  try {
    load_database(url2, schema, data, {true, 500});
  } catch (const ConstraintViolation& e) {
    rejected = e.sqlstate() == "23503";
  }
  o.require(rejected, "database rejects the mutation");
  const auto left = query_rows(url2, "SELECT COUNT(*) AS n FROM information_schema.tables WHERE table_schema = 'public'");
  o.require(left.at(0).at("n") == "0", "full rollback");
  o.detail << "mutation caught by verifier (" << found.size() << ") and database, rolled back";
}

std::uint64_t histogram_total(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::uint64_t total = 0;
  while (std::getline(in, line))
    if (!line.empty()) total += std::stoull(line.substr(line.rfind(',') + 1));
  return total;
}

void reports_criterion(Outcome& o) {
  auto& runs = pipeline_runs();
  fs::path dir;
  if (!runs.first.empty()) {
    dir = runs.first.front().second;
  } else {
    dir = scratch("reports");
    const auto r = fixtures::run_command(std::string(EHRSYNTH_CLI) + " pipeline --seed 1 --out " + dir.string());
    o.require(r.status == 0, "pipeline run");
  }
  const auto report = fixtures::read_text((dir / "validation_report.csv").string());
  const auto records = static_cast<std::uint64_t>(std::count(report.begin(), report.end(), '\n')) - 1;
  for (const char* name : {"nsp_avg", "perplexity", "recon_error", "consistency", "combined"}) {
    const auto path = dir / ("hist_" + std::string(name) + ".csv");
    o.require(fs::exists(path), std::string(name) + " emitted");
    if (!fs::exists(path)) continue;
    const auto csv = fixtures::read_text(path.string());
    o.require(csv.rfind("bin_start,bin_end,count\n", 0) == 0, std::string(name) + " header");
    o.require(histogram_total(csv) == records, std::string(name) + " counts sum to record count");
  }
  o.detail << "5 histogram files, each summing to " << records << " records";
}

}  // namespace

int main() {
  std::cout.setf(std::ios::fmtflags(0), std::ios::floatfield);
  criterion("schema", schema_criterion);
  criterion("determinism", determinism_criterion);
  criterion("perplexity_oracle", perplexity_criterion);
  criterion("percentile", percentile_criterion);
  criterion("autoencoder", autoencoder_criterion);
  criterion("consistency", consistency_criterion);
  criterion("coherence", coherence_criterion);
  criterion("diversity", diversity_criterion);
  criterion("integrity", integrity_criterion);
  criterion("reports", reports_criterion);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
