#include "ehrsynth/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ehrsynth/cohort_io.hpp"
#include "ehrsynth/errors.hpp"
#include "ehrsynth/load.hpp"
#include "ehrsynth/text.hpp"

namespace ehrsynth {

namespace {

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.kind() + ": " + e.what());
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string fixed(double x, int digits = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << x;
  return o.str();
}

// Rows of one record, tagged with their table.
std::vector<std::pair<std::string, const Row*>> record_rows(const RecordView& v) {
  std::vector<std::pair<std::string, const Row*>> out;
  auto one = [&](const char* t, const Row* r) {
    if (r) out.emplace_back(t, r);
  };
  auto many = [&](const char* t, const std::vector<const Row*>& rs) {
    for (const Row* r : rs) one(t, r);
  };
  one("patient_details", v.patient);
  one("medical_histories", v.history);
  one("hospital_visits", v.visit);
  many("allergies", v.allergies);
  many("vital_signs", v.vitals);
  many("test_results", v.tests);
  many("diagnoses", v.diagnoses);
  many("treatment_plans", v.plans);
  many("medications", v.medications);
  many("admissions", v.admissions);
  many("discharge_summaries", v.discharges);
  many("clinical_notes", v.notes);
  return out;
}

void check_ranges(const RecordView& v, const SchemaDef& schema, RecordScores& s) {
  bool hard = false;
  for (const auto& [name, row] : record_rows(v)) {
    const TableDef* t = schema.table(name);
    if (!t) continue;
    for (const auto& viol : check_value_ranges(*t, *row)) {
      if (viol.severity == RangeSeverity::soft) {
        ++s.soft_range_warnings;
        continue;
      }
      hard = true;
      s.hard_range_details.push_back(viol.table + "." + viol.column + "=" + format_double(viol.value) + " " +
                                     (viol.bound == "hard_min" ? "<" : ">") + " " + format_double(viol.limit));
    }
  }
  s.hard_range_flag = hard;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::optional<double> opt_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw ParseError("validation report: '" + s + "' is not a number");
}

std::optional<bool> opt_flag(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "true") return true;
  if (s == "false") return false;
  throw ParseError("validation report: '" + s + "' is not a flag");
}

std::vector<AgeBandCut> age_bands(const DiversitySettings& d) {
  return {{"pediatric", 0}, {"adult", d.adult_age}, {"geriatric", d.geriatric_age}};
}

}  // namespace

std::size_t ValidationOutcome::failed() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.verdict.passed; }));
}

std::unique_ptr<GenerationBackend> make_backend(const GenerationSettings& settings) {
  if (settings.backend == "grammar") return std::make_unique<GrammarBackend>(GrammarOptions{settings.error_rate});
  if (settings.backend == "remote") return std::make_unique<RemoteLlmBackend>(settings.llm);
  throw ConfigError("unknown generation backend '" + settings.backend + "'");
}

Scorers make_scorers(const ValidationSettings& settings) {
  Scorers s;
  s.rules = std::make_unique<RuleSet>(default_drug_classes(), settings.nli_epsilon);
  try {
    s.rules->enable_only(settings.rules);
  } catch (const UnknownRule& e) {
    throw ConfigError(std::string("validation.rules: ") + e.what());
  }
  s.coherence_threshold = settings.effective_coherence_threshold();
  if (settings.scorers == "remote") {
    s.client = std::make_shared<RemoteScorerClient>(settings.remote);
    s.coherence = std::make_unique<RemoteCoherenceScorer>(s.client);
    s.perplexity = std::make_unique<RemotePerplexityScorer>(s.client);
    s.nli = std::make_unique<RemoteNliClassifier>(s.client);
  } else if (settings.scorers == "builtin") {
    const std::string path = settings.corpus_path.empty() ? default_corpus_path() : settings.corpus_path;
    auto lm = stage("plausibility", [&] { return train_ngram_lm(load_corpus(path), settings.lm_order, settings.lm_k); });
    s.coherence = std::make_unique<LexicalCoherenceScorer>();
    s.perplexity = std::make_unique<BuiltinPerplexityScorer>(std::move(lm));
    s.nli = std::make_unique<RuleBasedNli>(*s.rules);
  } else {
    throw ConfigError("validation.scorers: expected builtin or remote, got '" + settings.scorers + "'");
  }
  return s;
}

Cohort generate_from_config(const PipelineConfig& config, const SchemaDef& schema) {
  const auto backend = make_backend(config.generation);
  const auto templates = default_templates(schema);
  return stage("generate", [&] {
    return generate_cohort(schema, templates, *backend, config.generation.patients, config.generation.seed,
                           config.generation.engine);
  });
}

ValidationOutcome validate_dataset(const TableRows& data, const SchemaDef& schema, const PipelineConfig& config,
                                   Scorers& scorers) {
  ValidationOutcome out;
  const auto views = stage("validate", [&] { return build_record_views(data); });
  if (views.empty()) throw StageError("validate", "dataset has no hospital visits to score");
  const std::size_t n = views.size();

  const auto coherence =
      stage("coherence", [&] { return assess_coherence(views, *scorers.coherence, scorers.coherence_threshold); });

  out.plausibility = stage("plausibility", [&] {
    std::vector<Narrative> narratives;
    narratives.reserve(n);
    for (const auto& v : views) narratives.push_back(build_narrative(v.record_id, narrative_fields(v)));
    return assess_plausibility(narratives, *scorers.perplexity, config.validation.percentile);
  });

  const auto consistency = stage("consistency", [&] { return assess_consistency(views, *scorers.rules, *scorers.nli); });

  // Records missing a feature cannot be encoded; they get the threshold as
  // their error and are flagged.
  std::vector<std::optional<double>> errors(n);
  stage("anomaly", [&] {
    std::vector<Row> features;
    features.reserve(n);
    for (const auto& v : views) features.push_back(record_features(v));
    const Preprocessed pre = preprocess(features, config.anomaly.features);
    const int d = static_cast<int>(pre.matrix.cols());
    std::vector<int> widths;
    if (config.anomaly.widths.empty()) {
      widths = default_widths(d);
    } else {
      widths.push_back(d);
      widths.insert(widths.end(), config.anomaly.widths.begin(), config.anomaly.widths.end());
      widths.push_back(d);
    }
    const auto trained = train_autoencoder(pre.matrix, widths, config.anomaly.training);
    out.anomaly = threshold_and_flag(reconstruction_errors(trained.model, pre.matrix));
    for (std::size_t i = 0; i < pre.kept.size(); ++i) errors[pre.kept[i]] = out.anomaly.errors[i];
    out.anomaly_incomplete = pre.dropped;
    if (pre.dropped > 0)
      out.warnings.push_back(std::to_string(pre.dropped) + " record(s) lack anomaly features and were flagged");
    return 0;
  });

  out.rows.reserve(n);
  stage("score", [&] {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = views[i];
      RecordScores s;
      s.record_id = v.record_id;
      s.patient_id = v.patient_id;
      s.coherence_avg = coherence[i].average_probability;
      s.coherence_flag = coherence[i].flagged;
      s.perplexity = out.plausibility.results[i].perplexity;
      s.plausibility_flag = out.plausibility.results[i].flagged;
      s.consistency_score = consistency[i].consistency_score;
      s.max_contradiction = consistency[i].max_contradiction;
      s.consistency_flag = consistency[i].flagged;
      s.anomaly_threshold = out.anomaly.threshold;
      if (errors[i]) {
        s.recon_error = *errors[i];
        s.anomaly_flag = *errors[i] > out.anomaly.threshold;
      } else {
        s.recon_error = out.anomaly.threshold;
        s.anomaly_flag = true;
      }
      check_ranges(v, schema, s);
      ReportRow row;
      row.combined_score = combined_anomaly_score(s, config.scoring.weights);
      row.verdict = gate_record(s);
      row.scores = std::move(s);
      out.rows.push_back(std::move(row));
    }
    return 0;
  });

  out.diversity = stage("diversity", [&] {
    return diversity_report(data, default_diversity_columns(), config.diversity.coverage_floor,
                            age_bands(config.diversity));
  });
  out.histograms = stage("report", [&] { return build_histograms(out.rows, config.scoring.histogram_bins); });
  return out;
}

HistogramSet build_histograms(const std::vector<ReportRow>& rows, int bins) {
  const std::pair<const char*, std::function<std::optional<double>(const RecordScores&)>> metrics[] = {
      {"nsp_avg", [](const RecordScores& s) { return s.coherence_avg; }},
      {"perplexity", [](const RecordScores& s) { return s.perplexity; }},
      {"recon_error", [](const RecordScores& s) { return s.recon_error; }},
      {"consistency", [](const RecordScores& s) { return s.consistency_score; }},
  };
  HistogramSet set;
  for (const auto& [name, get] : metrics) {
    std::vector<double> values;
    for (const auto& r : rows) {
      const auto v = get(r.scores);
      if (!v) throw IncompleteChecks("record " + r.scores.record_id + " has no " + name + " value");
      values.push_back(*v);
    }
    set.files.emplace_back(name, emit_histogram(values, bins));
  }
  std::vector<double> combined;
  for (const auto& r : rows) combined.push_back(r.combined_score);
  set.files.emplace_back("combined", emit_histogram(combined, bins));
  return set;
}

std::vector<ReportRow> parse_validation_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("validation report is empty");
  const auto header = parse_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"record_id", "patient_id", "coherence_avg", "coherence_flag", "perplexity",
                               "plausibility_flag", "consistency_score", "max_contradiction", "consistency_flag",
                               "recon_error", "anomaly_flag", "hard_range_flag", "soft_range_warnings",
                               "combined_score", "gate", "reasons"})
    if (!col.count(required)) throw ParseError(std::string("validation report lacks column ") + required);

  std::vector<ReportRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = parse_csv_line(line);
    if (f.size() != header.size())
      throw ParseError("validation report line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    auto at = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    ReportRow r;
    auto& s = r.scores;
    s.record_id = at("record_id");
    s.patient_id = static_cast<std::int64_t>(opt_number(at("patient_id")).value_or(0));
    s.coherence_avg = opt_number(at("coherence_avg"));
    s.coherence_flag = opt_flag(at("coherence_flag"));
    s.perplexity = opt_number(at("perplexity"));
    s.plausibility_flag = opt_flag(at("plausibility_flag"));
    s.consistency_score = opt_number(at("consistency_score"));
    s.max_contradiction = opt_number(at("max_contradiction"));
    s.consistency_flag = opt_flag(at("consistency_flag"));
    s.recon_error = opt_number(at("recon_error"));
    s.anomaly_flag = opt_flag(at("anomaly_flag"));
    s.hard_range_flag = opt_flag(at("hard_range_flag"));
    s.soft_range_warnings = static_cast<int>(opt_number(at("soft_range_warnings")).value_or(0));
    r.combined_score = opt_number(at("combined_score")).value_or(0);
    r.verdict.passed = at("gate") == "pass";
    if (!at("reasons").empty()) r.verdict.reasons = split(at("reasons"), ';');
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string validation_summary_text(const std::vector<ReportRow>& rows) {
  std::size_t passed = 0;
  std::map<std::string, std::size_t> reasons;
  for (const auto& r : rows) {
    if (r.verdict.passed) ++passed;
    for (const auto& why : r.verdict.reasons) ++reasons[why];
  }
  std::ostringstream o;
  o << "records: " << rows.size() << "\n"
    << "passed: " << passed << "\n"
    << "failed: " << rows.size() - passed << "\n";
  for (const char* check : {"coherence", "plausibility", "consistency", "anomaly", "hard_range"})
    o << "flagged." << check << ": " << reasons[check] << "\n";
  if (!rows.empty()) {
    auto stats = [&](const char* name, auto get) {
      std::vector<double> v;
      for (const auto& r : rows)
        if (auto x = get(r)) v.push_back(*x);
      if (v.empty()) return;
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      o << name << ".min: " << fixed(*lo) << "\n"
        << name << ".mean: " << fixed(mean) << "\n"
        << name << ".max: " << fixed(*hi) << "\n";
    };
    stats("nsp_avg", [](const ReportRow& r) { return r.scores.coherence_avg; });
    stats("perplexity", [](const ReportRow& r) { return r.scores.perplexity; });
    stats("consistency", [](const ReportRow& r) { return r.scores.consistency_score; });
    stats("recon_error", [](const ReportRow& r) { return r.scores.recon_error; });
    stats("combined", [](const ReportRow& r) { return std::optional<double>(r.combined_score); });
  }
  return o.str();
}

std::string validation_summary_text(const ValidationOutcome& outcome, const PipelineConfig& config) {
  std::ostringstream o;
  o << validation_summary_text(outcome.rows);
  o << "threshold.coherence: " << format_double(config.validation.effective_coherence_threshold()) << "\n"
    << "threshold.perplexity_p" << format_double(config.validation.percentile) << ": "
    << fixed(outcome.plausibility.threshold) << "\n"
    << "anomaly.error_mean: " << fixed(outcome.anomaly.mean, 6) << "\n"
    << "anomaly.error_std: " << fixed(outcome.anomaly.stddev, 6) << "\n"
    << "threshold.anomaly: " << fixed(outcome.anomaly.threshold, 6) << "\n"
    << "anomaly.incomplete_records: " << outcome.anomaly_incomplete << "\n"
    << "weights: w_coherence=" << format_double(config.scoring.weights.coherence)
    << " w_contradiction=" << format_double(config.scoring.weights.contradiction)
    << " w_anomaly=" << format_double(config.scoring.weights.anomaly) << "\n";
  o << "diversity.underrepresented: " << join(outcome.diversity.underrepresented, ",") << "\n";
  for (const auto& w : outcome.warnings) o << "warning: " << w << "\n";
  return o.str();
}

GateResult gate_dataset(const TableRows& data, const SchemaDef& schema, const std::vector<ReportRow>& rows) {
  GateResult g;
  for (const auto& r : rows)
    if (!r.verdict.passed) g.failed_records.insert(r.scores.record_id);

  // Values of referenced columns that belong to excluded rows.
  std::map<std::pair<std::string, std::string>, std::set<std::string>> gone;
  std::map<std::string, std::set<std::string>, std::less<>> referenced;
  for (const auto& t : schema.tables)
    for (const auto& fk : t.foreign_keys) referenced[fk.target_table].insert(fk.target_column);

  for (const auto& v : build_record_views(data))
    if (g.failed_records.count(v.record_id)) gone[{"hospital_visits", "visit_id"}].insert(std::to_string(v.visit_id));

  for (const auto& name : topological_order(schema)) {
    const auto it = data.find(name);
    if (it == data.end()) continue;
    const TableDef& t = *schema.table(name);
    for (const Row& row : it->second) {
      bool drop = false;
      if (const Value* pk = find_cell(row, t.primary_key); pk && !is_null(*pk)) {
        const auto key = std::make_pair(name, t.primary_key);
        drop = gone.count(key) && gone[key].count(to_display(*pk));
      }
      for (const auto& fk : t.foreign_keys) {
        if (drop) break;
        const Value* v = find_cell(row, fk.column);
        if (!v || is_null(*v)) continue;
        const auto key = std::make_pair(fk.target_table, fk.target_column);
        drop = gone.count(key) && gone[key].count(to_display(*v));
      }
      if (!drop) {
        g.accepted[name].push_back(row);
        continue;
      }
      g.excluded[name].push_back(row);
      if (const auto ref = referenced.find(name); ref != referenced.end())
        for (const auto& c : ref->second)
          if (const Value* v = find_cell(row, c); v && !is_null(*v)) gone[{name, c}].insert(to_display(*v));
    }
  }
  for (const auto& [name, list] : data)
    if (!schema.table(name)) throw SchemaMismatch("dataset table '" + name + "' is not in the schema");
  return g;
}

std::string quarantine_json(const GateResult& gate, const std::vector<ReportRow>& rows, bool include_rows) {
  nlohmann::ordered_json j;
  j["format"] = "ehrsynth-quarantine/1";
  auto records = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    if (r.verdict.passed) continue;
    nlohmann::ordered_json e;
    e["record_id"] = r.scores.record_id;
    e["patient_id"] = r.scores.patient_id;
    e["reasons"] = r.verdict.reasons;
    e["combined_score"] = r.combined_score;
    if (!r.scores.hard_range_details.empty()) e["hard_range"] = r.scores.hard_range_details;
    records.push_back(std::move(e));
  }
  j["records"] = std::move(records);
  std::size_t excluded = 0;
  for (const auto& [_, list] : gate.excluded) excluded += list.size();
  j["excluded_row_count"] = excluded;
  if (include_rows) j["rows"] = table_rows_to_json(gate.excluded);
  return j.dump(1) + "\n";
}

void write_validation_artifacts(const ValidationOutcome& outcome, const PipelineConfig& config,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file((dir / "validation_report.csv").string(), validation_report_csv(outcome.rows));
  write_file((dir / "validation_summary.txt").string(), validation_summary_text(outcome, config));
  for (const auto& [name, bins] : outcome.histograms.files)
    write_file((dir / ("hist_" + name + ".csv")).string(), histogram_csv(bins));
  write_file((dir / "diversity_report.txt").string(), diversity_report_text(outcome.diversity));
  write_file((dir / "diversity_report.csv").string(), diversity_report_csv(outcome.diversity));
}

int run_pipeline(const PipelineOptions& options, std::ostream& log) {
  const auto& config = options.config;
  const auto& out = options.out_dir;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SchemaDef schema = resolve_schema(config);
    Scorers scorers = make_scorers(config.validation);
    std::filesystem::create_directories(out);

    const Cohort cohort = generate_from_config(config, schema);
    save_cohort(cohort, (out / "cohort.json").string());
    const TableRows data = flatten(cohort);
    log << "generate: " << cohort.patients.size() << " patients\n";

    const ValidationOutcome outcome = validate_dataset(data, schema, config, scorers);
    write_validation_artifacts(outcome, config, out);
    log << "validate: " << outcome.rows.size() << " records, " << outcome.failed() << " failed the gate\n";

    const GateResult gate = stage("gate", [&] { return gate_dataset(data, schema, outcome.rows); });
    const auto violations = verify_referential_integrity(gate.accepted, schema);
    if (!violations.empty())
      throw StageError("gate", std::to_string(violations.size()) + " dangling foreign keys after gating, first " +
                                   violations.front().table + "." + violations.front().column + "=" +
                                   violations.front().value);
    write_file((out / "quarantine.json").string(), quarantine_json(gate, outcome.rows, options.quarantine_rows));
    stage("emit-sql", [&] {
      write_file((out / "schema.sql").string(), emit_ddl(schema));
      write_file((out / "gated.sql").string(), emit_inserts(gate.accepted, schema, config.load.batch_rows));
      return 0;
    });

    if (options.load) {
      const std::string url = config.load.resolved_url();
      if (url.empty()) throw ConfigError("load requested but neither load.url nor $" + config.load.url_env + " is set");
      const auto summary = stage("load", [&] {
        return load_database(url, schema, gate.accepted,
                             LoadOptions{config.load.create_schema, config.load.batch_rows});
      });
      log << "load: committed " << summary.total_rows << " rows\n";
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "artifacts written to " << out.string() << " in " << fixed(secs, 1) << " s\n";
    if (options.strict && outcome.failed() > 0) {
      log << "strict: " << outcome.failed() << " record(s) failed validation\n";
      return kExitGateFailures;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StageError& e) {
    log << "stage failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const Error& e) {
    log << "stage failed: " << e.kind() << ": " << e.what() << "\n";
    return kExitStage;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "stage failed: " << e.what() << "\n";
    return kExitStage;
  }
}

}  // namespace ehrsynth
