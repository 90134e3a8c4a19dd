#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ehrsynth/cohort_io.hpp"
#include "ehrsynth/config.hpp"
#include "ehrsynth/errors.hpp"
#include "ehrsynth/backend.hpp"
#include "ehrsynth/load.hpp"
#include "ehrsynth/pipeline.hpp"
#include "ehrsynth/schema_io.hpp"
#include "ehrsynth/text.hpp"

namespace fs = std::filesystem;
using namespace ehrsynth;

namespace {

// Flags that mirror config keys; set flags win over the file.
struct Overrides {
  std::string config_path;
  std::optional<int> patients;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<double> error_rate;
  std::optional<unsigned> workers;
  std::optional<std::string> scorers;
  std::optional<double> coherence_threshold;
  std::optional<double> percentile;
  std::optional<int> epochs;
  std::optional<int> bins;

  PipelineConfig resolve() const {
    PipelineConfig c = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (patients) {
      if (*patients < 1) throw ConfigError("--patients must be >= 1");
      c.generation.patients = *patients;
    }
    if (seed) c.generation.seed = *seed;
    if (backend) c.generation.backend = *backend;
    if (error_rate) c.generation.error_rate = *error_rate;
    if (workers) c.generation.engine.workers = *workers;
    if (scorers) c.validation.scorers = *scorers;
    if (coherence_threshold) c.validation.coherence_threshold = *coherence_threshold;
    if (percentile) c.validation.percentile = *percentile;
    if (epochs) c.anomaly.training.epochs = *epochs;
    if (bins) c.scoring.histogram_bins = *bins;
    return c;
  }
};

void add_config(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "INI config file");
}

void add_generation(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--patients", o.patients, "number of patients");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--backend", o.backend, "generation backend")->check(CLI::IsMember({"grammar", "remote"}));
  cmd->add_option("--error-rate", o.error_rate, "grammar backend fault-injection rate")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--workers", o.workers, "parallel generation workers")->check(CLI::PositiveNumber);
}

void add_validation(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--scorers", o.scorers, "scorer backends")->check(CLI::IsMember({"builtin", "remote"}));
  cmd->add_option("--coherence-threshold", o.coherence_threshold, "flag records whose mean P(IsNext) is below this")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--percentile", o.percentile, "perplexity percentile threshold")->check(CLI::Range(0.0, 100.0));
  cmd->add_option("--epochs", o.epochs, "autoencoder epochs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--bins", o.bins, "histogram bins")->check(CLI::PositiveNumber);
}

int guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StageError& e) {
    std::cerr << "stage failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const Error& e) {
    std::cerr << "stage failed: " << e.kind() << ": " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
}

TableRows read_dataset(const std::string& cohort_path) {
  try {
    return flatten(load_cohort(cohort_path));
  } catch (const Error& e) {
    throw StageError("read-cohort", e.what());
  }
}

std::optional<std::vector<ReportRow>> read_report(const std::string& path) {
  if (path.empty()) return std::nullopt;
  try {
    return parse_validation_report_csv(read_file(path));
  } catch (const Error& e) {
    throw StageError("read-report", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic EHR generation, validation and SQL loading"};
  app.require_subcommand(1);
  Overrides o;
  std::string out = "out";
  std::string cohort_path;
  std::string report_path;
  bool strict = false;
  bool quarantine = false;
  bool do_load = false;

  auto* gen = app.add_subcommand("generate", "generate a cohort file");
  add_config(gen, o);
  add_generation(gen, o);
  gen->add_option("--out", out, "output directory");

  auto* val = app.add_subcommand("validate", "score a cohort and write the validation report");
  add_config(val, o);
  add_validation(val, o);
  val->add_option("--cohort", cohort_path, "cohort file (default <out>/cohort.json)");
  val->add_option("--out", out, "output directory");
  val->add_flag("--strict", strict, "exit 1 if any record fails the gate");

  auto* rep = app.add_subcommand("report", "rebuild histograms and summary from a validation report");
  add_config(rep, o);
  rep->add_option("--bins", o.bins, "histogram bins")->check(CLI::PositiveNumber);
  rep->add_option("--report", report_path, "validation report CSV (default <out>/validation_report.csv)");
  rep->add_option("--out", out, "output directory");

  auto* sql = app.add_subcommand("emit-sql", "write DDL and INSERT statements for a cohort");
  add_config(sql, o);
  sql->add_option("--cohort", cohort_path, "cohort file (default <out>/cohort.json)");
  sql->add_option("--report", report_path, "gate with this validation report");
  sql->add_flag("--quarantine", quarantine, "include excluded rows in quarantine.json");
  sql->add_option("--out", out, "output directory");

  auto* ld = app.add_subcommand("load", "load a cohort into PostgreSQL (URL from the environment or config)");
  add_config(ld, o);
  ld->add_option("--cohort", cohort_path, "cohort file (default <out>/cohort.json)");
  ld->add_option("--report", report_path, "gate with this validation report");
  ld->add_option("--out", out, "directory holding the cohort");

  auto* pipe = app.add_subcommand("pipeline", "generate, validate, report, gate and emit SQL");
  add_config(pipe, o);
  add_generation(pipe, o);
  add_validation(pipe, o);
  pipe->add_option("--out", out, "output directory");
  pipe->add_flag("--strict", strict, "exit 1 if any record fails the gate");
  pipe->add_flag("--quarantine", quarantine, "include excluded rows in quarantine.json");
  pipe->add_flag("--load", do_load, "also load the gated rows into PostgreSQL");

  auto* sch = app.add_subcommand("schema", "write the schema as SQL DDL and JSON");
  add_config(sch, o);
  sch->add_option("--out", out, "output directory");

  std::string corpus_out = default_corpus_path();
  std::size_t sentences = 10000;
  std::uint64_t corpus_seed = 20240630;
  auto* cor = app.add_subcommand("corpus", "regenerate the reference corpus for the built-in language model");
  cor->add_option("--out", corpus_out, "corpus file");
  cor->add_option("--sentences", sentences, "sentence count")->check(CLI::PositiveNumber);
  cor->add_option("--seed", corpus_seed, "corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const fs::path dir(out);
  auto cohort_file = [&] { return cohort_path.empty() ? (dir / "cohort.json").string() : cohort_path; };

  if (*gen) {
    return guarded([&] {
      const auto config = o.resolve();
      const auto schema = resolve_schema(config);
      const auto cohort = generate_from_config(config, schema);
      fs::create_directories(dir);
      save_cohort(cohort, (dir / "cohort.json").string());
      std::cout << "wrote " << (dir / "cohort.json").string() << " (" << cohort.patients.size() << " patients)\n";
      return kExitOk;
    });
  }
  if (*val) {
    return guarded([&] {
      const auto config = o.resolve();
      const auto schema = resolve_schema(config);
      auto scorers = make_scorers(config.validation);
      const auto data = read_dataset(cohort_file());
      const auto outcome = validate_dataset(data, schema, config, scorers);
      write_validation_artifacts(outcome, config, dir);
      std::cout << outcome.rows.size() << " records, " << outcome.failed() << " failed the gate\n";
      return strict && outcome.failed() > 0 ? kExitGateFailures : kExitOk;
    });
  }
  if (*rep) {
    return guarded([&] {
      const auto config = o.resolve();
      const auto rows = *read_report(report_path.empty() ? (dir / "validation_report.csv").string() : report_path);
      if (rows.empty()) throw StageError("report", "validation report has no records");
      const auto hist = build_histograms(rows, config.scoring.histogram_bins);
      fs::create_directories(dir);
      for (const auto& [name, bins] : hist.files)
        write_file((dir / ("hist_" + name + ".csv")).string(), histogram_csv(bins));
      const auto summary = validation_summary_text(rows);
      write_file((dir / "report_summary.txt").string(), summary);
      std::cout << summary;
      return kExitOk;
    });
  }
  if (*sql) {
    return guarded([&] {
      const auto config = o.resolve();
      const auto schema = resolve_schema(config);
      const auto data = read_dataset(cohort_file());
      fs::create_directories(dir);
      write_file((dir / "schema.sql").string(), emit_ddl(schema));
      if (const auto rows = read_report(report_path)) {
        const auto gate = gate_dataset(data, schema, *rows);
        write_file((dir / "gated.sql").string(), emit_inserts(gate.accepted, schema, config.load.batch_rows));
        write_file((dir / "quarantine.json").string(), quarantine_json(gate, *rows, quarantine));
        std::cout << "wrote gated.sql (" << gate.failed_records.size() << " records excluded)\n";
      } else {
        write_file((dir / "inserts.sql").string(), emit_inserts(data, schema, config.load.batch_rows));
        std::cout << "wrote inserts.sql (ungated)\n";
      }
      return kExitOk;
    });
  }
  if (*ld) {
    return guarded([&] {
      const auto config = o.resolve();
      const auto schema = resolve_schema(config);
      const auto url = config.load.resolved_url();
      if (url.empty()) throw ConfigError("set $" + config.load.url_env + " or load.url to a PostgreSQL connection URL");
      auto data = read_dataset(cohort_file());
      if (const auto rows = read_report(report_path)) data = gate_dataset(data, schema, *rows).accepted;
      const auto summary = load_database(url, schema, data, LoadOptions{config.load.create_schema, config.load.batch_rows});
      for (const auto& [table, n] : summary.rows_per_table) std::cout << table << ": " << n << "\n";
      std::cout << "committed " << summary.total_rows << " rows\n";
      return kExitOk;
    });
  }
  if (*pipe) {
    return guarded([&] {
      PipelineOptions p;
      p.config = o.resolve();
      p.out_dir = dir;
      p.strict = strict;
      p.quarantine_rows = quarantine;
      p.load = do_load;
      return run_pipeline(p, std::cout);
    });
  }
  if (*sch) {
    return guarded([&] {
      const auto schema = resolve_schema(o.resolve());
      fs::create_directories(dir);
      write_file((dir / "schema.sql").string(), emit_ddl(schema));
      save_schema(schema, dir / "schema.json");
      std::cout << "wrote schema.sql and schema.json (" << schema.tables.size() << " tables)\n";
      return kExitOk;
    });
  }
  if (*cor) {
    return guarded([&] {
      std::string text;
      for (const auto& s : build_reference_corpus(corpus_seed, sentences)) text += s + "\n";
      write_file(corpus_out, text);
      std::cout << "wrote " << sentences << " sentences to " << corpus_out << "\n";
      return kExitOk;
    });
  }
  return kExitConfig;
}
