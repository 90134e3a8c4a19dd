#pragma once

#include <stdexcept>
#include <string>

namespace ehrsynth {

// Base for every error raised by the library. `kind()` is a stable tag used by
// the CLI when reporting which stage failed.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define EHRSYNTH_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

EHRSYNTH_DEFINE_ERROR(CycleError);
EHRSYNTH_DEFINE_ERROR(SchemaError);
EHRSYNTH_DEFINE_ERROR(SchemaMismatch);
EHRSYNTH_DEFINE_ERROR(ParseError);
EHRSYNTH_DEFINE_ERROR(TransportError);
EHRSYNTH_DEFINE_ERROR(ScorerError);
EHRSYNTH_DEFINE_ERROR(EmptyCorpus);
EHRSYNTH_DEFINE_ERROR(EmptyScores);
EHRSYNTH_DEFINE_ERROR(EmptyCounts);
EHRSYNTH_DEFINE_ERROR(EmptyExpected);
EHRSYNTH_DEFINE_ERROR(UnknownRule);
EHRSYNTH_DEFINE_ERROR(UnknownColumn);
EHRSYNTH_DEFINE_ERROR(DimensionMismatch);
EHRSYNTH_DEFINE_ERROR(NoRowsRemaining);
EHRSYNTH_DEFINE_ERROR(IncompleteChecks);
EHRSYNTH_DEFINE_ERROR(ConfigError);
EHRSYNTH_DEFINE_ERROR(ConnectionError);
EHRSYNTH_DEFINE_ERROR(IoError);

#undef EHRSYNTH_DEFINE_ERROR

class MissingPlaceholder : public Error {
 public:
  explicit MissingPlaceholder(std::string key)
      : Error("MissingPlaceholder", "unresolved placeholder {" + key + "}"), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class MissingSubscore : public Error {
 public:
  explicit MissingSubscore(std::string check)
      : Error("MissingSubscore", "missing sub-score: " + check), check_(std::move(check)) {}
  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

class GenerationFailed : public Error {
 public:
  GenerationFailed(std::string table, const std::string& detail, long patient_index = -1)
      : Error("GenerationFailed", format(table, detail, patient_index)),
        table_(std::move(table)),
        patient_index_(patient_index) {}

  const std::string& table() const noexcept { return table_; }
  long patient_index() const noexcept { return patient_index_; }

 private:
  static std::string format(const std::string& table, const std::string& detail, long idx) {
    std::string msg = "generation failed for table '" + table + "'";
    if (idx >= 0) msg += " (patient index " + std::to_string(idx) + ")";
    return msg + ": " + detail;
  }

  std::string table_;
  long patient_index_;
};

}  // namespace ehrsynth
