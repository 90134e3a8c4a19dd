#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ehrsynth {

// Text-completion backend. Implementations must be safe to call from several
// threads at once.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string complete(const std::string& prompt, std::uint64_t seed, int max_len) = 0;
  virtual std::string id() const = 0;
};

struct GrammarOptions {
  // Per-row probability of emitting a deliberately faulty value (impossible
  // vital, allergy-conflicting drug, off-topic sentence, ...). Exercises the
  // validators; 0 disables it.
  double error_rate = 0.03;
};

// Deterministic weighted-choice expansion: a pure function of (prompt, seed)
// for fixed options. Reads the table, field list, and context from the
// rendered prompt and answers with a fenced `record` block.
class GrammarBackend final : public GenerationBackend {
 public:
  explicit GrammarBackend(GrammarOptions options = {}) : options_(options) {}

  std::string complete(const std::string& prompt, std::uint64_t seed, int max_len) override;
  std::string id() const override { return "grammar"; }

 private:
  GrammarOptions options_;
};

// Clinical sentences drawn from the same grammar, used as the reference corpus
// for the built-in language model.
std::vector<std::string> build_reference_corpus(std::uint64_t seed, std::size_t sentences);

}  // namespace ehrsynth
