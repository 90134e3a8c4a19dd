#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ehrsynth/backend.hpp"
#include "ehrsynth/coherence.hpp"
#include "ehrsynth/consistency.hpp"
#include "ehrsynth/plausibility.hpp"

namespace ehrsynth {

// Scorer service endpoints: /v1/coherence, /v1/perplexity, /v1/nli.
struct RemoteScorerConfig {
  std::string base_url = "http://127.0.0.1:8808";
  std::string token_env = "EHRSYNTH_SCORER_TOKEN";  // bearer token, if set
  double timeout_seconds = 30.0;
  int retry_limit = 3;          // extra attempts after a transport failure
  std::size_t batch_size = 128;
  int max_in_flight = 4;
};

// Completion endpoint. "native" speaks POST /v1/complete; "openai" maps the
// same call onto POST /v1/chat/completions.
struct RemoteLlmConfig {
  std::string base_url = "http://127.0.0.1:8809";
  std::string token_env = "EHRSYNTH_LLM_TOKEN";
  std::string api_format = "native";
  std::string model;
  double temperature = 0.7;
  double timeout_seconds = 60.0;
  int max_in_flight = 4;
};

// Sends each batch as one request, at most max_in_flight at a time. Transport
// failures and 5xx answers are retried up to retry_limit times, then surface
// as ScorerError, as do malformed or mismatched responses.
class RemoteScorerClient {
 public:
  explicit RemoteScorerClient(RemoteScorerConfig config);
  ~RemoteScorerClient();

  std::vector<double> coherence(const std::vector<SentencePair>& pairs);
  std::vector<double> perplexity(const std::vector<std::string>& texts);
  std::vector<NliLabelDistribution> nli(const std::vector<PremiseHypothesis>& items);

  std::uint64_t requests_sent() const { return requests_; }
  const RemoteScorerConfig& config() const { return config_; }

 private:
  template <typename Item, typename Out, typename Encode, typename Decode>
  std::vector<Out> batched(const std::string& path, const std::vector<Item>& items, Encode encode, Decode decode);

  RemoteScorerConfig config_;
  std::atomic<std::uint64_t> requests_{0};
};

class RemoteCoherenceScorer final : public CoherenceScorer {
 public:
  explicit RemoteCoherenceScorer(std::shared_ptr<RemoteScorerClient> client) : client_(std::move(client)) {}
  std::vector<double> score_pairs(const std::vector<SentencePair>& pairs) override { return client_->coherence(pairs); }

 private:
  std::shared_ptr<RemoteScorerClient> client_;
};

class RemotePerplexityScorer final : public PerplexityScorer {
 public:
  explicit RemotePerplexityScorer(std::shared_ptr<RemoteScorerClient> client) : client_(std::move(client)) {}
  std::vector<double> perplexities(const std::vector<std::string>& texts) override {
    return client_->perplexity(texts);
  }

 private:
  std::shared_ptr<RemoteScorerClient> client_;
};

class RemoteNliClassifier final : public NliClassifier {
 public:
  explicit RemoteNliClassifier(std::shared_ptr<RemoteScorerClient> client) : client_(std::move(client)) {}
  std::vector<NliLabelDistribution> classify(const std::vector<PremiseHypothesis>& pairs) override {
    return client_->nli(pairs);
  }

 private:
  std::shared_ptr<RemoteScorerClient> client_;
};

// One HTTP request per complete() call; any failure is a TransportError so
// the generator's retry loop owns the retry budget.
class RemoteLlmBackend final : public GenerationBackend {
 public:
  explicit RemoteLlmBackend(RemoteLlmConfig config);
  ~RemoteLlmBackend() override;

  std::string complete(const std::string& prompt, std::uint64_t seed, int max_len) override;
  std::string id() const override { return "remote"; }
  std::uint64_t requests_sent() const { return requests_; }

 private:
  struct Limiter;
  RemoteLlmConfig config_;
  std::unique_ptr<Limiter> limiter_;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace ehrsynth
