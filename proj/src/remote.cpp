#include "ehrsynth/remote.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ehrsynth/errors.hpp"

namespace ehrsynth {

namespace {

using json = nlohmann::json;

struct HttpResult {
  bool transport_failed = false;
  int status = 0;
  std::string body;
  std::string error;
};

// "http://host:port/prefix" -> ("http://host:port", "/prefix")
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

std::string env_token(const std::string& name) {
  if (name.empty()) return {};
  const char* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string{};
}

HttpResult post_json(const std::string& base_url, const std::string& path, const std::string& body,
                     const std::string& token, double timeout_seconds) {
  const auto [origin, prefix] = split_url(base_url);
  httplib::Client cli(origin);
  HttpResult r;
  if (!cli.is_valid()) {
    r.transport_failed = true;
    r.error = "invalid endpoint URL '" + base_url + "'";
    return r;
  }
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  if (!token.empty()) cli.set_bearer_token_auth(token);
  auto res = cli.Post(prefix + path, body, "application/json");
  if (!res) {
    r.transport_failed = true;
    r.error = httplib::to_string(res.error());
    return r;
  }
  r.status = res->status;
  r.body = res->body;
  return r;
}

double probability(const json& v, const char* what) {
  if (!v.is_number()) throw ScorerError(std::string(what) + " must be numeric");
  const double p = v.get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw ScorerError(std::string(what) + " outside [0, 1]");
  return p;
}

}  // namespace

RemoteScorerClient::RemoteScorerClient(RemoteScorerConfig config) : config_(std::move(config)) {
  if (config_.batch_size < 1 || config_.batch_size > 128) throw ConfigError("scorer batch size must lie in [1, 128]");
  if (config_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (config_.retry_limit < 0) throw ConfigError("retry_limit must be >= 0");
}

RemoteScorerClient::~RemoteScorerClient() = default;

template <typename Item, typename Out, typename Encode, typename Decode>
std::vector<Out> RemoteScorerClient::batched(const std::string& path, const std::vector<Item>& items, Encode encode,
                                             Decode decode) {
  if (items.empty()) return {};
  const std::size_t n_batches = (items.size() + config_.batch_size - 1) / config_.batch_size;
  std::vector<std::vector<Out>> results(n_batches);
  const std::string token = env_token(config_.token_env);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_batch = n_batches;

  auto run_batch = [&](std::size_t b) {
    const std::size_t lo = b * config_.batch_size, hi = std::min(items.size(), lo + config_.batch_size);
    const std::vector<Item> slice(items.begin() + static_cast<std::ptrdiff_t>(lo),
                                  items.begin() + static_cast<std::ptrdiff_t>(hi));
    const std::string body = encode(slice).dump();
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retry_limit; ++attempt) {
      ++requests_;
      const HttpResult r = post_json(config_.base_url, path, body, token, config_.timeout_seconds);
      if (r.transport_failed) {
        last_error = r.error;
        continue;
      }
      if (r.status >= 500) {
        last_error = "HTTP " + std::to_string(r.status) + ": " + r.body;
        continue;
      }
      if (r.status != 200) throw ScorerError(path + " answered HTTP " + std::to_string(r.status) + ": " + r.body);
      json j;
      try {
        j = json::parse(r.body);
      } catch (const json::exception&) {
        throw ScorerError(path + " returned a body that is not JSON");
      }
      std::vector<Out> out;
      try {
        out = decode(j);
      } catch (const json::exception& e) {
        throw ScorerError(path + " response is malformed: " + e.what());
      }
      if (out.size() != slice.size())
        throw ScorerError(path + " returned " + std::to_string(out.size()) + " results for " +
                          std::to_string(slice.size()) + " inputs");
      results[b] = std::move(out);
      return;
    }
    throw ScorerError(path + " failed after " + std::to_string(config_.retry_limit + 1) + " attempts: " + last_error);
  };
  auto worker = [&] {
    for (std::size_t b = next++; b < n_batches; b = next++) {
      try {
        run_batch(b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (b < first_error_batch) {
          first_error_batch = b;
          first_error = std::current_exception();
        }
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(config_.max_in_flight), n_batches);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  std::vector<Out> flat;
  flat.reserve(items.size());
  for (auto& r : results) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

std::vector<double> RemoteScorerClient::coherence(const std::vector<SentencePair>& pairs) {
  return batched<SentencePair, double>(
      "/v1/coherence", pairs,
      [](const std::vector<SentencePair>& slice) {
        json arr = json::array();
        for (const auto& p : slice) arr.push_back({{"first", p.first}, {"second", p.second}});
        return json{{"pairs", arr}};
      },
      [](const json& j) {
        std::vector<double> out;
        for (const auto& p : j.at("probabilities")) out.push_back(probability(p, "coherence probability"));
        return out;
      });
}

std::vector<double> RemoteScorerClient::perplexity(const std::vector<std::string>& texts) {
  return batched<std::string, double>(
      "/v1/perplexity", texts, [](const std::vector<std::string>& slice) { return json{{"texts", slice}}; },
      [](const json& j) {
        std::vector<double> out;
        for (const auto& p : j.at("perplexities")) {
          if (!p.is_number()) throw ScorerError("perplexity must be numeric");
          out.push_back(p.get<double>());
        }
        return out;
      });
}

std::vector<NliLabelDistribution> RemoteScorerClient::nli(const std::vector<PremiseHypothesis>& items) {
  return batched<PremiseHypothesis, NliLabelDistribution>(
      "/v1/nli", items,
      [](const std::vector<PremiseHypothesis>& slice) {
        json arr = json::array();
        for (const auto& p : slice) arr.push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
        return json{{"items", arr}};
      },
      [](const json& j) {
        std::vector<NliLabelDistribution> out;
        for (const auto& l : j.at("labels"))
          out.push_back(NliLabelDistribution{probability(l.at("entailment"), "entailment"),
                                             probability(l.at("neutral"), "neutral"),
                                             probability(l.at("contradiction"), "contradiction")});
        return out;
      });
}

struct RemoteLlmBackend::Limiter {
  explicit Limiter(int n) : slots(n) {}
  std::counting_semaphore<1024> slots;
};

RemoteLlmBackend::RemoteLlmBackend(RemoteLlmConfig config) : config_(std::move(config)) {
  if (config_.api_format != "native" && config_.api_format != "openai")
    throw ConfigError("unknown completion api format '" + config_.api_format + "' (native|openai)");
  if (config_.max_in_flight < 1 || config_.max_in_flight > 1024) throw ConfigError("max_in_flight must lie in [1, 1024]");
  limiter_ = std::make_unique<Limiter>(config_.max_in_flight);
}

RemoteLlmBackend::~RemoteLlmBackend() = default;

std::string RemoteLlmBackend::complete(const std::string& prompt, std::uint64_t seed, int max_len) {
  json body;
  std::string path;
  // JSON integers top out at int64 for many servers.
  const auto wire_seed = static_cast<std::int64_t>(seed & 0x7fffffffffffffffULL);
  if (config_.api_format == "openai") {
    path = "/v1/chat/completions";
    body = {{"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
            {"max_tokens", max_len},
            {"temperature", config_.temperature},
            {"seed", wire_seed}};
    if (!config_.model.empty()) body["model"] = config_.model;
  } else {
    path = "/v1/complete";
    body = {{"prompt", prompt}, {"max_tokens", max_len}, {"temperature", config_.temperature}, {"seed", wire_seed}};
  }

  limiter_->slots.acquire();
  struct Release {
    Limiter& l;
    ~Release() { l.slots.release(); }
  } release{*limiter_};
  ++requests_;
  const HttpResult r = post_json(config_.base_url, path, body.dump(), env_token(config_.token_env),
                                 config_.timeout_seconds);
  if (r.transport_failed) throw TransportError("completion request failed: " + r.error);
  if (r.status != 200) throw TransportError("completion endpoint answered HTTP " + std::to_string(r.status));
  try {
    const json j = json::parse(r.body);
    if (config_.api_format == "openai") return j.at("choices").at(0).at("message").at("content").get<std::string>();
    return j.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("completion response is malformed: ") + e.what());
  }
}

}  // namespace ehrsynth
