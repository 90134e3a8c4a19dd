#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ehrsynth/errors.hpp"
#include "ehrsynth/remote.hpp"

using namespace ehrsynth;
using json = nlohmann::json;

namespace {

// Scorer mock: answers every endpoint from the request contents so batching
// and ordering mistakes show up as wrong values.
class MockServer {
 public:
  MockServer() {
    server_.Post("/v1/coherence", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res)) return;
      const auto body = json::parse(req.body);
      json probs = json::array();
      for (const auto& p : body.at("pairs"))
        probs.push_back(static_cast<double>(p.at("first").get<std::string>().size() % 10) / 10.0);
      if (short_answer) probs.erase(probs.begin());
      res.set_content(json{{"probabilities", probs}}.dump(), "application/json");
    });
    server_.Post("/v1/perplexity", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res)) return;
      if (garbage) {
        res.set_content("not json", "application/json");
        return;
      }
      const auto body = json::parse(req.body);
      json out = json::array();
      for (const auto& t : body.at("texts")) out.push_back(static_cast<double>(t.get<std::string>().size()));
      res.set_content(json{{"perplexities", out}}.dump(), "application/json");
    });
    server_.Post("/v1/nli", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res)) return;
      const auto body = json::parse(req.body);
      json out = json::array();
      for (const auto& item : body.at("items")) {
        const bool conflict = item.at("premise").get<std::string>().find("penicillin") != std::string::npos;
        out.push_back(conflict ? json{{"entailment", 0.01}, {"neutral", 0.01}, {"contradiction", 0.98}}
                               : json{{"entailment", 0.9}, {"neutral", 0.05}, {"contradiction", 0.05}});
      }
      res.set_content(json{{"labels", out}}.dump(), "application/json");
    });
    server_.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res)) return;
      const auto body = json::parse(req.body);
      last_body = body;
      res.set_content(json{{"text", "echo:" + body.at("prompt").get<std::string>()}}.dump(), "application/json");
    });
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admit(req, res)) return;
      const auto body = json::parse(req.body);
      last_body = body;
      const auto content = body.at("messages").at(0).at("content").get<std::string>();
      res.set_content(json{{"choices", json::array({{{"message", {{"content", "chat:" + content}}}}})}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> requests{0};
  std::atomic<int> fail_first{0};   // answer 503 this many times
  std::atomic<int> status_override{0};
  std::atomic<std::size_t> max_batch{0};
  bool short_answer = false;
  bool garbage = false;
  std::string required_token;
  std::string seen_auth;
  json last_body;

 private:
  bool admit(const httplib::Request& req, httplib::Response& res) {
    ++requests;
    {
      std::lock_guard lock(mutex_);
      seen_auth = req.get_header_value("Authorization");
    }
    if (!required_token.empty() && req.get_header_value("Authorization") != "Bearer " + required_token) {
      res.status = 401;
      return false;
    }
    const auto body = json::parse(req.body, nullptr, false);
    for (const char* key : {"pairs", "texts", "items"})
      if (!body.is_discarded() && body.contains(key)) {
        std::size_t n = body.at(key).size(), cur = max_batch;
        while (n > cur && !max_batch.compare_exchange_weak(cur, n)) {
        }
      }
    if (fail_first > 0) {
      --fail_first;
      res.status = 503;
      res.set_content("busy", "text/plain");
      return false;
    }
    if (status_override) {
      res.status = status_override;
      res.set_content(R"({"error":"bad request"})", "application/json");
      return false;
    }
    return true;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
};

RemoteScorerConfig config_for(const MockServer& m) {
  RemoteScorerConfig c;
  c.base_url = m.url();
  c.token_env = "EHRSYNTH_TEST_UNSET_TOKEN";
  c.timeout_seconds = 5;
  return c;
}

std::vector<std::string> texts(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(i % 40 + 1, 'w'));
  return out;
}

}  // namespace

TEST(Remote, PerplexityBatchesAndKeepsOrder) {
  MockServer m;
  RemoteScorerClient client(config_for(m));
  const auto in = texts(300);
  const auto out = client.perplexity(in);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out[i], static_cast<double>(in[i].size()));
  EXPECT_EQ(m.requests, 3);
  EXPECT_EQ(m.max_batch, 128u);
  EXPECT_TRUE(client.perplexity({}).empty());
}

TEST(Remote, CoherenceAndNliWireFormat) {
  MockServer m;
  RemoteScorerClient client(config_for(m));
  const auto probs = client.coherence({{"abc", "x", "", ""}, {"abcdefg", "y", "", ""}});
  EXPECT_EQ(probs, (std::vector<double>{0.3, 0.7}));
  const auto labels = client.nli({{"the patient is allergic to penicillin", "the patient is prescribed amoxicillin safely",
                                   "R1", {}},
                                  {"the patient is allergic to latex", "the patient is prescribed ibuprofen safely",
                                   "R1", {}}});
  ASSERT_EQ(labels.size(), 2u);
  EXPECT_EQ(labels[0].argmax(), NliLabel::contradiction);
  EXPECT_EQ(labels[1].argmax(), NliLabel::entailment);

  RemoteNliClassifier classifier(std::make_shared<RemoteScorerClient>(config_for(m)));
  EXPECT_EQ(classifier.classify({{"p penicillin", "h", "R1", {}}})[0].argmax(), NliLabel::contradiction);
}

TEST(Remote, ServerErrorsAreRetried) {
  MockServer m;
  m.fail_first = 2;
  RemoteScorerClient client(config_for(m));
  EXPECT_EQ(client.perplexity({"abc"}), (std::vector<double>{3.0}));
  EXPECT_EQ(m.requests, 3);

  m.fail_first = 10;
  auto cfg = config_for(m);
  cfg.retry_limit = 1;
  RemoteScorerClient limited(cfg);
  EXPECT_THROW(limited.perplexity({"abc"}), ScorerError);
  EXPECT_EQ(limited.requests_sent(), 2u);
}

TEST(Remote, ClientErrorsAndBadBodiesFailFast) {
  MockServer m;
  m.status_override = 400;
  RemoteScorerClient client(config_for(m));
  EXPECT_THROW(client.perplexity({"abc"}), ScorerError);
  EXPECT_EQ(client.requests_sent(), 1u);

  m.status_override = 0;
  m.garbage = true;
  EXPECT_THROW(client.perplexity({"abc"}), ScorerError);
  m.garbage = false;
  m.short_answer = true;
  EXPECT_THROW(client.coherence({{"a", "b", "", ""}, {"c", "d", "", ""}}), ScorerError);
}

TEST(Remote, UnreachableServerIsScorerError) {
  RemoteScorerConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.retry_limit = 1;
  c.timeout_seconds = 1;
  RemoteScorerClient client(c);
  EXPECT_THROW(client.coherence({{"a", "b", "", ""}}), ScorerError);
  EXPECT_EQ(client.requests_sent(), 2u);
}

TEST(Remote, BearerTokenFromEnvironment) {
  MockServer m;
  m.required_token = "s3cret";
  auto cfg = config_for(m);
  cfg.token_env = "EHRSYNTH_TEST_SCORER_TOKEN";
  ::setenv("EHRSYNTH_TEST_SCORER_TOKEN", "s3cret", 1);
  RemoteScorerClient client(cfg);
  EXPECT_EQ(client.perplexity({"ab"}), (std::vector<double>{2.0}));
  ::setenv("EHRSYNTH_TEST_SCORER_TOKEN", "wrong", 1);
  EXPECT_THROW(client.perplexity({"ab"}), ScorerError);
  ::unsetenv("EHRSYNTH_TEST_SCORER_TOKEN");
}

TEST(Remote, ConfigBounds) {
  RemoteScorerConfig c;
  c.batch_size = 129;
  EXPECT_THROW(RemoteScorerClient{c}, ConfigError);
  c.batch_size = 0;
  EXPECT_THROW(RemoteScorerClient{c}, ConfigError);
  RemoteLlmConfig l;
  l.api_format = "grpc";
  EXPECT_THROW(RemoteLlmBackend{l}, ConfigError);
}

TEST(Remote, NativeCompletion) {
  MockServer m;
  RemoteLlmConfig c;
  c.base_url = m.url();
  c.token_env = "";
  RemoteLlmBackend backend(c);
  EXPECT_EQ(backend.complete("hello", 77, 256), "echo:hello");
  EXPECT_EQ(m.last_body.at("seed").get<std::int64_t>(), 77);
  EXPECT_EQ(m.last_body.at("max_tokens").get<int>(), 256);
  EXPECT_EQ(backend.id(), "remote");
}

TEST(Remote, OpenAiCompletion) {
  MockServer m;
  RemoteLlmConfig c;
  c.base_url = m.url();
  c.token_env = "";
  c.api_format = "openai";
  c.model = "some-model";
  RemoteLlmBackend backend(c);
  EXPECT_EQ(backend.complete("hi", 1, 64), "chat:hi");
  EXPECT_EQ(m.last_body.at("model").get<std::string>(), "some-model");
}

TEST(Remote, CompletionFailuresAreTransportErrors) {
  MockServer m;
  m.fail_first = 1;
  RemoteLlmConfig c;
  c.base_url = m.url();
  c.token_env = "";
  RemoteLlmBackend backend(c);
  EXPECT_THROW(backend.complete("x", 1, 10), TransportError);
  EXPECT_EQ(backend.complete("x", 1, 10), "echo:x");
  c.base_url = "http://127.0.0.1:1";
  c.timeout_seconds = 1;
  RemoteLlmBackend dead(c);
  EXPECT_THROW(dead.complete("x", 1, 10), TransportError);
}
