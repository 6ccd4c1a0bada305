#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "pixcurate/image.hpp"
#include "pixcurate/judge.hpp"

namespace pixcurate {

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
};

struct EndpointConfig {
  // Scheme, host, optional port and optional path prefix,
  // e.g. "http://127.0.0.1:8080" or "https://api.example.com/judge".
  std::string base_url;
  int max_in_flight = 4;
  std::chrono::seconds timeout{120};
  // Sent as a bearer token when non-empty.
  std::string api_key;
};

// POSTs JSON and returns the parsed JSON reply. Transport errors, 429 and 5xx
// are retried with exponential backoff; other non-2xx codes fail at once.
// Copies share one in-flight gate.
class JsonEndpoint {
 public:
  explicit JsonEndpoint(EndpointConfig cfg, RetryPolicy policy = {});

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  const EndpointConfig& config() const { return cfg_; }

 private:
  struct Gate;
  EndpointConfig cfg_;
  RetryPolicy policy_;
  std::string origin_;
  std::string prefix_;
  std::shared_ptr<Gate> gate_;
};

// OpenAI-style request body: images become image_url data URIs placed ahead
// of the text; temperature is pinned to 0.
nlohmann::json chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages);

// POST {base}/v1/chat/completions, returns choices[0].message.content.
std::string chat_complete(const JsonEndpoint& endpoint, const std::string& model,
                          const std::vector<ChatMessage>& messages);
std::string chat_complete(const EndpointConfig& endpoint, const std::string& model,
                          const std::vector<ChatMessage>& messages,
                          const RetryPolicy& policy = {});

class JudgeClient {
 public:
  JudgeClient(EndpointConfig cfg, std::string model, RetryPolicy policy = {});

  std::string complete(const std::vector<ChatMessage>& messages) const;

  // Renders the template, calls the endpoint and validates the reply.
  JudgeResult judge(TemplateId id, const std::map<std::string, std::string>& vars,
                    std::vector<ImagePayload> images) const;

 private:
  JsonEndpoint endpoint_;
  std::string model_;
};

// POST {base}/embed with {"id", "image_b64"} or {"text"}; reply {"vector": [...]}.
class EmbedderClient {
 public:
  explicit EmbedderClient(EndpointConfig cfg, RetryPolicy policy = {});

  std::vector<double> embed_image(const std::string& id, const ImageBuffer& img) const;
  std::vector<double> embed_text(const std::string& text) const;

 private:
  JsonEndpoint endpoint_;
};

// POST {base}/score with {"id", "image_b64"}; reply {"score": number}.
class ScorerClient {
 public:
  explicit ScorerClient(EndpointConfig cfg, RetryPolicy policy = {});

  double score(const std::string& id, const ImageBuffer& img) const;

 private:
  JsonEndpoint endpoint_;
};

// POST {base}/flag with {"id", "image_b64"}; reply {"flagged": bool}. Used for
// region- and instance-level artifact checks.
class FlagClient {
 public:
  explicit FlagClient(EndpointConfig cfg, RetryPolicy policy = {});

  bool flagged(const std::string& id, const ImageBuffer& img) const;

 private:
  JsonEndpoint endpoint_;
};

// Reads JUDGE_API_KEY, empty when unset.
std::string judge_api_key_from_env();

}  // namespace pixcurate
