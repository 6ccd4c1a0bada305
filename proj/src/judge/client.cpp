#include "pixcurate/client.hpp"

#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "pixcurate/errors.hpp"

namespace pixcurate {

struct JsonEndpoint::Gate {
  explicit Gate(int limit) : free(limit) {}
  std::mutex mu;
  std::condition_variable cv;
  int free;
};

namespace {

class GateSlot {
 public:
  GateSlot(std::mutex& mu, std::condition_variable& cv, int& free) : mu_(mu), cv_(cv), free_(free) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  ~GateSlot() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }
  GateSlot(const GateSlot&) = delete;
  GateSlot& operator=(const GateSlot&) = delete;

 private:
  std::mutex& mu_;
  std::condition_variable& cv_;
  int& free_;
};

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

JsonEndpoint::JsonEndpoint(EndpointConfig cfg, RetryPolicy policy)
    : cfg_(std::move(cfg)), policy_(policy) {
  if (cfg_.base_url.empty()) throw ValidationError("endpoint URL is empty");
  if (cfg_.max_in_flight < 1) throw ValidationError("max_in_flight must be at least 1");
  if (policy_.max_attempts < 1) throw ValidationError("retry max_attempts must be at least 1");
  const auto scheme = cfg_.base_url.find("://");
  if (scheme == std::string::npos) {
    throw ValidationError("endpoint URL '" + cfg_.base_url + "' lacks a scheme");
  }
  const auto slash = cfg_.base_url.find('/', scheme + 3);
  origin_ = cfg_.base_url.substr(0, slash);
  if (slash != std::string::npos) prefix_ = cfg_.base_url.substr(slash);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  gate_ = std::make_shared<Gate>(cfg_.max_in_flight);
}

nlohmann::json JsonEndpoint::post(const std::string& path, const nlohmann::json& body) const {
  const std::string payload = body.dump();
  const std::string target = prefix_ + path;
  std::string last_error;
  auto delay = std::chrono::duration<double, std::milli>(policy_.base_delay);
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(delay);
      delay *= policy_.factor;
    }
    httplib::Result res;
    {
      GateSlot slot(gate_->mu, gate_->cv, gate_->free);
      httplib::Client client(origin_);
      client.set_connection_timeout(cfg_.timeout);
      client.set_read_timeout(cfg_.timeout);
      client.set_write_timeout(cfg_.timeout);
      if (!cfg_.api_key.empty()) client.set_bearer_token_auth(cfg_.api_key);
      res = client.Post(target, payload, "application/json");
    }
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error&) {
        throw EndpointError(origin_ + target + " returned a non-JSON body");
      }
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable(res->status)) {
      throw EndpointError(origin_ + target + " failed with " + last_error);
    }
  }
  throw EndpointError(origin_ + target + " failed after " + std::to_string(policy_.max_attempts) +
                      " attempts (" + last_error + ")");
}

nlohmann::json chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    nlohmann::json content = nlohmann::json::array();
    for (const auto& img : m.images) {
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:" + img.mime + ";base64," + img.base64}}}});
    }
    content.push_back({{"type", "text"}, {"text", m.text}});
    msgs.push_back({{"role", m.role}, {"content", std::move(content)}});
  }
  return {{"model", model}, {"messages", std::move(msgs)}, {"temperature", 0}};
}

std::string chat_complete(const JsonEndpoint& endpoint, const std::string& model,
                          const std::vector<ChatMessage>& messages) {
  const auto reply = endpoint.post("/v1/chat/completions", chat_request_body(model, messages));
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw EndpointError("chat reply lacks choices[0].message.content");
  }
}

std::string chat_complete(const EndpointConfig& endpoint, const std::string& model,
                          const std::vector<ChatMessage>& messages, const RetryPolicy& policy) {
  return chat_complete(JsonEndpoint(endpoint, policy), model, messages);
}

JudgeClient::JudgeClient(EndpointConfig cfg, std::string model, RetryPolicy policy)
    : endpoint_(std::move(cfg), policy), model_(std::move(model)) {
  if (model_.empty()) throw ValidationError("judge model name is empty");
}

std::string JudgeClient::complete(const std::vector<ChatMessage>& messages) const {
  return chat_complete(endpoint_, model_, messages);
}

JudgeResult JudgeClient::judge(TemplateId id, const std::map<std::string, std::string>& vars,
                               std::vector<ImagePayload> images) const {
  return extract_judge_json(complete(render_prompt(id, vars, std::move(images))), id);
}

namespace {

std::vector<double> read_vector(const nlohmann::json& reply) {
  const auto it = reply.find("vector");
  if (it == reply.end() || !it->is_array() || it->empty()) {
    throw EndpointError("embedder reply lacks a non-empty \"vector\"");
  }
  std::vector<double> v;
  v.reserve(it->size());
  for (const auto& x : *it) {
    if (!x.is_number()) throw EndpointError("embedder vector holds a non-number");
    v.push_back(x.get<double>());
  }
  return v;
}

nlohmann::json image_body(const std::string& id, const ImageBuffer& img) {
  return {{"id", id}, {"image_b64", png_payload(img).base64}};
}

}  // namespace

EmbedderClient::EmbedderClient(EndpointConfig cfg, RetryPolicy policy)
    : endpoint_(std::move(cfg), policy) {}

std::vector<double> EmbedderClient::embed_image(const std::string& id, const ImageBuffer& img) const {
  return read_vector(endpoint_.post("/embed", image_body(id, img)));
}

std::vector<double> EmbedderClient::embed_text(const std::string& text) const {
  return read_vector(endpoint_.post("/embed", {{"text", text}}));
}

ScorerClient::ScorerClient(EndpointConfig cfg, RetryPolicy policy)
    : endpoint_(std::move(cfg), policy) {}

double ScorerClient::score(const std::string& id, const ImageBuffer& img) const {
  const auto reply = endpoint_.post("/score", image_body(id, img));
  const auto it = reply.find("score");
  if (it == reply.end() || !it->is_number() || !std::isfinite(it->get<double>())) {
    throw EndpointError("scorer reply lacks a finite \"score\"");
  }
  return it->get<double>();
}

FlagClient::FlagClient(EndpointConfig cfg, RetryPolicy policy) : endpoint_(std::move(cfg), policy) {}

bool FlagClient::flagged(const std::string& id, const ImageBuffer& img) const {
  const auto reply = endpoint_.post("/flag", image_body(id, img));
  const auto it = reply.find("flagged");
  if (it == reply.end() || !it->is_boolean()) throw EndpointError("flag reply lacks \"flagged\"");
  return it->get<bool>();
}

std::string judge_api_key_from_env() {
  const char* key = std::getenv("JUDGE_API_KEY");
  return key ? key : "";
}

}  // namespace pixcurate
