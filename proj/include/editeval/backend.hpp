#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "editeval/corpus.hpp"
#include "editeval/textmetrics.hpp"

namespace editeval {

enum class AudioTransport { kPath, kBase64 };

struct BackendConfig {
  std::string endpoint;
  std::string model_name = "default";
  double timeout_s = 120.0;
  int max_retries = 3;
  AudioTransport audio_transport = AudioTransport::kPath;
  // Passed through verbatim as the request's "options" (temperature, ...).
  Json options = Json::object();
  // Bearer token; taken from EDITEVAL_API_KEY when unset.
  std::optional<std::string> api_key;
  double backoff_base_s = 1.0;
  double backoff_factor = 2.0;

  void Validate() const;
};

enum class Role { kSystem, kUser, kAssistant };

const char* RoleName(Role role);
std::optional<Role> ParseRole(std::string_view name);

struct ChatTurn {
  Role role = Role::kUser;
  std::string text;
  std::vector<AudioRef> audio;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

Json ChatTurnToJson(const ChatTurn& turn);
ChatTurn ChatTurnFromJson(const Json& j);

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Connection-level failure (refused, timeout, reset). Retried like a 5xx.
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// POSTs a JSON body to a path below the backend endpoint. Implementations
// must be safe to share between worker threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse Post(std::string_view path, const std::string& json_body) = 0;
};

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(BackendConfig config);
  HttpResponse Post(std::string_view path, const std::string& json_body) override;

 private:
  BackendConfig config_;
  std::string origin_;     // scheme://host:port
  std::string base_path_;  // path prefix of the endpoint, no trailing '/'
};

// Deterministic scripted backend used offline and in tests. Script schema:
//   {"chat": [text, ...],        response for the k-th user turn of a
//                                conversation is chat[(k-1) % size]
//    "fail_steps": {"k": status}, HTTP status to return at user turn k
//    "score": {metric: value},    values served by /v1/score
//    "score_status": status}      forces /v1/score to fail
// Responses depend only on the request, never on call order.
class MockTransport : public Transport {
 public:
  explicit MockTransport(Json script);
  static std::unique_ptr<MockTransport> FromFile(const std::filesystem::path& path);
  HttpResponse Post(std::string_view path, const std::string& json_body) override;

 private:
  Json script_;
};

// "mock:<script.json>" selects MockTransport, anything else is an HTTP URL.
std::unique_ptr<Transport> MakeTransport(const std::string& backend_spec,
                                         const BackendConfig& config);

Json BuildChatRequest(const BackendConfig& config, const std::vector<ChatTurn>& turns);

// POST with retries: transport failures and 5xx are retried up to
// max_retries times with exponential backoff; 4xx fails immediately.
// Returns the parsed JSON body. Throws BackendError.
Json PostWithRetry(const BackendConfig& config, Transport& transport, std::string_view path,
                   const Json& body);

// One chat completion. `turns` must be non-empty and end with a user turn.
ChatTurn QueryBackend(const BackendConfig& config, Transport& transport,
                      const std::vector<ChatTurn>& turns);

// ExternalScorer over the backend's /v1/score method.
class BackendScorer : public ExternalScorer {
 public:
  BackendScorer(BackendConfig config, Transport& transport)
      : config_(std::move(config)), transport_(transport) {}

  double Score(std::string_view metric, std::string_view candidate,
               const std::vector<std::string>& references) override;

 private:
  BackendConfig config_;
  Transport& transport_;
};

}  // namespace editeval
