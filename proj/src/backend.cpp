#include "editeval/backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "editeval/error.hpp"
#include "editeval/fsutil.hpp"

namespace editeval {
namespace {

std::string AudioFormat(const std::string& uri) {
  auto ext = std::filesystem::path(uri).extension().string();
  if (ext.size() > 1) {
    std::string f = ext.substr(1);
    for (auto& c : f) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return f;
  }
  return "wav";
}

Json AudioPayload(const AudioRef& ref, AudioTransport transport) {
  Json a;
  if (transport == AudioTransport::kBase64) {
    a["base64"] = httplib::detail::base64_encode(ReadFile(ref.uri));
  } else {
    a["uri"] = ref.uri;
  }
  a["format"] = AudioFormat(ref.uri);
  return a;
}

std::optional<std::string> ResolveApiKey(const BackendConfig& config) {
  if (config.api_key) return config.api_key;
  if (const char* env = std::getenv("EDITEVAL_API_KEY"); env && *env) return std::string(env);
  return std::nullopt;
}

}  // namespace

void BackendConfig::Validate() const {
  if (!(timeout_s > 0)) throw Error(ErrorCode::kSchema, "timeout_s must be > 0");
  if (max_retries < 0) throw Error(ErrorCode::kSchema, "max_retries must be >= 0");
  if (backoff_base_s < 0 || backoff_factor < 1) {
    throw Error(ErrorCode::kSchema, "invalid backoff parameters");
  }
}

const char* RoleName(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "";
}

std::optional<Role> ParseRole(std::string_view name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  return std::nullopt;
}

Json ChatTurnToJson(const ChatTurn& turn) {
  Json audio = Json::array();
  for (const auto& a : turn.audio) audio.push_back(a.uri);
  return Json{{"role", RoleName(turn.role)}, {"text", turn.text}, {"audio", audio}};
}

ChatTurn ChatTurnFromJson(const Json& j) {
  ChatTurn t;
  auto role = ParseRole(j.at("role").get<std::string>());
  if (!role) throw Error(ErrorCode::kSchema, "unknown role");
  t.role = *role;
  t.text = j.at("text").get<std::string>();
  if (auto it = j.find("audio"); it != j.end()) {
    for (const auto& a : *it) t.audio.push_back(AudioRef{a.get<std::string>(), std::nullopt});
  }
  return t;
}

HttpTransport::HttpTransport(BackendConfig config) : config_(std::move(config)) {
  config_.Validate();
  const std::string& url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kSchema, "backend endpoint must be an http(s) URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    base_path_ = url.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }
}

HttpResponse HttpTransport::Post(std::string_view path, const std::string& json_body) {
  httplib::Client client(origin_);
  auto seconds = static_cast<time_t>(config_.timeout_s);
  auto micros = static_cast<time_t>((config_.timeout_s - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  httplib::Headers headers;
  if (auto key = ResolveApiKey(config_)) headers.emplace("Authorization", "Bearer " + *key);
  auto res = client.Post(base_path_ + std::string(path), headers, json_body, "application/json");
  if (!res) throw TransportFailure(httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body};
}

MockTransport::MockTransport(Json script) : script_(std::move(script)) {
  if (!script_.is_object()) throw Error(ErrorCode::kSchema, "mock script must be a JSON object");
}

std::unique_ptr<MockTransport> MockTransport::FromFile(const std::filesystem::path& path) {
  Json script;
  try {
    script = Json::parse(ReadFile(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, "mock script " + path.string() + ": " + e.what());
  }
  return std::make_unique<MockTransport>(std::move(script));
}

HttpResponse MockTransport::Post(std::string_view path, const std::string& json_body) {
  Json req = Json::parse(json_body, nullptr, false);
  if (req.is_discarded()) return {400, R"({"error":"bad json"})"};

  if (path == "/v1/chat") {
    std::size_t user_turns = 0;
    for (const auto& m : req.value("messages", Json::array())) {
      if (m.value("role", "") == "user") ++user_turns;
    }
    if (auto f = script_.find("fail_steps"); f != script_.end()) {
      auto it = f->find(std::to_string(user_turns));
      if (it != f->end()) return {it->get<int>(), R"({"error":"scripted failure"})"};
    }
    const Json& chat = script_.value("chat", Json::array());
    if (chat.empty() || user_turns == 0) return {404, R"({"error":"no scripted response"})"};
    const Json& text = chat[(user_turns - 1) % chat.size()];
    return {200, Json{{"text", text}}.dump()};
  }
  if (path == "/v1/score") {
    if (auto s = script_.find("score_status"); s != script_.end()) {
      return {s->get<int>(), R"({"error":"scripted failure"})"};
    }
    auto scores = script_.value("score", Json::object());
    auto it = scores.find(req.value("metric", ""));
    if (it == scores.end()) return {404, R"({"error":"unknown metric"})"};
    return {200, Json{{"value", *it}}.dump()};
  }
  return {404, R"({"error":"unknown path"})"};
}

std::unique_ptr<Transport> MakeTransport(const std::string& backend_spec,
                                         const BackendConfig& config) {
  constexpr std::string_view kMock = "mock:";
  if (backend_spec.rfind(kMock, 0) == 0) {
    return MockTransport::FromFile(backend_spec.substr(kMock.size()));
  }
  BackendConfig c = config;
  c.endpoint = backend_spec;
  return std::make_unique<HttpTransport>(std::move(c));
}

Json BuildChatRequest(const BackendConfig& config, const std::vector<ChatTurn>& turns) {
  Json messages = Json::array();
  for (const auto& t : turns) {
    Json audio = Json::array();
    for (const auto& a : t.audio) audio.push_back(AudioPayload(a, config.audio_transport));
    messages.push_back(Json{{"role", RoleName(t.role)}, {"text", t.text}, {"audio", audio}});
  }
  return Json{{"model", config.model_name}, {"messages", messages}, {"options", config.options}};
}

Json PostWithRetry(const BackendConfig& config, Transport& transport, std::string_view path,
                   const Json& body) {
  const std::string payload = body.dump();
  const int max_attempts = config.max_retries + 1;
  int last_status = 0;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      double delay = config.backoff_base_s * std::pow(config.backoff_factor, attempt - 2);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    HttpResponse res;
    try {
      res = transport.Post(path, payload);
    } catch (const TransportFailure& e) {
      last_status = 0;
      last_error = e.what();
      continue;
    }
    last_status = res.status;
    if (res.status >= 200 && res.status < 300) {
      Json parsed = Json::parse(res.body, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        throw BackendError(res.status, attempt, "backend returned a non-JSON body");
      }
      return parsed;
    }
    last_error = "HTTP " + std::to_string(res.status);
    if (res.status < 500) throw BackendError(res.status, attempt, last_error);
  }
  throw BackendError(last_status, max_attempts,
                     "giving up after " + std::to_string(max_attempts) + " attempts: " + last_error);
}

ChatTurn QueryBackend(const BackendConfig& config, Transport& transport,
                      const std::vector<ChatTurn>& turns) {
  if (turns.empty() || turns.back().role != Role::kUser) {
    throw Error(ErrorCode::kSchema, "conversation must end with a user turn");
  }
  Json reply = PostWithRetry(config, transport, "/v1/chat", BuildChatRequest(config, turns));
  auto it = reply.find("text");
  if (it == reply.end() || !it->is_string()) {
    throw BackendError(200, 1, "backend reply lacks a 'text' field");
  }
  return ChatTurn{Role::kAssistant, it->get<std::string>(), {}};
}

double BackendScorer::Score(std::string_view metric, std::string_view candidate,
                            const std::vector<std::string>& references) {
  Json body{{"metric", metric}, {"candidate", candidate}, {"references", references}};
  try {
    Json reply = PostWithRetry(config_, transport_, "/v1/score", body);
    auto it = reply.find("value");
    if (it == reply.end() || !it->is_number()) {
      throw Error(ErrorCode::kExternalScorerUnavailable, "scorer reply lacks 'value'");
    }
    return it->get<double>();
  } catch (const BackendError& e) {
    throw Error(ErrorCode::kExternalScorerUnavailable, e.what());
  }
}

}  // namespace editeval
