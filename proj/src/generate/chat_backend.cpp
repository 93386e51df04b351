#include "mitiforge/chat_backend.hpp"

#include <chrono>
#include <thread>

#include "json.hpp"
#include "mitiforge/error.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::llm {

using nlohmann::json;

std::string prompt_key(const std::string& prompt) { return text::sha256_hex(prompt); }

HttpChatBackend::HttpChatBackend(HttpChatConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::string HttpChatBackend::complete(const std::string& prompt) {
  if (config_.url.empty() || !transport_) {
    throw Error(ErrorCode::BackendUnavailable, "chat endpoint (llm_url) not configured");
  }
  if (config_.api_key.empty()) {
    throw Error(ErrorCode::BackendUnavailable, "MITIFORGE_LLM_KEY is not set");
  }
  HttpRequest req;
  req.method = "POST";
  req.url = config_.url;
  req.timeout_seconds = config_.timeout_seconds;
  req.headers["Content-Type"] = "application/json";
  req.headers["Authorization"] = "Bearer " + config_.api_key;
  req.body = json{{"model", config_.model},
                  {"temperature", config_.temperature},
                  {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}}
                 .dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(500 << (attempt - 1)));
    HttpResponse resp;
    try {
      resp = transport_->send(req);
    } catch (const Error& e) {
      last_error = e.what();
      continue;
    }
    if (resp.status == 429 || resp.status >= 500) {
      last_error = "HTTP " + std::to_string(resp.status);
      continue;
    }
    if (resp.status < 200 || resp.status >= 300) {
      throw Error(ErrorCode::BackendUnavailable,
                  "chat endpoint returned HTTP " + std::to_string(resp.status));
    }
    try {
      auto doc = json::parse(resp.body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BackendUnavailable, std::string("bad chat reply: ") + e.what());
    }
  }
  throw Error(ErrorCode::BackendUnavailable, "chat endpoint unreachable: " + last_error);
}

std::unique_ptr<ScriptedMockBackend> ScriptedMockBackend::from_file(
    const std::filesystem::path& path) {
  return from_json(text::read_file(path.string()));
}

std::unique_ptr<ScriptedMockBackend> ScriptedMockBackend::from_json(const std::string& json_text) {
  auto mock = std::make_unique<ScriptedMockBackend>();
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("mock file is not JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "mock file must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    Script script;
    if (value.is_string()) {
      script.replies.push_back(value.get<std::string>());
    } else if (value.is_array() && !value.empty()) {
      for (const auto& v : value) script.replies.push_back(v.get<std::string>());
    } else {
      throw Error(ErrorCode::InvalidConfig, "mock entry " + key + " must be a string or array");
    }
    mock->scripts_[key] = std::move(script);
  }
  return mock;
}

void ScriptedMockBackend::add(const std::string& prompt, std::string reply) {
  add_sequence(prompt, {std::move(reply)});
}

void ScriptedMockBackend::add_sequence(const std::string& prompt,
                                       std::vector<std::string> replies) {
  std::lock_guard lock(mu_);
  scripts_[prompt_key(prompt)] = Script{std::move(replies), 0};
}

std::string ScriptedMockBackend::complete(const std::string& prompt) {
  auto key = prompt_key(prompt);
  std::lock_guard lock(mu_);
  calls_.push_back(key);
  auto it = scripts_.find(key);
  if (it == scripts_.end() || it->second.replies.empty()) {
    throw Error(ErrorCode::UnknownPrompt, "no scripted reply for prompt " + key);
  }
  auto& s = it->second;
  auto idx = std::min(s.next, s.replies.size() - 1);
  if (s.next < s.replies.size()) ++s.next;
  return s.replies[idx];
}

std::size_t ScriptedMockBackend::call_count() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

std::vector<std::string> ScriptedMockBackend::call_log() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string ScriptedMockBackend::to_json() const {
  std::lock_guard lock(mu_);
  json doc = json::object();
  for (const auto& [key, script] : scripts_) {
    if (script.replies.size() == 1) {
      doc[key] = script.replies.front();
    } else {
      doc[key] = script.replies;
    }
  }
  return doc.dump(2);
}

}  // namespace mitiforge::llm
