#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mitiforge/http.hpp"

namespace mitiforge::llm {

/// Single-turn chat completion. Implementations throw
/// Error(BackendUnavailable) when no reply can be obtained.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

/// Key under which a prompt is recorded in a scripted mock file.
std::string prompt_key(const std::string& prompt);

struct HttpChatConfig {
  std::string url;  // full chat-completions endpoint
  std::string model;
  std::string api_key;
  int timeout_seconds = 120;
  int max_retries = 2;
  double temperature = 0.0;
};

/// OpenAI-style chat-completions client.
class HttpChatBackend final : public ChatBackend {
 public:
  HttpChatBackend(HttpChatConfig config, std::shared_ptr<HttpTransport> transport);

  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "http:" + config_.model; }

 private:
  HttpChatConfig config_;
  std::shared_ptr<HttpTransport> transport_;
};

/// Replays recorded replies keyed by sha256(prompt). A key may map to a
/// string, or to an array of strings consumed in order (the last one repeats).
/// Unknown prompts raise Error(UnknownPrompt).
class ScriptedMockBackend final : public ChatBackend {
 public:
  ScriptedMockBackend() = default;

  static std::unique_ptr<ScriptedMockBackend> from_file(const std::filesystem::path& path);
  static std::unique_ptr<ScriptedMockBackend> from_json(const std::string& json_text);

  void add(const std::string& prompt, std::string reply);
  void add_sequence(const std::string& prompt, std::vector<std::string> replies);

  std::string complete(const std::string& prompt) override;
  std::string name() const override { return "scripted-mock"; }

  std::size_t call_count() const;
  /// Keys of every prompt seen, in call order.
  std::vector<std::string> call_log() const;
  std::string to_json() const;

 private:
  struct Script {
    std::vector<std::string> replies;
    std::size_t next = 0;
  };

  mutable std::mutex mu_;
  std::map<std::string, Script> scripts_;
  std::vector<std::string> calls_;
};

}  // namespace mitiforge::llm
