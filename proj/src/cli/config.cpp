#include <cstdlib>
#include <variant>

#include "json.hpp"
#include "mitiforge/cli.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::cli {

namespace fs = std::filesystem;

namespace {

using Field = std::variant<bool RunConfig::*, int RunConfig::*, double RunConfig::*,
                           std::string RunConfig::*, fs::path RunConfig::*>;

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"cache_dir", &RunConfig::cache_dir},
      {"offline", &RunConfig::offline},
      {"fetch_parallelism", &RunConfig::fetch_parallelism},
      {"fetch_timeout", &RunConfig::fetch_timeout},
      {"embedder", &RunConfig::embedder},
      {"embedder_url", &RunConfig::embedder_url},
      {"embedder_model", &RunConfig::embedder_model},
      {"threshold_k", &RunConfig::threshold_k},
      {"index_path", &RunConfig::index_path},
      {"llm", &RunConfig::llm},
      {"llm_url", &RunConfig::llm_url},
      {"llm_model", &RunConfig::llm_model},
      {"llm_timeout", &RunConfig::llm_timeout},
      {"llm_max_retries", &RunConfig::llm_max_retries},
      {"llm_temperature", &RunConfig::llm_temperature},
      {"mock_path", &RunConfig::mock_path},
      {"rules_path", &RunConfig::rules_path},
      {"catalog_path", &RunConfig::catalog_path},
      {"rule_fallback", &RunConfig::rule_fallback},
      {"max_prompt_chars", &RunConfig::max_prompt_chars},
      {"thread_monitor_timeout", &RunConfig::thread_monitor_timeout},
      {"harness", &RunConfig::harness},
      {"compile_cmd", &RunConfig::compile_cmd},
      {"test_cmd", &RunConfig::test_cmd},
      {"workspace", &RunConfig::workspace},
      {"harness_script", &RunConfig::harness_script},
      {"harness_timeout", &RunConfig::harness_timeout},
      {"test_report_glob", &RunConfig::test_report_glob},
  };
  return table;
}

const Field& field_for(const std::string& key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  auto l = text::to_lower(text::trim(v));
  if (l == "true" || l == "1" || l == "yes") return true;
  if (l == "false" || l == "0" || l == "no") return false;
  throw Error(ErrorCode::InvalidConfig, key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::string s(text::trim(v));
  char* end = nullptr;
  T out{};
  if constexpr (std::is_same_v<T, int>) {
    long n = std::strtol(s.c_str(), &end, 10);
    out = static_cast<int>(n);
  } else {
    out = std::strtod(s.c_str(), &end);
  }
  if (s.empty() || end != s.c_str() + s.size()) {
    throw Error(ErrorCode::InvalidConfig, key + ": expected a number, got '" + v + "'");
  }
  return out;
}

void assign_json(RunConfig& cfg, const std::string& key, const nlohmann::json& v,
                 const fs::path& base_dir) {
  const auto& f = field_for(key);
  auto type_error = [&](const char* want) {
    return Error(ErrorCode::InvalidConfig, key + ": expected " + std::string(want));
  };
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) throw type_error("a boolean");
          cfg.*member = v.get<bool>();
        } else if constexpr (std::is_same_v<T, int>) {
          if (!v.is_number_integer()) throw type_error("an integer");
          cfg.*member = v.get<int>();
        } else if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) throw type_error("a number");
          cfg.*member = v.get<double>();
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (!v.is_string()) throw type_error("a string");
          cfg.*member = v.get<std::string>();
        } else {
          if (!v.is_string()) throw type_error("a path string");
          fs::path p = v.get<std::string>();
          if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
          cfg.*member = p;
        }
      },
      f);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& f = field_for(key);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          this->*member = parse_bool(key, value);
        } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, double>) {
          this->*member = parse_number<T>(key, value);
        } else {
          this->*member = T(value);
        }
      },
      f);
}

void RunConfig::apply_json(std::string_view json_text, const fs::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) assign_json(*this, key, value, base_dir);
}

RunConfig RunConfig::load(const fs::path& path) {
  std::string body;
  try {
    body = text::read_file(path.string());
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  RunConfig cfg;
  cfg.apply_json(body, path.parent_path());
  return cfg;
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, f] : fields()) {
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, fs::path>) {
            j[name] = (this->*member).string();
          } else {
            j[name] = this->*member;
          }
        },
        f);
  }
  return j.dump(2);
}

void RunConfig::validate() const {
  auto bad = [](const std::string& msg) { return Error(ErrorCode::InvalidConfig, msg); };
  if (fetch_parallelism < 1) throw bad("fetch_parallelism must be >= 1");
  if (fetch_timeout < 1) throw bad("fetch_timeout must be >= 1");
  if (embedder != "fallback" && embedder != "http") throw bad("embedder must be fallback or http");
  if (embedder == "http" && embedder_url.empty()) throw bad("embedder = http needs embedder_url");
  if (!(threshold_k >= 0.0 && threshold_k <= 2.0)) throw bad("threshold_k must lie in [0, 2]");
  if (llm != "mock" && llm != "http") throw bad("llm must be mock or http");
  if (llm == "http" && (llm_url.empty() || llm_model.empty())) {
    throw bad("llm = http needs llm_url and llm_model");
  }
  if (llm_timeout < 1) throw bad("llm_timeout must be >= 1");
  if (llm_max_retries < 0) throw bad("llm_max_retries must be >= 0");
  if (max_prompt_chars < 1) throw bad("max_prompt_chars must be >= 1");
  if (thread_monitor_timeout < 1) throw bad("thread_monitor_timeout must be >= 1");
  if (harness != "process" && harness != "scripted") throw bad("harness must be process or scripted");
  if (harness_timeout < 1) throw bad("harness_timeout must be >= 1");
}

// --- components -----------------------------------------------------------------

adapt::PipelineConfig Components::pipeline_config(const RunConfig& cfg) const {
  adapt::PipelineConfig p;
  p.retrieval.threshold_k = cfg.threshold_k;
  p.classify.rule_fallback = cfg.rule_fallback;
  p.rules = rules ? &*rules : nullptr;
  p.catalog = catalog ? &*catalog : nullptr;
  p.thread_monitor_timeout = cfg.thread_monitor_timeout;
  p.generation.max_prompt_chars = static_cast<std::size_t>(cfg.max_prompt_chars);
  return p;
}

Components make_components(const RunConfig& cfg, bool with_llm) {
  cfg.validate();
  Components c;
  const bool needs_network = !cfg.offline || cfg.embedder == "http" || cfg.llm == "http";
  if (needs_network) c.transport = make_default_transport();

  if (cfg.embedder == "http") {
    const char* key = std::getenv("MITIFORGE_LLM_KEY");
    c.embedder = std::make_unique<retrieval::HttpEmbedder>(cfg.embedder_url, cfg.embedder_model,
                                                           c.transport, key ? key : "");
  } else {
    c.embedder = std::make_unique<retrieval::HashingEmbedder>();
  }

  if (with_llm) {
    if (cfg.llm == "http") {
      llm::HttpChatConfig hc;
      hc.url = cfg.llm_url;
      hc.model = cfg.llm_model;
      const char* key = std::getenv("MITIFORGE_LLM_KEY");
      if (!key || !*key) throw Error(ErrorCode::InvalidConfig, "MITIFORGE_LLM_KEY is not set");
      hc.api_key = key;
      hc.timeout_seconds = cfg.llm_timeout;
      hc.max_retries = cfg.llm_max_retries;
      hc.temperature = cfg.llm_temperature;
      c.llm = std::make_unique<llm::HttpChatBackend>(hc, c.transport);
    } else {
      if (cfg.mock_path.empty()) throw Error(ErrorCode::InvalidConfig, "llm = mock needs mock_path");
      try {
        c.llm = llm::ScriptedMockBackend::from_file(cfg.mock_path);
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
      }
    }
  }

  if (!cfg.rules_path.empty()) c.rules = classify::BehaviorRules::load(cfg.rules_path.string());
  if (!cfg.catalog_path.empty()) {
    try {
      c.catalog = strategy::StrategyCatalog::load(cfg.catalog_path);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
  }
  return c;
}

}  // namespace mitiforge::cli
