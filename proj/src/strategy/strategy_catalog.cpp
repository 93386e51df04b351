#include "mitiforge/strategy_catalog.hpp"

#include "json.hpp"
#include "mitiforge/error.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::embedded {
extern const std::string_view strategy_catalog;
}

namespace mitiforge::strategy {

using classify::VulnerabilityType;

namespace {

std::size_t count_of(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// true when the hole in `snippet` sits between double quotes on its line
bool hole_in_string_literal(std::string_view snippet) {
  auto pos = snippet.find(kInfoHole);
  if (pos == std::string_view::npos) return false;
  auto line_start = snippet.rfind('\n', pos);
  line_start = line_start == std::string_view::npos ? 0 : line_start + 1;
  bool in_string = false;
  for (auto i = line_start; i < pos; ++i) {
    if (snippet[i] == '\\') {
      ++i;
    } else if (snippet[i] == '"') {
      in_string = !in_string;
    }
  }
  return in_string;
}

void check_kind(const MitigationStrategy& s, const classify::MitigatingInfo& info) {
  if (!s.required_info_kind || *s.required_info_kind != info.kind) {
    throw Error(ErrorCode::InfoKindMismatch,
                std::string(display_name(s.name)) + " cannot use " +
                    std::string(classify::display_name(info.kind)));
  }
}

std::optional<std::string> first_fenced_block(std::string_view reply) {
  auto open = reply.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body = reply.find('\n', open);
  if (body == std::string_view::npos) return std::nullopt;
  auto close = reply.find("```", body + 1);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(text::trim(reply.substr(body + 1, close - body - 1)));
}

}  // namespace

std::string_view to_string(StrategyName n) {
  switch (n) {
    case StrategyName::ExceptionCatching: return "ExceptionCatching";
    case StrategyName::ThreadMonitoring: return "ThreadMonitoring";
    case StrategyName::InputValidation: return "InputValidation";
    case StrategyName::ExceptionThrowing: return "ExceptionThrowing";
    case StrategyName::Resembling: return "Resembling";
  }
  return "Resembling";
}

std::string_view display_name(StrategyName n) {
  switch (n) {
    case StrategyName::ExceptionCatching: return "Exception Catching";
    case StrategyName::ThreadMonitoring: return "Thread Monitoring";
    case StrategyName::InputValidation: return "Input Validation";
    case StrategyName::ExceptionThrowing: return "Exception Throwing";
    case StrategyName::Resembling: return "Resembling Strategy";
  }
  return "Resembling Strategy";
}

std::optional<StrategyName> parse_strategy_name(std::string_view identifier) {
  for (auto n : {StrategyName::ExceptionCatching, StrategyName::ThreadMonitoring,
                 StrategyName::InputValidation, StrategyName::ExceptionThrowing,
                 StrategyName::Resembling}) {
    if (identifier == to_string(n)) return n;
  }
  return std::nullopt;
}

StrategyName strategy_for(VulnerabilityType t) {
  switch (t) {
    case VulnerabilityType::UncaughtException: return StrategyName::ExceptionCatching;
    case VulnerabilityType::ResourceExhaustion: return StrategyName::ThreadMonitoring;
    case VulnerabilityType::MaliciousCodeExecution: return StrategyName::InputValidation;
    case VulnerabilityType::WrongReturnValue: return StrategyName::ExceptionThrowing;
    case VulnerabilityType::Unclassified: break;
  }
  throw Error(ErrorCode::UnclassifiedType, "no type-based strategy for an unclassified vulnerability");
}

StrategyCatalog StrategyCatalog::from_json(std::string_view json_text) {
  StrategyCatalog cat;
  auto bad = [](const std::string& msg) { return Error(ErrorCode::MalformedCatalog, msg); };
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
    cat.version_ = doc.at("version").get<int>();
    cat.default_timeout_ = doc.value("default_timeout_seconds", 10);
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("strategy catalog: ") + e.what());
  }
  std::vector<std::optional<MitigationStrategy>> slots(std::size(classify::kClassifiedTypes));
  try {
    for (const auto& s : doc.at("strategies")) {
      MitigationStrategy m;
      auto name = parse_strategy_name(s.at("name").get<std::string>());
      auto vtype = classify::parse_vulnerability_type(s.at("vulnerability_type").get<std::string>());
      auto kind = classify::parse_info_kind(s.at("required_info_kind").get<std::string>());
      if (!name || *name == StrategyName::Resembling || !vtype || !kind) {
        throw bad("strategy catalog: unknown name, type or info kind in " + s.dump());
      }
      if (strategy_for(*vtype) != *name || classify::required_info_kind(*vtype) != *kind) {
        throw bad("strategy catalog: " + std::string(to_string(*name)) +
                  " is mapped to the wrong type or info kind");
      }
      m.name = *name;
      m.description = s.at("description").get<std::string>();
      m.snippet = s.at("snippet").get<std::string>();
      m.required_info_kind = *kind;
      if (m.snippet.empty()) throw bad("strategy catalog: empty snippet for " + s.dump());
      if (count_of(m.description, kInfoHole) + count_of(m.snippet, kInfoHole) != 1) {
        throw bad("strategy catalog: " + std::string(to_string(m.name)) +
                  " must contain exactly one {{info}} hole");
      }
      std::size_t slot = 0;
      while (classify::kClassifiedTypes[slot] != *vtype) ++slot;
      if (slots[slot]) throw bad("strategy catalog: duplicate " + std::string(to_string(m.name)));
      slots[slot] = std::move(m);
    }
    for (const auto& f : doc.at("few_shots")) {
      cat.few_shots_.push_back({f.at("label").get<std::string>(), f.at("text").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw bad(std::string("strategy catalog: ") + e.what());
  }
  for (auto& s : slots) {
    if (!s) throw bad("strategy catalog must define all four type-based strategies");
    cat.strategies_.push_back(std::move(*s));
  }
  if (cat.few_shots_.size() != 2 || cat.few_shots_[0].label != "Resembling Strategy" ||
      cat.few_shots_[1].label != "Type-Based Strategy") {
    throw bad("strategy catalog needs the Resembling Strategy and Type-Based Strategy scenarios, in that order");
  }
  return cat;
}

const StrategyCatalog& StrategyCatalog::builtin() {
  static const StrategyCatalog cat = from_json(embedded::strategy_catalog);
  return cat;
}

StrategyCatalog StrategyCatalog::load(const std::filesystem::path& path) {
  return from_json(text::read_file(path.string()));
}

const MitigationStrategy& StrategyCatalog::for_type(VulnerabilityType t) const {
  const auto name = strategy_for(t);
  for (const auto& s : strategies_) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::MalformedCatalog, "catalog lacks " + std::string(to_string(name)));
}

const MitigationStrategy& select_type_strategy(VulnerabilityType vtype,
                                               const StrategyCatalog& catalog) {
  return catalog.for_type(vtype);
}

std::string build_version_retrieval_prompt(const retrieval::MitigationEntry& historical,
                                           const ingest::VulnRecord& target,
                                           const context::Dependency& dep) {
  if (historical.workarounds.empty()) {
    throw Error(ErrorCode::InvalidArgument, historical.cve_id + " has no workaround text");
  }
  std::vector<std::string> texts;
  for (const auto& w : historical.workarounds) texts.push_back(w.text);
  std::string p = "Below is the mitigation of " + historical.cve_id + " : " +
                  text::join(texts, "\n\n") + "\n\n";
  p += "Please identify a mitigation suitable for " + target.cve_id + " in " + dep.artifact +
       ", " + dep.version + ".\n\n";
  p += "[Description]: " + target.description;
  return p;
}

VersionedWorkaround retrieve_versioned_workaround(const retrieval::MitigationEntry& historical,
                                                  const ingest::VulnRecord& target,
                                                  const context::Dependency& dep,
                                                  llm::ChatBackend& llm) {
  auto reply = llm.complete(build_version_retrieval_prompt(historical, target, dep));
  VersionedWorkaround w;
  w.cve_id = historical.cve_id;
  w.dependency_version = dep.version;
  w.instruction = std::string(text::trim(text::normalize_newlines(reply)));
  if (w.instruction.empty()) {
    throw Error(ErrorCode::MalformedReply, "empty version-based mitigation reply");
  }
  w.sample_code = first_fenced_block(w.instruction);
  return w;
}

std::string java_string_escape(std::string_view value) {
  std::string out;
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

std::string hole_value(const MitigationStrategy& s, const classify::MitigatingInfo& info) {
  return hole_in_string_literal(s.snippet) ? java_string_escape(info.value) : info.value;
}

std::string render_snippet(const MitigationStrategy& s, const classify::MitigatingInfo& info,
                           const RenderOptions& opts) {
  check_kind(s, info);
  std::string out = s.snippet;
  replace_all(out, kTimeoutHole, std::to_string(opts.timeout_seconds));
  replace_all(out, kInfoHole, hole_value(s, info));
  return out;
}

std::string render_strategy(const MitigationStrategy& s, const classify::MitigatingInfo& info,
                            const RenderOptions& opts) {
  check_kind(s, info);
  std::string description = s.description;
  replace_all(description, kTimeoutHole, std::to_string(opts.timeout_seconds));
  replace_all(description, kInfoHole, info.value);
  std::string out = "Strategy: " + std::string(display_name(s.name)) + "\n";
  out += description + "\n";
  out += "Example:\n```java\n" + render_snippet(s, info, opts) + "\n```";
  return out;
}

std::string render_resembling(const VersionedWorkaround& w) {
  std::string out = "Strategy: Resembling Strategy\n";
  out += "Mitigation from " + w.cve_id + " for version " + w.dependency_version + ":\n";
  out += w.instruction;
  return out;
}

}  // namespace mitiforge::strategy
