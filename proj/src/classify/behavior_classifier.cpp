#include "mitiforge/behavior_classifier.hpp"

#include <cctype>
#include <regex>

#include "json.hpp"
#include "mitiforge/error.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::embedded {
extern const std::string_view behavior_rules;
}

namespace mitiforge::classify {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }

int priority(VulnerabilityType t) {
  switch (t) {
    case VulnerabilityType::MaliciousCodeExecution: return 0;
    case VulnerabilityType::ResourceExhaustion: return 1;
    case VulnerabilityType::UncaughtException: return 2;
    case VulnerabilityType::WrongReturnValue: return 3;
    case VulnerabilityType::Unclassified: return 4;
  }
  return 4;
}

std::string strip_wrapping(std::string_view s) {
  s = text::trim(s);
  static constexpr std::string_view quotes = "'\"`";
  while (s.size() >= 2 && quotes.find(s.front()) != std::string_view::npos &&
         s.front() == s.back()) {
    s = text::trim(s.substr(1, s.size() - 2));
  }
  while (!s.empty() && quotes.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  while (!s.empty() && quotes.find(s.back()) != std::string_view::npos) s.remove_suffix(1);
  return std::string(text::trim(s));
}

std::string first_nonempty_line(std::string_view reply) {
  for (auto line : text::split_lines(reply)) {
    auto t = text::trim(line);
    if (t.empty() || t.rfind("```", 0) == 0) continue;
    return std::string(t);
  }
  return {};
}

std::string_view info_description(InfoKind kind) {
  switch (kind) {
    case InfoKind::UncaughtExceptionType:
      return "You should identify the detail of the exception from the description of the "
             "vulnerabilities. Your response should only contain one Exception/Error without "
             "any description, for example: 'java.lang.StackOverflowError'.";
    case InfoKind::ExhaustedResourceType:
      return "You should identify the detail of the exhausted resource type from the "
             "vulnerability description.";
    case InfoKind::VulnerableInputFeature:
      return "Please extract segments in the exploit for reproducing the vulnerability. "
             "Segments refer to some substrings in the input value, which is crucial for "
             "reproducing the vulnerability. For example, 'jndi' in "
             "'{jndi:rmi://192.168.174.1/Evil}'.";
    case InfoKind::HandleableExceptionType:
      return "Please identify a handleable exception when executing {api}. Your response "
             "should only contain one handleable exception in the code below without any "
             "description, for example: 'java.io.IOException'.";
  }
  return {};
}

}  // namespace

std::string_view to_string(VulnerabilityType t) {
  switch (t) {
    case VulnerabilityType::UncaughtException: return "UncaughtException";
    case VulnerabilityType::ResourceExhaustion: return "ResourceExhaustion";
    case VulnerabilityType::MaliciousCodeExecution: return "MaliciousCodeExecution";
    case VulnerabilityType::WrongReturnValue: return "WrongReturnValue";
    case VulnerabilityType::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

std::string_view display_name(VulnerabilityType t) {
  switch (t) {
    case VulnerabilityType::UncaughtException: return "Uncaught Exception";
    case VulnerabilityType::ResourceExhaustion: return "Resource Exhaustion";
    case VulnerabilityType::MaliciousCodeExecution: return "Malicious Code Execution";
    case VulnerabilityType::WrongReturnValue: return "Wrong Return Value";
    case VulnerabilityType::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

std::optional<VulnerabilityType> parse_vulnerability_type(std::string_view identifier) {
  for (auto t : {VulnerabilityType::UncaughtException, VulnerabilityType::ResourceExhaustion,
                 VulnerabilityType::MaliciousCodeExecution, VulnerabilityType::WrongReturnValue,
                 VulnerabilityType::Unclassified}) {
    if (identifier == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view to_string(InfoKind k) {
  switch (k) {
    case InfoKind::UncaughtExceptionType: return "UncaughtExceptionType";
    case InfoKind::ExhaustedResourceType: return "ExhaustedResourceType";
    case InfoKind::VulnerableInputFeature: return "VulnerableInputFeature";
    case InfoKind::HandleableExceptionType: return "HandleableExceptionType";
  }
  return "";
}

std::string_view display_name(InfoKind k) {
  switch (k) {
    case InfoKind::UncaughtExceptionType: return "Uncaught Exception Type";
    case InfoKind::ExhaustedResourceType: return "Exhausted Resource Type";
    case InfoKind::VulnerableInputFeature: return "Vulnerable Input Feature";
    case InfoKind::HandleableExceptionType: return "Handleable Exception Type";
  }
  return "";
}

std::optional<InfoKind> parse_info_kind(std::string_view identifier) {
  for (auto k : {InfoKind::UncaughtExceptionType, InfoKind::ExhaustedResourceType,
                 InfoKind::VulnerableInputFeature, InfoKind::HandleableExceptionType}) {
    if (identifier == to_string(k)) return k;
  }
  return std::nullopt;
}

InfoKind required_info_kind(VulnerabilityType t) {
  switch (t) {
    case VulnerabilityType::UncaughtException: return InfoKind::UncaughtExceptionType;
    case VulnerabilityType::ResourceExhaustion: return InfoKind::ExhaustedResourceType;
    case VulnerabilityType::MaliciousCodeExecution: return InfoKind::VulnerableInputFeature;
    case VulnerabilityType::WrongReturnValue: return InfoKind::HandleableExceptionType;
    case VulnerabilityType::Unclassified: break;
  }
  throw Error(ErrorCode::UnclassifiedType, "unclassified vulnerabilities need no information");
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Description: return "Description";
    case Provenance::CweInfo: return "CweInfo";
    case Provenance::ExploitReference: return "ExploitReference";
    case Provenance::SourceCode: return "SourceCode";
  }
  return "";
}

std::string_view to_string(ClassificationSource s) {
  switch (s) {
    case ClassificationSource::Llm: return "llm";
    case ClassificationSource::Rules: return "rules";
    case ClassificationSource::None: return "none";
  }
  return "none";
}

// --- rule table ---------------------------------------------------------------

BehaviorRules BehaviorRules::from_json(std::string_view json_text) {
  BehaviorRules out;
  try {
    auto doc = nlohmann::json::parse(json_text);
    out.version = doc.at("version").get<int>();
    for (const auto& r : doc.at("rules")) {
      auto pattern = text::to_lower(text::trim(r.at("pattern").get<std::string>()));
      auto target = parse_vulnerability_type(r.at("maps_to").get<std::string>());
      if (pattern.empty() || !target || *target == VulnerabilityType::Unclassified) {
        throw Error(ErrorCode::InvalidConfig, "bad behavior rule: " + r.dump());
      }
      out.rules.push_back({std::move(pattern), *target});
    }
    if (doc.contains("cwe_phrases")) {
      for (const auto& [cwe, phrase] : doc["cwe_phrases"].items()) {
        out.cwe_phrases[cwe] = phrase.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad behavior rule file: ") + e.what());
  }
  return out;
}

const BehaviorRules& BehaviorRules::builtin() {
  static const BehaviorRules rules = from_json(embedded::behavior_rules);
  return rules;
}

BehaviorRules BehaviorRules::load(const std::string& path) {
  return from_json(text::read_file(path));
}

bool contains_phrase(std::string_view text, std::string_view phrase) {
  std::size_t from = 0;
  for (;;) {
    auto pos = text::find_icase(text, phrase, from);
    if (pos == std::string_view::npos) return false;
    if (pos == 0 || !is_alnum(text[pos - 1]) || (is_lower(text[pos - 1]) && is_upper(text[pos]))) {
      return true;
    }
    from = pos + 1;
  }
}

VulnerabilityType rule_classify(std::string_view description,
                                const std::vector<ingest::CweEntry>& cwes,
                                const BehaviorRules& rules) {
  std::string haystack(description);
  for (const auto& c : cwes) {
    auto it = rules.cwe_phrases.find(c.id);
    if (it != rules.cwe_phrases.end()) haystack += "\n" + it->second;
  }
  auto best = VulnerabilityType::Unclassified;
  for (const auto& rule : rules.rules) {
    if (priority(rule.maps_to) < priority(best) && contains_phrase(haystack, rule.pattern)) {
      best = rule.maps_to;
    }
  }
  return best;
}

// --- prompts ------------------------------------------------------------------

std::string format_cwe_info(const std::vector<ingest::CweEntry>& cwes) {
  if (cwes.empty()) return "(none)";
  std::vector<std::string> parts;
  for (const auto& c : cwes) parts.push_back(c.name.empty() ? c.id : c.id + ": " + c.name);
  return text::join(parts, ", ");
}

std::string build_classification_prompt(const ingest::VulnRecord& record) {
  std::string p = "Below is the information of " + record.cve_id +
                  ": [CWE Info]: " + format_cwe_info(record.cwes) +
                  "; [Description]: " + record.description + "\n\n";
  p += "Please identify the vulnerability reproduction behavior using the CWE information and "
       "the description. (Selected from: Uncaught Exception, Resource Exhaustion, Malicious "
       "Code Execution, Wrong Return Value).";
  return p;
}

std::optional<VulnerabilityType> parse_type_reply(std::string_view reply) {
  static const std::pair<std::string_view, VulnerabilityType> names[] = {
      {"uncaught exception", VulnerabilityType::UncaughtException},
      {"resource exhaustion", VulnerabilityType::ResourceExhaustion},
      {"resources exhaustion", VulnerabilityType::ResourceExhaustion},
      {"resources exhausting", VulnerabilityType::ResourceExhaustion},
      {"resource exhausting", VulnerabilityType::ResourceExhaustion},
      {"malicious code execution", VulnerabilityType::MaliciousCodeExecution},
      {"wrong return value", VulnerabilityType::WrongReturnValue},
  };
  std::optional<VulnerabilityType> found;
  std::size_t best = std::string_view::npos;
  for (const auto& [name, type] : names) {
    auto pos = text::find_icase(reply, name);
    if (pos < best) {
      best = pos;
      found = type;
    }
  }
  return found;
}

Classification classify_type(const ingest::VulnRecord& record, llm::ChatBackend* llm,
                             const ClassifyOptions& options, const BehaviorRules& rules) {
  Classification out;
  bool asked = false;
  if (llm) {
    try {
      out.reply = llm->complete(build_classification_prompt(record));
      asked = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendUnavailable || !options.rule_fallback) throw;
      out.warnings.push_back(std::string("BackendUnavailable: ") + e.what());
    }
  }
  if (asked) {
    if (auto t = parse_type_reply(out.reply)) {
      out.type = *t;
      out.source = ClassificationSource::Llm;
      return out;
    }
    out.warnings.push_back("AmbiguousReply");
  }
  if (options.rule_fallback) {
    out.type = rule_classify(record.description, record.cwes, rules);
    out.source = out.type == VulnerabilityType::Unclassified ? ClassificationSource::None
                                                             : ClassificationSource::Rules;
  }
  return out;
}

std::string build_extraction_prompt(const ExtractionInput& input) {
  if (!input.record) throw Error(ErrorCode::InvalidArgument, "extraction needs a record");
  const auto kind = required_info_kind(input.vtype);
  const auto& rec = *input.record;
  auto reference = text::trim(input.exploit_text).empty() ? std::string("[]") : input.exploit_text;
  std::string p = "Below is the information of " + rec.cve_id + ": " + rec.description + "; " +
                  format_cwe_info(rec.cwes) + "; [Reference]: " + reference + ";\n";
  p += "Reproducing the vulnerability causes " + std::string(display_name(input.vtype)) + ".\n";
  std::string desc(info_description(kind));
  if (kind == InfoKind::HandleableExceptionType) {
    auto slot = desc.find("{api}");
    desc.replace(slot, 5, input.vulnerable_api);
    desc += "\n" + input.impacted_code;
  }
  p += "You should extract " + std::string(display_name(kind)) + ": " + desc;
  return p;
}

MitigatingInfo parse_mitigating_info(InfoKind kind, std::string_view reply,
                                     bool has_exploit_text) {
  MitigatingInfo info{kind, {}, Provenance::Description};
  switch (kind) {
    case InfoKind::UncaughtExceptionType:
    case InfoKind::HandleableExceptionType: {
      auto value = strip_wrapping(reply);
      if (!value.empty() && value.back() == '.') value.pop_back();
      static const std::regex name_re(R"([A-Za-z_$][A-Za-z0-9_$]*(\.[A-Za-z_$][A-Za-z0-9_$]*)*)");
      if (value.empty() || !std::regex_match(value, name_re)) {
        throw Error(ErrorCode::MalformedReply,
                    "expected a single exception name, got: " + std::string(text::trim(reply)));
      }
      info.value = std::move(value);
      if (kind == InfoKind::HandleableExceptionType) info.provenance = Provenance::SourceCode;
      break;
    }
    case InfoKind::ExhaustedResourceType:
    case InfoKind::VulnerableInputFeature: {
      auto value = strip_wrapping(first_nonempty_line(reply));
      if (value.empty()) throw Error(ErrorCode::MalformedReply, "empty information reply");
      info.value = std::move(value);
      if (kind == InfoKind::VulnerableInputFeature && has_exploit_text) {
        info.provenance = Provenance::ExploitReference;
      }
      break;
    }
  }
  return info;
}

MitigatingInfo extract_mitigating_info(const ExtractionInput& input, llm::ChatBackend& llm) {
  auto prompt = build_extraction_prompt(input);
  auto reply = llm.complete(prompt);
  return parse_mitigating_info(required_info_kind(input.vtype), reply,
                               !text::trim(input.exploit_text).empty());
}

}  // namespace mitiforge::classify
