#pragma once

// Reproducing-behavior classification and per-type mitigating information.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mitiforge/chat_backend.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::classify {

enum class VulnerabilityType {
  UncaughtException,
  ResourceExhaustion,
  MaliciousCodeExecution,
  WrongReturnValue,
  Unclassified,
};

inline constexpr VulnerabilityType kClassifiedTypes[] = {
    VulnerabilityType::UncaughtException, VulnerabilityType::ResourceExhaustion,
    VulnerabilityType::MaliciousCodeExecution, VulnerabilityType::WrongReturnValue};

/// Identifier form, e.g. "ResourceExhaustion".
std::string_view to_string(VulnerabilityType t);
/// Prose form used in prompts, e.g. "Resource Exhaustion".
std::string_view display_name(VulnerabilityType t);
std::optional<VulnerabilityType> parse_vulnerability_type(std::string_view identifier);

enum class InfoKind {
  UncaughtExceptionType,
  ExhaustedResourceType,
  VulnerableInputFeature,
  HandleableExceptionType,
};

std::string_view to_string(InfoKind k);
std::string_view display_name(InfoKind k);
std::optional<InfoKind> parse_info_kind(std::string_view identifier);
/// The mitigating information a classified type needs.
InfoKind required_info_kind(VulnerabilityType t);

enum class Provenance { Description, CweInfo, ExploitReference, SourceCode };
std::string_view to_string(Provenance p);

struct MitigatingInfo {
  InfoKind kind;
  std::string value;
  Provenance provenance;
  bool operator==(const MitigatingInfo&) const = default;
};

struct BehaviorRule {
  std::string pattern;  // lower-case phrase
  VulnerabilityType maps_to;
};

/// Versioned phrase table plus CWE -> phrase expansions.
struct BehaviorRules {
  int version = 0;
  std::vector<BehaviorRule> rules;
  std::map<std::string, std::string> cwe_phrases;

  /// The table shipped with the library.
  static const BehaviorRules& builtin();
  static BehaviorRules from_json(std::string_view json_text);
  static BehaviorRules load(const std::string& path);
};

/// True when `phrase` occurs in `text` case-insensitively, starting at a word
/// boundary (a non-alphanumeric neighbour or a camelCase transition).
bool contains_phrase(std::string_view text, std::string_view phrase);

std::string format_cwe_info(const std::vector<ingest::CweEntry>& cwes);

std::string build_classification_prompt(const ingest::VulnRecord& record);

/// Rule table in priority order MaliciousCodeExecution > ResourceExhaustion >
/// UncaughtException > WrongReturnValue; Unclassified when nothing matches.
VulnerabilityType rule_classify(std::string_view description,
                                const std::vector<ingest::CweEntry>& cwes,
                                const BehaviorRules& rules = BehaviorRules::builtin());

/// First case-insensitive occurrence of a type name in `reply`.
std::optional<VulnerabilityType> parse_type_reply(std::string_view reply);

enum class ClassificationSource { Llm, Rules, None };
std::string_view to_string(ClassificationSource s);

struct Classification {
  VulnerabilityType type = VulnerabilityType::Unclassified;
  ClassificationSource source = ClassificationSource::None;
  std::string reply;
  std::vector<std::string> warnings;  // e.g. "AmbiguousReply"
};

struct ClassifyOptions {
  bool rule_fallback = true;
};

/// Asks `llm` (may be null) and falls back to rule_classify when the reply
/// names no type or the backend is unavailable. With the fallback disabled a
/// backend failure propagates as Error(BackendUnavailable).
Classification classify_type(const ingest::VulnRecord& record, llm::ChatBackend* llm,
                             const ClassifyOptions& options = {},
                             const BehaviorRules& rules = BehaviorRules::builtin());

struct ExtractionInput {
  const ingest::VulnRecord* record = nullptr;
  VulnerabilityType vtype = VulnerabilityType::Unclassified;
  std::string exploit_text;    // plain text of exploit-tagged references, may be empty
  std::string impacted_code;   // used by the handleable-exception variant
  std::string vulnerable_api;  // e.g. "xstream.fromXML"
};

std::string build_extraction_prompt(const ExtractionInput& input);

/// Throws MalformedReply when an exception-kind reply is not a single name.
MitigatingInfo parse_mitigating_info(InfoKind kind, std::string_view reply,
                                     bool has_exploit_text);

MitigatingInfo extract_mitigating_info(const ExtractionInput& input, llm::ChatBackend& llm);

}  // namespace mitiforge::classify
