#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mitiforge/behavior_classifier.hpp"
#include "mitiforge/chat_backend.hpp"
#include "mitiforge/context_extractor.hpp"
#include "mitiforge/mitigation_db.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::strategy {

enum class StrategyName {
  ExceptionCatching,
  ThreadMonitoring,
  InputValidation,
  ExceptionThrowing,
  Resembling,
};

std::string_view to_string(StrategyName n);
/// "Exception Catching", "Resembling Strategy", ...
std::string_view display_name(StrategyName n);
std::optional<StrategyName> parse_strategy_name(std::string_view identifier);

/// Description and snippet together hold exactly one `{{info}}` hole. The
/// snippet may also use `{{timeout_seconds}}`.
struct MitigationStrategy {
  StrategyName name = StrategyName::Resembling;
  std::string description;
  std::string snippet;
  std::optional<classify::InfoKind> required_info_kind;
};

struct FewShot {
  std::string label;
  std::string text;
};

struct VersionedWorkaround {
  std::string cve_id;
  std::string dependency_version;
  std::string instruction;
  std::optional<std::string> sample_code;
};

inline constexpr std::string_view kInfoHole = "{{info}}";
inline constexpr std::string_view kTimeoutHole = "{{timeout_seconds}}";

class StrategyCatalog {
 public:
  static const StrategyCatalog& builtin();
  /// Throws Error(MalformedCatalog).
  static StrategyCatalog from_json(std::string_view json_text);
  static StrategyCatalog load(const std::filesystem::path& path);

  int version() const { return version_; }
  int default_timeout_seconds() const { return default_timeout_; }
  const std::vector<MitigationStrategy>& strategies() const { return strategies_; }
  /// "Resembling Strategy" then "Type-Based Strategy".
  const std::vector<FewShot>& few_shots() const { return few_shots_; }

  /// Throws Error(UnclassifiedType) for Unclassified.
  const MitigationStrategy& for_type(classify::VulnerabilityType t) const;

 private:
  int version_ = 0;
  int default_timeout_ = 10;
  std::vector<MitigationStrategy> strategies_;  // ordered like kClassifiedTypes
  std::vector<FewShot> few_shots_;
};

StrategyName strategy_for(classify::VulnerabilityType t);

const MitigationStrategy& select_type_strategy(
    classify::VulnerabilityType vtype, const StrategyCatalog& catalog = StrategyCatalog::builtin());

std::string build_version_retrieval_prompt(const retrieval::MitigationEntry& historical,
                                           const ingest::VulnRecord& target,
                                           const context::Dependency& dep);

/// Asks the backend for the version-specific mitigation; the reply becomes the
/// instruction and its first fenced block (if any) the sample code.
VersionedWorkaround retrieve_versioned_workaround(const retrieval::MitigationEntry& historical,
                                                  const ingest::VulnRecord& target,
                                                  const context::Dependency& dep,
                                                  llm::ChatBackend& llm);

struct RenderOptions {
  int timeout_seconds = 10;
};

/// Escapes a value for use inside a Java string literal.
std::string java_string_escape(std::string_view value);

/// Value substituted into the hole; escaped when the hole sits inside a
/// string literal of the snippet.
std::string hole_value(const MitigationStrategy& s, const classify::MitigatingInfo& info);

/// The snippet with both holes filled. Throws Error(InfoKindMismatch).
std::string render_snippet(const MitigationStrategy& s, const classify::MitigatingInfo& info,
                           const RenderOptions& opts = {});

/// Strategy block for the generation prompt. Throws Error(InfoKindMismatch).
std::string render_strategy(const MitigationStrategy& s, const classify::MitigatingInfo& info,
                            const RenderOptions& opts = {});

/// Strategy block for the resembling path.
std::string render_resembling(const VersionedWorkaround& w);

}  // namespace mitiforge::strategy
