#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mitiforge/behavior_classifier.hpp"
#include "mitiforge/chat_backend.hpp"
#include "mitiforge/context_extractor.hpp"
#include "mitiforge/strategy_catalog.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::generate {

enum class PatchStatus { Candidate, SyntaxOk, Validated, Failed };
enum class FailureReason { None, SyntaxExhausted, FunctionalityExhausted, Unclassifiable };

std::string_view to_string(PatchStatus s);
std::string_view to_string(FailureReason r);

struct Rounds {
  int syntax = 0;
  int functionality = 0;
  bool operator==(const Rounds&) const = default;
};

struct MitigationPatch {
  std::string function_text;
  strategy::StrategyName strategy_used = strategy::StrategyName::Resembling;
  Rounds rounds;
  PatchStatus status = PatchStatus::Candidate;
  FailureReason reason = FailureReason::None;

  /// "Failed(SyntaxExhausted)", "Validated", ...
  std::string status_label() const;
};

struct GenerationRequest {
  ingest::VulnRecord record;
  classify::VulnerabilityType vtype = classify::VulnerabilityType::Unclassified;
  strategy::StrategyName strategy = strategy::StrategyName::Resembling;
  std::string strategy_block;
  context::ContextSlice slice;
  context::ImpactedFunction impacted;
  std::vector<strategy::FewShot> few_shots;
};

struct GenerationOptions {
  std::size_t max_prompt_chars = 24000;
};

/// Throws Error(InvalidArgument) for an incomplete request and
/// Error(PromptTooLong) when even the slice-only rendering is oversize.
std::string build_generation_prompt(const GenerationRequest& req,
                                    const GenerationOptions& opts = {});

/// First fenced block holding a parseable method, else the whole reply when
/// it parses. Throws Error(UnparseableReply).
std::string parse_patch(std::string_view reply);

/// parse_patch, falling back to the first fenced block even when it does not
/// parse; empty when the reply holds no code at all. Used by repair rounds,
/// where the compile step judges the text.
std::string parse_repair(std::string_view reply);

/// One backend call; the result has status Candidate.
MitigationPatch generate_mitigation(const GenerationRequest& req, llm::ChatBackend& llm,
                                    const GenerationOptions& opts = {});

}  // namespace mitiforge::generate
