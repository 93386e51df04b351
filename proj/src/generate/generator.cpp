#include "mitiforge/generator.hpp"

#include <algorithm>
#include <set>

#include "mitiforge/error.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::generate {

std::string_view to_string(PatchStatus s) {
  switch (s) {
    case PatchStatus::Candidate: return "Candidate";
    case PatchStatus::SyntaxOk: return "SyntaxOk";
    case PatchStatus::Validated: return "Validated";
    case PatchStatus::Failed: return "Failed";
  }
  return "Failed";
}

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "None";
    case FailureReason::SyntaxExhausted: return "SyntaxExhausted";
    case FailureReason::FunctionalityExhausted: return "FunctionalityExhausted";
    case FailureReason::Unclassifiable: return "Unclassifiable";
  }
  return "None";
}

std::string MitigationPatch::status_label() const {
  if (status != PatchStatus::Failed) return std::string(to_string(status));
  return "Failed(" + std::string(to_string(reason)) + ")";
}

namespace {

constexpr std::string_view kTask =
    "### Task\n"
    "You mitigate a vulnerability of a third-party library inside the client code that calls "
    "it. The library cannot be changed or upgraded. Find where the impacted function uses the "
    "vulnerable API, then rewrite the impacted function so the vulnerability can no longer be "
    "triggered through it while its normal behavior is preserved.\n";

constexpr std::string_view kInstruction =
    "### Instruction\n"
    "Generate only one potential mitigation. Reply with the complete mitigated function in a "
    "single ```java code block and keep its signature unchanged.";

std::string render_function(const GenerationRequest& req, bool slice_only) {
  const auto source = text::normalize_newlines(req.impacted.source_text);
  const auto lines = text::split_lines(source);
  std::size_t count = lines.size();
  if (count > 0 && lines.back().empty()) --count;
  const std::set<int> marked(req.slice.lines.begin(), req.slice.lines.end());
  const std::size_t width = std::to_string(count).size();
  std::string out = "### Impacted Function\n";
  out += slice_only ? "Only the lines in the context of the vulnerable call are shown.\n"
                    : "Lines marked with * are the context of the vulnerable call.\n";
  out += "```java\n";
  for (std::size_t i = 0; i < count; ++i) {
    const int line = static_cast<int>(i + 1);
    const bool in_slice = marked.count(line) > 0;
    if (slice_only && !in_slice) continue;
    std::string number = std::to_string(line);
    out += in_slice ? "* " : "  ";
    out += std::string(width - number.size(), ' ') + number + " | ";
    out += std::string(lines[i]) + "\n";
  }
  out += "```\n";
  return out;
}

std::string render_prompt(const GenerationRequest& req, bool slice_only) {
  std::string p(kTask);
  p += "\n### Vulnerability\n";
  p += "CVE: " + req.record.cve_id + "\n";
  p += "Library: " + req.impacted.dependency.coordinate() + "\n";
  p += "Vulnerable API: " + req.impacted.api.to_string() + "\n";
  if (req.vtype != classify::VulnerabilityType::Unclassified) {
    p += "Reproducing behavior: " + std::string(classify::display_name(req.vtype)) + "\n";
  }
  p += "[CWE Info]: " + classify::format_cwe_info(req.record.cwes) + "\n";
  p += "[Description]: " + req.record.description + "\n";
  p += "\n### Strategy\n" + req.strategy_block + "\n";
  p += "\n### Examples\n";
  for (std::size_t i = 0; i < req.few_shots.size(); ++i) {
    if (i > 0) p += "\n";
    p += "Scenario " + std::to_string(i + 1) + " (" + req.few_shots[i].label + "):\n";
    p += req.few_shots[i].text + "\n";
  }
  p += "\n" + render_function(req, slice_only);
  p += "\n" + std::string(kInstruction);
  return p;
}

std::vector<std::string> fenced_blocks(std::string_view reply) {
  std::vector<std::string> blocks;
  const auto lines = text::split_lines(reply);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).rfind("```", 0) != 0) continue;
    std::size_t j = i + 1;
    while (j < lines.size() && text::trim(lines[j]).rfind("```", 0) != 0) ++j;
    if (j == lines.size()) break;
    std::vector<std::string> body(lines.begin() + static_cast<long>(i) + 1,
                                  lines.begin() + static_cast<long>(j));
    blocks.push_back(text::join(body, "\n"));
    i = j;
  }
  return blocks;
}

bool parses(const std::string& candidate) {
  try {
    context::parse_function(candidate);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::string build_generation_prompt(const GenerationRequest& req, const GenerationOptions& opts) {
  if (text::trim(req.strategy_block).empty()) {
    throw Error(ErrorCode::InvalidArgument, "generation request has no strategy block");
  }
  if (req.slice.lines.empty()) {
    throw Error(ErrorCode::InvalidArgument, "generation request has an empty context slice");
  }
  if (req.few_shots.size() != 2 || req.few_shots[0].label != "Resembling Strategy" ||
      req.few_shots[1].label != "Type-Based Strategy") {
    throw Error(ErrorCode::InvalidArgument,
                "few-shot scenarios must be Resembling Strategy then Type-Based Strategy");
  }
  auto full = render_prompt(req, false);
  if (full.size() <= opts.max_prompt_chars) return full;
  auto reduced = render_prompt(req, true);
  if (reduced.size() <= opts.max_prompt_chars) return reduced;
  throw Error(ErrorCode::PromptTooLong,
              "generation prompt needs " + std::to_string(reduced.size()) +
                  " characters even without unsliced lines; limit is " +
                  std::to_string(opts.max_prompt_chars));
}

std::string parse_patch(std::string_view reply) {
  const auto normalized = text::normalize_newlines(reply);
  for (const auto& block : fenced_blocks(normalized)) {
    if (parses(block)) return block;
  }
  std::string whole(text::trim(normalized));
  if (!whole.empty() && whole.find("```") == std::string::npos && parses(whole)) return whole;
  throw Error(ErrorCode::UnparseableReply, "reply contains no parseable method declaration");
}

std::string parse_repair(std::string_view reply) {
  try {
    return parse_patch(reply);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::UnparseableReply) throw;
  }
  auto blocks = fenced_blocks(text::normalize_newlines(reply));
  for (const auto& b : blocks) {
    if (!text::trim(b).empty()) return b;
  }
  return {};
}

MitigationPatch generate_mitigation(const GenerationRequest& req, llm::ChatBackend& llm,
                                    const GenerationOptions& opts) {
  const auto prompt = build_generation_prompt(req, opts);
  MitigationPatch patch;
  patch.function_text = parse_patch(llm.complete(prompt));
  patch.strategy_used = req.strategy;
  patch.status = PatchStatus::Candidate;
  return patch;
}

}  // namespace mitiforge::generate
