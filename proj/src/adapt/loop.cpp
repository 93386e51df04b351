#include <algorithm>

#include "mitiforge/adaptation.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::adapt {

using generate::FailureReason;
using generate::MitigationPatch;
using generate::PatchStatus;

// --- workspace patcher --------------------------------------------------------

namespace {

std::size_t indent_of(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
  return n;
}

std::vector<std::string> reindent(std::string_view function_text, std::string_view indent) {
  const auto normalized = text::normalize_newlines(function_text);
  std::vector<std::string> lines;
  for (auto l : text::split_lines(normalized)) lines.emplace_back(l);
  while (!lines.empty() && text::trim(lines.back()).empty()) lines.pop_back();
  while (!lines.empty() && text::trim(lines.front()).empty()) lines.erase(lines.begin());
  std::size_t common = std::string::npos;
  for (const auto& l : lines) {
    if (!text::trim(l).empty()) common = std::min(common, indent_of(l));
  }
  if (common == std::string::npos) common = 0;
  for (auto& l : lines) {
    if (text::trim(l).empty()) {
      l.clear();
    } else {
      l = std::string(indent) + l.substr(common);
    }
  }
  return lines;
}

}  // namespace

WorkspacePatcher::WorkspacePatcher(std::filesystem::path file, std::string function_name)
    : file_(std::move(file)), function_name_(std::move(function_name)) {
  original_ = text::read_file(file_.string());
  context::locate_function(original_, function_name_);
}

void WorkspacePatcher::apply(std::string_view function_text) {
  const bool crlf = original_.find("\r\n") != std::string::npos;
  const auto normalized = text::normalize_newlines(original_);
  const auto loc = context::locate_function(normalized, function_name_);
  const auto lines = text::split_lines(normalized);
  const auto& first = lines[static_cast<std::size_t>(loc.first_line - 1)];
  const std::string indent(first.substr(0, indent_of(first)));

  std::vector<std::string> out;
  for (int i = 1; i < loc.first_line; ++i) out.emplace_back(lines[static_cast<std::size_t>(i - 1)]);
  for (auto& l : reindent(function_text, indent)) out.push_back(std::move(l));
  for (std::size_t i = static_cast<std::size_t>(loc.last_line); i < lines.size(); ++i) {
    out.emplace_back(lines[i]);
  }
  auto content = text::join(out, "\n");
  if (crlf) {
    std::string converted;
    for (char c : content) {
      if (c == '\n') converted += '\r';
      converted += c;
    }
    content = std::move(converted);
  }
  text::write_file_atomic(file_.string(), content);
}

void WorkspacePatcher::restore() { text::write_file_atomic(file_.string(), original_); }

// --- prompts ------------------------------------------------------------------

std::string build_syntax_prompt(std::string_view error_log, std::string_view function_text) {
  return "The following code contains a syntax error " + std::string(text::trim(error_log)) +
         ", please fix it.\n```java\n" + std::string(function_text) + "\n```";
}

std::string build_functionality_prompt(std::string_view generation_prompt,
                                       const TestFailure& failure) {
  std::string p(generation_prompt);
  p += "\n\nThe mitigated function should avoid influencing test: " + failure.test_id;
  if (!text::trim(failure.message).empty()) p += "\n" + std::string(text::trim(failure.message));
  return p;
}

// --- loops --------------------------------------------------------------------

MitigationPatch adapt_syntax(const MitigationPatch& patch, AdaptContext ctx) {
  if (patch.status != PatchStatus::Candidate) {
    throw Error(ErrorCode::InvalidArgument, "syntax adaptation expects a Candidate patch");
  }
  MitigationPatch current = patch;
  for (int round = 1; round <= kMaxSyntaxRounds; ++round) {
    ctx.patcher.apply(current.function_text);
    auto result = ctx.harness.compile();
    if (result.ok) {
      current.status = PatchStatus::SyntaxOk;
      current.rounds.syntax = round;
      return current;
    }
    if (round == kMaxSyntaxRounds) break;
    auto repaired =
        generate::parse_repair(ctx.llm.complete(build_syntax_prompt(result.log, current.function_text)));
    if (!repaired.empty()) current.function_text = std::move(repaired);
  }
  ctx.patcher.restore();
  current.status = PatchStatus::Failed;
  current.reason = FailureReason::SyntaxExhausted;
  current.rounds.syntax = kMaxSyntaxRounds;
  return current;
}

MitigationPatch adapt_functionality(const MitigationPatch& patch, AdaptContext ctx,
                                    const TestReport& baseline,
                                    const std::string& generation_prompt,
                                    TestReport* final_report) {
  if (patch.status != PatchStatus::SyntaxOk) {
    throw Error(ErrorCode::InvalidArgument, "functionality adaptation expects a SyntaxOk patch");
  }
  MitigationPatch current = patch;
  for (int round = 1; round <= kMaxFunctionalityRounds; ++round) {
    auto report = ctx.harness.run_tests();
    if (final_report) *final_report = report;
    auto fresh = TestReport::new_failures(report, baseline);
    if (fresh.empty()) {
      current.status = PatchStatus::Validated;
      current.rounds.functionality = round;
      return current;
    }
    if (round == kMaxFunctionalityRounds) break;

    auto reply = ctx.llm.complete(build_functionality_prompt(generation_prompt, fresh.front()));
    MitigationPatch regenerated;
    regenerated.strategy_used = current.strategy_used;
    regenerated.function_text = generate::parse_repair(reply);
    if (regenerated.function_text.empty()) regenerated.function_text = current.function_text;
    auto checked = adapt_syntax(regenerated, ctx);
    if (checked.status == PatchStatus::Failed) {
      checked.rounds.functionality = round;
      return checked;
    }
    current.function_text = checked.function_text;
    current.rounds.syntax = checked.rounds.syntax;
  }
  ctx.patcher.restore();
  current.status = PatchStatus::Failed;
  current.reason = FailureReason::FunctionalityExhausted;
  current.rounds.functionality = kMaxFunctionalityRounds;
  return current;
}

}  // namespace mitiforge::adapt
