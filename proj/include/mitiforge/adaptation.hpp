#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mitiforge/behavior_classifier.hpp"
#include "mitiforge/chat_backend.hpp"
#include "mitiforge/context_extractor.hpp"
#include "mitiforge/error.hpp"
#include "mitiforge/generator.hpp"
#include "mitiforge/mitigation_db.hpp"
#include "mitiforge/strategy_catalog.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::adapt {

inline constexpr int kMaxSyntaxRounds = 5;
inline constexpr int kMaxFunctionalityRounds = 5;

struct TestFailure {
  std::string test_id;
  std::string message;
  bool operator==(const TestFailure&) const = default;
};

struct TestReport {
  int total = 0;
  std::vector<TestFailure> failed;

  std::set<std::string> failed_ids() const;
  bool passed(const std::string& test_id) const;
  /// Failures of `after` absent from `baseline`, in `after` order.
  static std::vector<TestFailure> new_failures(const TestReport& after, const TestReport& baseline);
};

/// Reads JUnit XML (<testsuites>/<testsuite>/<testcase>); a testcase with a
/// <failure> or <error> child counts as failed. Throws Error(HarnessError).
TestReport parse_junit_xml(std::string_view xml);
/// Merges every report under `workspace` matching `glob`.
TestReport collect_junit_reports(const std::filesystem::path& workspace, std::string_view glob);

struct CompileResult {
  bool ok = false;
  std::string log;
};

class BuildHarness {
 public:
  virtual ~BuildHarness() = default;

  CompileResult compile() {
    ++compile_count_;
    return do_compile();
  }
  TestReport run_tests() {
    ++test_count_;
    return do_run_tests();
  }
  int compile_count() const { return compile_count_; }
  int test_count() const { return test_count_; }
  virtual const std::filesystem::path& workspace() const = 0;

 protected:
  virtual CompileResult do_compile() = 0;
  virtual TestReport do_run_tests() = 0;

 private:
  int compile_count_ = 0;
  int test_count_ = 0;
};

struct ProcessHarnessConfig {
  std::string compile_cmd;  // may contain {workspace}
  std::string test_cmd;
  std::filesystem::path workspace;
  int timeout_seconds = 600;
  std::string test_report_glob = "**/TEST-*.xml";
};

/// Expands `{workspace}` (shell-quoted) in a command template.
std::string expand_command(std::string_view tmpl, const std::filesystem::path& workspace);

/// Runs the configured shell commands; exit 126/127 or a spawn failure raise
/// Error(HarnessError).
class ProcessHarness final : public BuildHarness {
 public:
  explicit ProcessHarness(ProcessHarnessConfig cfg);
  const std::filesystem::path& workspace() const override { return cfg_.workspace; }

 protected:
  CompileResult do_compile() override;
  TestReport do_run_tests() override;

 private:
  ProcessHarnessConfig cfg_;
};

/// Processes started by any ProcessHarness in this process.
std::size_t process_spawn_count();

/// Scripted stand-in for a build toolchain, driven by a JSON script:
///
///   compile: {"mode": "parse"} checks that the target function parses, or
///            {"exit_codes": [1, 0], "log": "..."} replays exit codes (last repeats)
///   tests:   {"rules": [{"test_id", "fail_if_contains" | "fail_unless_contains", "message"}]}
///            evaluated against the target file, or {"runs": [[{"test_id", "message"}]],
///            "total": n} replayed in order (last repeats)
///
/// Reports are written as JUnit XML under the workspace and read back.
class ScriptedHarness final : public BuildHarness {
 public:
  ScriptedHarness(std::string_view script_json, std::filesystem::path workspace,
                  std::filesystem::path target_file, std::string function_name);
  static std::string report_glob() { return "mitiforge-reports/TEST-*.xml"; }
  const std::filesystem::path& workspace() const override { return workspace_; }

 protected:
  CompileResult do_compile() override;
  TestReport do_run_tests() override;

 private:
  struct Rule {
    std::string test_id;
    std::string needle;
    bool fail_if_present = true;
    std::string message;
  };

  std::string target_text() const;

  std::filesystem::path workspace_;
  std::filesystem::path target_;
  std::string function_name_;
  bool parse_mode_ = true;
  std::vector<int> exit_codes_;
  std::string compile_log_;
  std::vector<Rule> rules_;
  std::vector<std::vector<TestFailure>> runs_;
  int runs_total_ = 0;
  std::size_t compile_step_ = 0;
  std::size_t run_step_ = 0;
};

/// Whole-function replacement by line span, with bit-exact restore.
class WorkspacePatcher {
 public:
  WorkspacePatcher(std::filesystem::path file, std::string function_name);

  void apply(std::string_view function_text);
  void restore();
  const std::string& original() const { return original_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  std::string function_name_;
  std::string original_;
};

std::string build_syntax_prompt(std::string_view error_log, std::string_view function_text);
std::string build_functionality_prompt(std::string_view generation_prompt,
                                       const TestFailure& failure);

struct AdaptContext {
  BuildHarness& harness;
  WorkspacePatcher& patcher;
  llm::ChatBackend& llm;
};

/// Applies and compiles, re-prompting on errors; at most kMaxSyntaxRounds
/// compiles. Restores the workspace on failure.
generate::MitigationPatch adapt_syntax(const generate::MitigationPatch& patch, AdaptContext ctx);

/// Runs tests against `baseline`, regenerating from `generation_prompt` on new
/// failures; at most kMaxFunctionalityRounds test runs. `final_report`
/// receives the last report.
generate::MitigationPatch adapt_functionality(const generate::MitigationPatch& patch,
                                              AdaptContext ctx, const TestReport& baseline,
                                              const std::string& generation_prompt,
                                              TestReport* final_report = nullptr);

/// Error raised inside a pipeline stage, tagged with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageRecord {
  std::string stage;
  std::string input_digest;
  std::string decision;
  long long duration_ms = 0;

  std::string to_json() const;
};

struct PipelineConfig {
  retrieval::RetrievalConfig retrieval;
  classify::ClassifyOptions classify;
  const classify::BehaviorRules* rules = nullptr;       // null: built-in
  const strategy::StrategyCatalog* catalog = nullptr;   // null: built-in
  int thread_monitor_timeout = 10;
  generate::GenerationOptions generation;
};

struct PipelineInput {
  ingest::VulnRecord record;
  context::ImpactedFunction impacted;  // file_path is the file patched in the workspace
  std::string exploit_text;
};

struct PipelineResult {
  generate::MitigationPatch patch;
  retrieval::StrategyDecision decision = retrieval::StrategyDecision::TypeBased;
  std::optional<double> distance;
  std::optional<std::string> resembling_cve;
  classify::VulnerabilityType vtype = classify::VulnerabilityType::Unclassified;
  TestReport baseline;
  TestReport final_report;
  std::vector<StageRecord> stages;

  /// One JSON object per line.
  std::string run_record_jsonl(bool with_durations = true) const;
};

PipelineResult run_pipeline(const PipelineInput& input, const retrieval::MitigationIndex& index,
                            retrieval::Embedder& embedder, const PipelineConfig& cfg,
                            llm::ChatBackend& llm, BuildHarness& harness);

}  // namespace mitiforge::adapt
