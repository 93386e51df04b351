#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mitiforge/adaptation.hpp"

namespace mitiforge::cli {

// Process exit codes, one per stage class.
enum ExitCode : int {
  kExitOk = 0,
  kExitUnexpected = 1,
  kExitConfig = 2,
  kExitIngest = 3,
  kExitDb = 4,
  kExitClassify = 5,
  kExitParse = 6,
  kExitGeneration = 7,
  kExitHarness = 8,
  kExitPatchFailed = 10,
};

int exit_code_for(ErrorCode code);

/// Flat configuration document. Every key has a default; unknown keys are
/// rejected with Error(InvalidConfig).
struct RunConfig {
  // ingest
  std::filesystem::path cache_dir = ".mitiforge-cache";
  bool offline = false;
  int fetch_parallelism = 4;
  int fetch_timeout = 30;
  // retrieval
  std::string embedder = "fallback";  // fallback | http
  std::string embedder_url;
  std::string embedder_model;
  double threshold_k = 0.5;
  std::filesystem::path index_path = "mitigation-index.jsonl";
  // classification and generation
  std::string llm = "mock";  // mock | http
  std::string llm_url;
  std::string llm_model;
  int llm_timeout = 120;
  int llm_max_retries = 2;
  double llm_temperature = 0.0;
  std::filesystem::path mock_path;
  std::filesystem::path rules_path;
  std::filesystem::path catalog_path;
  bool rule_fallback = true;
  int max_prompt_chars = 24000;
  int thread_monitor_timeout = 10;
  // harness
  std::string harness = "process";  // process | scripted
  std::string compile_cmd;
  std::string test_cmd;
  std::filesystem::path workspace;
  std::filesystem::path harness_script;
  int harness_timeout = 600;
  std::string test_report_glob = "**/TEST-*.xml";

  static const std::vector<std::string>& keys();

  /// Assigns one key from its textual form (used by --set).
  void set(const std::string& key, const std::string& value);
  /// Applies a JSON object document; relative paths resolve against `base_dir`.
  void apply_json(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
  std::string to_json() const;

  /// Throws Error(InvalidConfig) for out-of-range values.
  void validate() const;
};

struct Components {
  std::shared_ptr<HttpTransport> transport;
  std::unique_ptr<retrieval::Embedder> embedder;
  std::unique_ptr<llm::ChatBackend> llm;
  std::optional<classify::BehaviorRules> rules;
  std::optional<strategy::StrategyCatalog> catalog;

  adapt::PipelineConfig pipeline_config(const RunConfig& cfg) const;
};

/// Instantiates backends from the config. The LLM is created lazily by
/// callers that need one; `with_llm` controls that here.
Components make_components(const RunConfig& cfg, bool with_llm);

// --- evaluation -------------------------------------------------------------

struct EvalRow {
  std::string library;
  std::string cve_id;
  std::string api;
  bool mitigated = false;
  std::optional<strategy::StrategyName> strategy;
  generate::Rounds rounds;
  std::optional<bool> functionality_safe;
  std::string reason;  // status label or error, empty when mitigated

  bool operator==(const EvalRow&) const = default;
};

std::string eval_rows_to_csv(const std::vector<EvalRow>& rows);
std::vector<EvalRow> eval_rows_from_csv(std::string_view csv);

struct LibrarySummary {
  std::string library;
  std::size_t vulnerabilities = 0;
  std::vector<std::string> apis;
  std::size_t mitigated = 0;
  std::size_t total = 0;
};

/// Per-library aggregation in first-seen order.
std::vector<LibrarySummary> summarize(const std::vector<EvalRow>& rows);
/// Libraries / Vul. / API / Mitigated table with a totals line.
std::string render_eval_table(const std::vector<EvalRow>& rows);

struct ManifestEntry {
  std::filesystem::path record;  // NVD JSON feed containing the CVE
  std::string cve_id;            // empty: the feed's first record
  std::filesystem::path workspace;
  std::filesystem::path file;    // relative to workspace
  std::string function;
  std::string api;
  std::string dependency;
  std::filesystem::path exploit;  // optional plain-text exploit reference
  std::string exploit_test_id;
  std::vector<std::string> functionality_test_ids;
  std::filesystem::path harness_script;  // optional; selects the scripted harness
};

/// JSON array of entries; relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

struct EvalRun {
  std::vector<EvalRow> rows;
  std::vector<std::string> run_records;  // one JSONL document per entry
};

ingest::VulnRecord load_record(const std::filesystem::path& feed, const std::string& cve_id);
context::ImpactedFunction load_impacted(const std::filesystem::path& workspace,
                                        const std::filesystem::path& file,
                                        const std::string& function, const std::string& api,
                                        const std::string& dependency);
/// Scripted when a script is given (or configured), otherwise the process harness.
std::unique_ptr<adapt::BuildHarness> make_harness(const RunConfig& cfg,
                                                  const std::filesystem::path& workspace,
                                                  const std::filesystem::path& script_override,
                                                  const std::filesystem::path& file,
                                                  const std::string& function);

EvalRun evaluate_manifest(const std::vector<ManifestEntry>& entries, const RunConfig& cfg,
                          const retrieval::MitigationIndex& index, Components& components);

// --- database ---------------------------------------------------------------

struct BuildDbSummary {
  std::size_t parsed = 0;
  std::size_t with_mitigation = 0;  // records with a mitigation-tagged reference
  std::size_t indexed = 0;
  std::size_t skipped_records = 0;  // dropped by feed validation
  std::vector<std::string> warnings;
};

/// Ingests feeds, extracts workaround sections from mitigation-tagged
/// references and writes the index to `out`.
BuildDbSummary build_db(const std::vector<std::filesystem::path>& feeds, const RunConfig& cfg,
                        Components& components, const std::filesystem::path& out);

// --- entry point ------------------------------------------------------------

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mitiforge::cli
