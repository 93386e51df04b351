#include <stdlib.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "mitiforge/cli.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::cli {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::Io:
    case ErrorCode::MalformedCatalog:
      return kExitConfig;
    case ErrorCode::MalformedFeed:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::NetworkError:
    case ErrorCode::CacheMiss:
    case ErrorCode::HttpStatus:
      return kExitIngest;
    case ErrorCode::EmptyText:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidVector:
    case ErrorCode::MalformedIndex:
      return kExitDb;
    case ErrorCode::MalformedReply:
    case ErrorCode::UnclassifiedType:
      return kExitClassify;
    case ErrorCode::ParseError:
    case ErrorCode::NoCallSite:
    case ErrorCode::FunctionNotFound:
      return kExitParse;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::UnparseableReply:
    case ErrorCode::UnknownPrompt:
    case ErrorCode::PromptTooLong:
    case ErrorCode::InfoKindMismatch:
      return kExitGeneration;
    case ErrorCode::HarnessError:
      return kExitHarness;
  }
  return kExitUnexpected;
}

// --- CSV --------------------------------------------------------------------

namespace {

constexpr const char* kCsvHeader =
    "library,cve_id,api,mitigated,strategy,syntax_rounds,functionality_rounds,"
    "functionality_safe,reason";

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    char c = csv[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < csv.size() && csv[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidArgument, "csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string opt_bool(const std::optional<bool>& b) {
  if (!b) return "";
  return *b ? "true" : "false";
}

bool csv_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(ErrorCode::InvalidArgument, "csv: expected true or false, got '" + s + "'");
}

int csv_int(const std::string& s) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "csv: expected an integer, got '" + s + "'");
}

}  // namespace

std::string eval_rows_to_csv(const std::vector<EvalRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    std::vector<std::string> cells = {
        csv_field(r.library),
        csv_field(r.cve_id),
        csv_field(r.api),
        r.mitigated ? "true" : "false",
        r.strategy ? std::string(strategy::to_string(*r.strategy)) : "",
        std::to_string(r.rounds.syntax),
        std::to_string(r.rounds.functionality),
        opt_bool(r.functionality_safe),
        csv_field(r.reason),
    };
    out += text::join(cells, ",") + "\n";
  }
  return out;
}

std::vector<EvalRow> eval_rows_from_csv(std::string_view csv) {
  auto table = parse_csv(csv);
  if (table.empty() || text::join(table.front(), ",") != kCsvHeader) {
    throw Error(ErrorCode::InvalidArgument, "csv: missing or unexpected header");
  }
  std::vector<EvalRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& c = table[i];
    if (c.size() != 9) {
      throw Error(ErrorCode::InvalidArgument,
                  "csv: row " + std::to_string(i) + " has " + std::to_string(c.size()) + " fields");
    }
    EvalRow r;
    r.library = c[0];
    r.cve_id = c[1];
    r.api = c[2];
    r.mitigated = csv_bool(c[3]);
    if (!c[4].empty()) {
      r.strategy = strategy::parse_strategy_name(c[4]);
      if (!r.strategy) throw Error(ErrorCode::InvalidArgument, "csv: unknown strategy " + c[4]);
    }
    r.rounds.syntax = csv_int(c[5]);
    r.rounds.functionality = csv_int(c[6]);
    if (!c[7].empty()) r.functionality_safe = csv_bool(c[7]);
    r.reason = c[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

// --- table ------------------------------------------------------------------

std::vector<LibrarySummary> summarize(const std::vector<EvalRow>& rows) {
  std::vector<LibrarySummary> out;
  std::vector<std::set<std::string>> cves;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const LibrarySummary& s) { return s.library == r.library; });
    if (it == out.end()) {
      out.push_back({r.library, 0, {}, 0, 0});
      cves.emplace_back();
      it = out.end() - 1;
    }
    auto idx = static_cast<std::size_t>(it - out.begin());
    cves[idx].insert(r.cve_id);
    it->vulnerabilities = cves[idx].size();
    if (std::find(it->apis.begin(), it->apis.end(), r.api) == it->apis.end()) {
      it->apis.push_back(r.api);
    }
    ++it->total;
    if (r.mitigated) ++it->mitigated;
  }
  return out;
}

std::string render_eval_table(const std::vector<EvalRow>& rows) {
  const auto libs = summarize(rows);
  std::vector<std::array<std::string, 4>> lines;
  lines.push_back({"Libraries", "Vul.", "API", "Mitigated"});
  std::set<std::string> all_cves;
  std::set<std::string> all_apis;
  std::size_t mitigated = 0;
  for (const auto& r : rows) {
    all_cves.insert(r.cve_id);
    all_apis.insert(r.library + "#" + r.api);
    if (r.mitigated) ++mitigated;
  }
  for (const auto& s : libs) {
    lines.push_back({s.library, std::to_string(s.vulnerabilities), text::join(s.apis, "/"),
                     std::to_string(s.mitigated) + "/" + std::to_string(s.total)});
  }
  lines.push_back({"", std::to_string(all_cves.size()), std::to_string(all_apis.size()),
                   std::to_string(mitigated) + "/" + std::to_string(rows.size())});

  std::array<std::size_t, 4> width{};
  for (const auto& l : lines) {
    for (std::size_t i = 0; i < 4; ++i) width[i] = std::max(width[i], l[i].size());
  }
  auto render = [&](const std::array<std::string, 4>& l) {
    std::string s;
    for (std::size_t i = 0; i < 4; ++i) {
      s += l[i] + std::string(width[i] - l[i].size(), ' ');
      s += i + 1 < 4 ? "  " : "";
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::size_t total_width = width[0] + width[1] + width[2] + width[3] + 6;
  std::string rule(total_width, '-');
  std::string out = render(lines.front()) + rule + "\n";
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) out += render(lines[i]);
  out += rule + "\n" + render(lines.back());
  return out;
}

// --- manifest -----------------------------------------------------------------

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  const auto base = path.parent_path();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text::read_file(path.string()));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::InvalidConfig, "manifest must be a JSON array");
  auto resolve = [&](const std::string& p) -> fs::path {
    if (p.empty()) return {};
    fs::path out = p;
    return out.is_relative() ? base / out : out;
  };
  std::vector<ManifestEntry> entries;
  std::size_t i = 0;
  for (const auto& e : doc) {
    try {
      ManifestEntry m;
      m.record = resolve(e.at("record").get<std::string>());
      m.cve_id = e.value("cve_id", std::string());
      m.workspace = resolve(e.at("workspace").get<std::string>());
      m.file = e.at("file").get<std::string>();
      m.function = e.at("function").get<std::string>();
      m.api = e.at("api").get<std::string>();
      m.dependency = e.at("dependency").get<std::string>();
      m.exploit = resolve(e.value("exploit", std::string()));
      m.exploit_test_id = e.at("exploit_test_id").get<std::string>();
      m.functionality_test_ids =
          e.value("functionality_test_ids", std::vector<std::string>{});
      m.harness_script = resolve(e.value("harness_script", std::string()));
      entries.push_back(std::move(m));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::InvalidConfig,
                  "manifest entry " + std::to_string(i) + ": " + ex.what());
    }
    ++i;
  }
  return entries;
}

// --- evaluation -----------------------------------------------------------------

namespace {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "mitiforge-eval-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw Error(ErrorCode::Io, "cannot create a temporary workspace");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

bool stage_ran(const adapt::PipelineResult& r, std::string_view name) {
  return std::any_of(r.stages.begin(), r.stages.end(),
                     [&](const adapt::StageRecord& s) { return s.stage == name; });
}

}  // namespace

ingest::VulnRecord load_record(const fs::path& feed, const std::string& cve_id) {
  auto parsed = ingest::parse_cve_feed(ingest::load_feed_file(feed));
  if (parsed.records.empty()) {
    throw Error(ErrorCode::MalformedFeed, feed.string() + " contains no usable record");
  }
  if (cve_id.empty()) return parsed.records.front();
  for (auto& r : parsed.records) {
    if (r.cve_id == cve_id) return r;
  }
  throw Error(ErrorCode::InvalidArgument, cve_id + " not found in " + feed.string());
}

context::ImpactedFunction load_impacted(const fs::path& workspace, const fs::path& file,
                                        const std::string& function, const std::string& api,
                                        const std::string& dependency) {
  const auto full = file.is_absolute() ? file : workspace / file;
  const auto loc = context::locate_function(text::read_file(full.string()), function);
  context::ImpactedFunction f;
  f.file_path = file;
  f.function_name = function;
  f.source_text = loc.text;
  f.api = context::VulnerableApi::parse(api);
  f.dependency = context::Dependency::parse(dependency);
  return f;
}

std::unique_ptr<adapt::BuildHarness> make_harness(const RunConfig& cfg,
                                                  const fs::path& workspace,
                                                  const fs::path& script_override,
                                                  const fs::path& file,
                                                  const std::string& function) {
  fs::path script = script_override;
  if (script.empty() && cfg.harness == "scripted") script = cfg.harness_script;
  if (!script.empty()) {
    return std::make_unique<adapt::ScriptedHarness>(text::read_file(script.string()), workspace,
                                                    file, function);
  }
  if (cfg.harness == "scripted") {
    throw Error(ErrorCode::InvalidConfig, "harness = scripted needs harness_script");
  }
  adapt::ProcessHarnessConfig pc;
  pc.compile_cmd = cfg.compile_cmd;
  pc.test_cmd = cfg.test_cmd;
  pc.workspace = workspace;
  pc.timeout_seconds = cfg.harness_timeout;
  pc.test_report_glob = cfg.test_report_glob;
  return std::make_unique<adapt::ProcessHarness>(pc);
}

EvalRun evaluate_manifest(const std::vector<ManifestEntry>& entries, const RunConfig& cfg,
                          const retrieval::MitigationIndex& index, Components& components) {
  if (!components.llm) throw Error(ErrorCode::InvalidConfig, "evaluation needs an LLM backend");
  EvalRun run;
  const auto pcfg = components.pipeline_config(cfg);
  for (const auto& e : entries) {
    EvalRow row;
    row.cve_id = e.cve_id;
    try {
      row.library = context::Dependency::parse(e.dependency).artifact;
      row.api = context::VulnerableApi::parse(e.api).method_name;
    } catch (const Error& ex) {
      row.library = e.dependency;
      row.api = e.api;
    }
    std::string record_jsonl;
    try {
      TempDir ws;
      fs::copy(e.workspace, ws.path(), fs::copy_options::recursive);
      adapt::PipelineInput in;
      in.record = load_record(e.record, e.cve_id);
      row.cve_id = in.record.cve_id;
      in.impacted = load_impacted(ws.path(), e.file, e.function, e.api, e.dependency);
      if (!e.exploit.empty()) in.exploit_text = text::read_file(e.exploit.string());
      auto harness = make_harness(cfg, ws.path(), e.harness_script, e.file, e.function);

      auto result = adapt::run_pipeline(in, index, *components.embedder, pcfg, *components.llm,
                                        *harness);
      record_jsonl = result.run_record_jsonl(false);
      const auto& p = result.patch;
      row.rounds = p.rounds;
      if (p.status != generate::PatchStatus::Failed ||
          p.reason != generate::FailureReason::Unclassifiable) {
        row.strategy = p.strategy_used;
      }
      if (stage_ran(result, "adapt_functionality")) {
        const auto fresh = adapt::TestReport::new_failures(result.final_report, result.baseline);
        bool safe = true;
        for (const auto& f : fresh) {
          if (std::find(e.functionality_test_ids.begin(), e.functionality_test_ids.end(),
                        f.test_id) != e.functionality_test_ids.end()) {
            safe = false;
          }
        }
        row.functionality_safe = safe;
      }
      const bool transitioned = !result.baseline.passed(e.exploit_test_id) &&
                                result.final_report.passed(e.exploit_test_id) &&
                                result.final_report.total > 0;
      row.mitigated = p.status == generate::PatchStatus::Validated && transitioned;
      if (!row.mitigated) {
        row.reason = p.status == generate::PatchStatus::Validated
                         ? "exploit test " + e.exploit_test_id + " did not go from fail to pass"
                         : p.status_label();
      }
    } catch (const Error& ex) {
      row.mitigated = false;
      row.reason = ex.what();
    } catch (const fs::filesystem_error& ex) {
      row.mitigated = false;
      row.reason = ex.what();
    }
    if (!row.mitigated && row.reason.empty()) row.reason = "not mitigated";
    run.rows.push_back(std::move(row));
    run.run_records.push_back(std::move(record_jsonl));
  }
  return run;
}

}  // namespace mitiforge::cli
