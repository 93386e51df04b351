#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mitiforge/cli.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::cli {

namespace fs = std::filesystem;

BuildDbSummary build_db(const std::vector<fs::path>& feeds, const RunConfig& cfg,
                        Components& components, const fs::path& out) {
  BuildDbSummary summary;
  std::vector<ingest::VulnRecord> records;
  for (const auto& feed : feeds) {
    try {
      auto parsed = ingest::parse_cve_feed(ingest::load_feed_file(feed));
      summary.skipped_records += parsed.skipped();
      for (auto& r : parsed.records) records.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(e.code(), feed.string() + ": " + e.what());
    }
  }
  summary.parsed = records.size();

  ingest::FetchConfig fc;
  fc.cache_dir = cfg.cache_dir;
  fc.offline = cfg.offline;
  fc.parallelism = cfg.fetch_parallelism;
  fc.timeout_seconds = cfg.fetch_timeout;
  ingest::ReferenceFetcher fetcher(fc, cfg.offline ? nullptr : components.transport);

  std::vector<retrieval::MitigationEntry> entries;
  for (const auto& r : records) {
    std::vector<ingest::ReferenceLink> links;
    for (const auto& ref : r.references) {
      if (ref.has(ingest::RefTag::Mitigation)) links.push_back(ref);
    }
    if (links.empty()) continue;
    ++summary.with_mitigation;

    retrieval::MitigationEntry entry;
    entry.cve_id = r.cve_id;
    entry.description = r.description;
    for (const auto& outcome : fetcher.fetch_all(links)) {
      if (!outcome.body) {
        summary.warnings.push_back(r.cve_id + ": " + outcome.error_message);
        continue;
      }
      auto page = ingest::html_to_text(ingest::sanitize_utf8(*outcome.body));
      for (auto& s : ingest::extract_workaround_sections(page, outcome.url)) {
        entry.workarounds.push_back(std::move(s));
      }
    }
    if (entry.workarounds.empty()) continue;
    try {
      entry.embedding = retrieval::embed_description(entry.description, *components.embedder);
    } catch (const Error& e) {
      throw Error(e.code(), r.cve_id + ": " + e.what());
    }
    entries.push_back(std::move(entry));
  }
  auto index = retrieval::MitigationIndex::build(std::move(entries));
  summary.indexed = index.size();
  index.save(out);
  return summary;
}

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> sets;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path);
  for (const auto& kv : g.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

retrieval::MitigationIndex load_index(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw Error(ErrorCode::InvalidConfig, "index file " + path.string() + " does not exist");
  }
  return retrieval::MitigationIndex::load(path);
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generates and validates downstream mitigations for library vulnerabilities"};
  app.name("mitiforge");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config document")->check(CLI::ExistingFile);
  app.add_option("--set", g.sets, "Override a config key (key=value)");

  auto* build = app.add_subcommand("build-db", "Build the mitigation index from NVD feeds");
  std::vector<std::string> feeds;
  std::string out_path;
  build->add_option("--feed", feeds, "NVD JSON 2.0 feed (optionally gzip)")->required();
  build->add_option("--out", out_path, "Index file (default: index_path)");

  auto* classify_cmd = app.add_subcommand("classify", "Classify reproducing behavior of a CVE");
  std::string record_path, cve_id;
  classify_cmd->add_option("--record", record_path, "NVD feed holding the record")->required();
  classify_cmd->add_option("--cve", cve_id, "CVE id (default: first record)");

  auto* extract = app.add_subcommand("extract-context", "Slice an impacted function");
  std::string file, function, api, dependency;
  bool lenient = false;
  extract->add_option("--file", file, "Java source file")->required();
  extract->add_option("--function", function, "Method name")->required();
  extract->add_option("--api", api, "Vulnerable API, e.g. XStream#fromXML")->required();
  extract->add_flag("--lenient", lenient, "Empty slice instead of an error without call sites");

  auto* mitigate = app.add_subcommand("mitigate", "Run the full pipeline for one function");
  std::string exploit_path, out_dir = ".", index_path;
  mitigate->add_option("--record", record_path, "NVD feed holding the record")->required();
  mitigate->add_option("--cve", cve_id, "CVE id (default: first record)");
  mitigate->add_option("--file", file, "Source file, relative to the workspace")->required();
  mitigate->add_option("--function", function, "Impacted method name")->required();
  mitigate->add_option("--api", api, "Vulnerable API")->required();
  mitigate->add_option("--dependency", dependency, "group:artifact:version")->required();
  mitigate->add_option("--exploit", exploit_path, "Plain-text exploit reference");
  mitigate->add_option("--out-dir", out_dir, "Where outputs are written");
  mitigate->add_option("--index", index_path, "Index file (default: index_path)");

  auto* evaluate = app.add_subcommand("evaluate", "Run a manifest and print the result table");
  std::string manifest_path, csv_path, records_path;
  evaluate->add_option("--manifest", manifest_path, "JSON manifest")->required();
  evaluate->add_option("--csv", csv_path, "Write rows as CSV");
  evaluate->add_option("--run-records", records_path, "Write run records as JSON lines");
  evaluate->add_option("--index", index_path, "Index file (default: index_path)");

  auto* sweep = app.add_subcommand("sweep-threshold", "Count resembling decisions per threshold");
  double k_from = 0.0, k_to = 2.0, k_step = 0.1;
  sweep->add_option("--feed", feeds, "Feeds holding the query records")->required();
  sweep->add_option("--index", index_path, "Index file (default: index_path)");
  sweep->add_option("--from", k_from, "Lowest threshold");
  sweep->add_option("--to", k_to, "Highest threshold");
  sweep->add_option("--step", k_step, "Threshold step")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const RunConfig cfg = resolve_config(g);
    const fs::path index_file = index_path.empty() ? cfg.index_path : fs::path(index_path);

    if (*build) {
      auto components = make_components(cfg, false);
      const fs::path dest = out_path.empty() ? cfg.index_path : fs::path(out_path);
      std::vector<fs::path> paths(feeds.begin(), feeds.end());
      auto s = build_db(paths, cfg, components, dest);
      for (const auto& w : s.warnings) err << "warning: " << w << "\n";
      out << "parsed=" << s.parsed << " with_mitigation=" << s.with_mitigation
          << " indexed=" << s.indexed << " skipped=" << s.skipped_records
          << " warnings=" << s.warnings.size() << "\n";
      return kExitOk;
    }

    if (*classify_cmd) {
      const bool with_llm = cfg.llm == "http" || !cfg.mock_path.empty();
      auto components = make_components(cfg, with_llm);
      auto record = load_record(record_path, cve_id);
      const auto& rules = components.rules ? *components.rules : classify::BehaviorRules::builtin();
      classify::ClassifyOptions opts;
      opts.rule_fallback = cfg.rule_fallback;
      auto c = classify::classify_type(record, components.llm.get(), opts, rules);
      nlohmann::ordered_json j{{"cve_id", record.cve_id},
                               {"type", classify::to_string(c.type)},
                               {"source", classify::to_string(c.source)},
                               {"warnings", c.warnings}};
      out << j.dump(2) << "\n";
      return kExitOk;
    }

    if (*extract) {
      auto loc = context::locate_function(text::read_file(file), function);
      context::ImpactedFunction fn;
      fn.file_path = file;
      fn.function_name = function;
      fn.source_text = loc.text;
      fn.api = context::VulnerableApi::parse(api);
      auto slice = context::extract_context(fn, !lenient);
      out << slice.to_json() << "\n";
      return kExitOk;
    }

    if (*mitigate) {
      auto index = load_index(index_file);
      auto components = make_components(cfg, true);
      const fs::path workspace = cfg.workspace.empty() ? fs::current_path() : cfg.workspace;
      adapt::PipelineInput in;
      in.record = load_record(record_path, cve_id);
      in.impacted = load_impacted(workspace, file, function, api, dependency);
      if (!exploit_path.empty()) in.exploit_text = text::read_file(exploit_path);
      auto harness = make_harness(cfg, workspace, {}, file, function);
      auto result = adapt::run_pipeline(in, index, *components.embedder,
                                        components.pipeline_config(cfg), *components.llm,
                                        *harness);
      fs::create_directories(out_dir);
      const auto base = fs::path(out_dir) / function;
      text::write_file_atomic(base.string() + ".mitigated", result.patch.function_text);
      text::write_file_atomic(base.string() + ".run.jsonl", result.run_record_jsonl());
      out << "cve: " << in.record.cve_id << "\n"
          << "decision: " << retrieval::to_string(result.decision);
      if (result.distance) out << " (distance " << fixed6(*result.distance) << ")";
      out << "\nstrategy: " << strategy::display_name(result.patch.strategy_used) << "\n"
          << "rounds: syntax=" << result.patch.rounds.syntax
          << " functionality=" << result.patch.rounds.functionality << "\n"
          << "status: " << result.patch.status_label() << "\n"
          << "patched function: " << base.string() << ".mitigated\n";
      return result.patch.status == generate::PatchStatus::Validated ? kExitOk : kExitPatchFailed;
    }

    if (*evaluate) {
      auto entries = load_manifest(manifest_path);
      auto index = load_index(index_file);
      auto components = make_components(cfg, true);
      auto result = evaluate_manifest(entries, cfg, index, components);
      out << render_eval_table(result.rows);
      for (const auto& r : result.rows) {
        if (!r.mitigated) err << r.cve_id << " (" << r.library << "): " << r.reason << "\n";
      }
      if (!csv_path.empty()) text::write_file_atomic(csv_path, eval_rows_to_csv(result.rows));
      if (!records_path.empty()) {
        text::write_file_atomic(records_path, text::join(result.run_records, ""));
      }
      return kExitOk;
    }

    if (*sweep) {
      if (k_from < 0.0 || k_to > 2.0 || k_from > k_to) {
        throw Error(ErrorCode::InvalidArgument, "thresholds must satisfy 0 <= from <= to <= 2");
      }
      auto index = load_index(index_file);
      auto components = make_components(cfg, false);
      std::vector<retrieval::EmbeddingVector> queries;
      for (const auto& f : feeds) {
        for (const auto& r : ingest::parse_cve_feed(ingest::load_feed_file(f)).records) {
          queries.push_back(retrieval::embed_description(r.description, *components.embedder));
        }
      }
      std::vector<double> ks;
      const int steps = static_cast<int>((k_to - k_from) / k_step + 1e-9);
      for (int i = 0; i <= steps; ++i) ks.push_back(k_from + i * k_step);
      out << "k,resembling,total\n";
      for (const auto& row : retrieval::sweep_threshold(index, queries, ks)) {
        char k[16];
        std::snprintf(k, sizeof k, "%.2f", row.k);
        out << k << "," << row.resembling_count << "," << queries.size() << "\n";
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnexpected;
  }
  return kExitUnexpected;
}

}  // namespace mitiforge::cli
