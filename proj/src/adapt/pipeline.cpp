#include <chrono>
#include <cstdio>
#include <functional>

#include "json.hpp"
#include "mitiforge/adaptation.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::adapt {

using generate::MitigationPatch;
using generate::PatchStatus;
using retrieval::StrategyDecision;

std::string StageRecord::to_json() const {
  nlohmann::ordered_json j{{"stage", stage},
                           {"input_digest", input_digest},
                           {"decision", decision},
                           {"duration_ms", duration_ms}};
  return j.dump();
}

std::string PipelineResult::run_record_jsonl(bool with_durations) const {
  std::string out;
  for (const auto& s : stages) {
    if (with_durations) {
      out += s.to_json();
    } else {
      out += nlohmann::ordered_json{
          {"stage", s.stage}, {"input_digest", s.input_digest}, {"decision", s.decision}}
                 .dump();
    }
    out += "\n";
  }
  return out;
}

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string api_call_text(const context::VulnerableApi& api) {
  return api.type_or_receiver ? *api.type_or_receiver + "." + api.method_name : api.method_name;
}

class StageRunner {
 public:
  StageRunner(PipelineResult& result, WorkspacePatcher* patcher)
      : result_(result), patcher_(patcher) {}

  void set_patcher(WorkspacePatcher* p) { patcher_ = p; }

  // `body` returns the stage decision
  void run(const std::string& stage, const std::string& input,
           const std::function<std::string()>& body) {
    const auto start = std::chrono::steady_clock::now();
    StageRecord rec;
    rec.stage = stage;
    rec.input_digest = text::sha256_hex(input);
    try {
      rec.decision = body();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      if (patcher_) patcher_->restore();
      throw StageError(stage, e);
    }
    rec.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    result_.stages.push_back(std::move(rec));
  }

 private:
  PipelineResult& result_;
  WorkspacePatcher* patcher_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineInput& input, const retrieval::MitigationIndex& index,
                            retrieval::Embedder& embedder, const PipelineConfig& cfg,
                            llm::ChatBackend& llm, BuildHarness& harness) {
  const auto& rules = cfg.rules ? *cfg.rules : classify::BehaviorRules::builtin();
  const auto& catalog = cfg.catalog ? *cfg.catalog : strategy::StrategyCatalog::builtin();
  const auto& record = input.record;
  const auto& impacted = input.impacted;

  PipelineResult result;
  StageRunner stages(result, nullptr);

  retrieval::RetrievalResult retrieved;
  stages.run("retrieve", record.description, [&] {
    auto query = retrieval::embed_description(record.description, embedder);
    retrieved = retrieval::query_nearest(index, query, cfg.retrieval);
    result.decision = retrieved.decision;
    if (!retrieved.best) return std::string("TypeBased (empty index)");
    result.distance = retrieved.best->distance;
    std::string d = std::string(retrieval::to_string(retrieved.decision)) + " nearest=" +
                    retrieved.best->entry.cve_id + " distance=" + fixed6(retrieved.best->distance);
    if (retrieved.decision == StrategyDecision::Resembling) {
      result.resembling_cve = retrieved.best->entry.cve_id;
    }
    return d;
  });

  generate::GenerationRequest req;
  req.record = record;
  req.impacted = impacted;
  req.few_shots = catalog.few_shots();
  strategy::RenderOptions render{cfg.thread_monitor_timeout};

  if (retrieved.decision == StrategyDecision::Resembling) {
    const auto& hist = retrieved.best->entry;
    stages.run("version_retrieval",
               strategy::build_version_retrieval_prompt(hist, record, impacted.dependency), [&] {
                 auto w = strategy::retrieve_versioned_workaround(hist, record,
                                                                  impacted.dependency, llm);
                 req.strategy = strategy::StrategyName::Resembling;
                 req.strategy_block = strategy::render_resembling(w);
                 return "workaround from " + w.cve_id + " for " + w.dependency_version;
               });
  } else {
    classify::Classification cls;
    stages.run("classify", classify::build_classification_prompt(record), [&] {
      cls = classify::classify_type(record, &llm, cfg.classify, rules);
      result.vtype = cls.type;
      std::string d = std::string(classify::to_string(cls.type)) + " via " +
                      std::string(classify::to_string(cls.source));
      for (const auto& w : cls.warnings) d += " [" + w.substr(0, w.find(':')) + "]";
      return d;
    });
    if (cls.type == classify::VulnerabilityType::Unclassified) {
      result.patch.status = PatchStatus::Failed;
      result.patch.reason = generate::FailureReason::Unclassifiable;
      result.patch.function_text = impacted.source_text;
      return result;
    }
    classify::ExtractionInput ex;
    ex.record = &record;
    ex.vtype = cls.type;
    ex.exploit_text = input.exploit_text;
    ex.impacted_code = impacted.source_text;
    ex.vulnerable_api = api_call_text(impacted.api);
    classify::MitigatingInfo info;
    stages.run("extract_info", classify::build_extraction_prompt(ex), [&] {
      info = classify::extract_mitigating_info(ex, llm);
      return std::string(classify::to_string(info.kind)) + "=" + info.value;
    });
    stages.run("select_strategy", std::string(classify::to_string(cls.type)), [&] {
      const auto& s = strategy::select_type_strategy(cls.type, catalog);
      req.vtype = cls.type;
      req.strategy = s.name;
      req.strategy_block = strategy::render_strategy(s, info, render);
      return std::string(strategy::to_string(s.name));
    });
  }

  stages.run("context", impacted.source_text, [&] {
    req.slice = context::extract_context(impacted, true);
    std::vector<std::string> ls;
    for (int l : req.slice.lines) ls.push_back(std::to_string(l));
    return "lines=" + text::join(ls, ",") + " sites=" + std::to_string(req.slice.call_sites.size());
  });

  std::string prompt;
  MitigationPatch candidate;
  stages.run("generate", req.strategy_block, [&] {
    prompt = generate::build_generation_prompt(req, cfg.generation);
    candidate = generate::generate_mitigation(req, llm, cfg.generation);
    return std::string("Candidate ") + std::string(strategy::to_string(candidate.strategy_used));
  });

  std::filesystem::path file = impacted.file_path;
  if (file.is_relative()) file = harness.workspace() / file;

  std::optional<WorkspacePatcher> patcher;
  stages.run("baseline_tests", impacted.file_path.string(), [&] {
    patcher.emplace(file, impacted.function_name);
    result.baseline = harness.run_tests();
    return "total=" + std::to_string(result.baseline.total) +
           " failed=" + std::to_string(result.baseline.failed.size());
  });
  stages.set_patcher(&*patcher);

  AdaptContext ctx{harness, *patcher, llm};
  MitigationPatch patch;
  stages.run("adapt_syntax", candidate.function_text, [&] {
    patch = adapt_syntax(candidate, ctx);
    return patch.status_label() + " rounds=" + std::to_string(patch.rounds.syntax);
  });
  if (patch.status == PatchStatus::Failed) {
    result.patch = patch;
    return result;
  }

  stages.run("adapt_functionality", patch.function_text, [&] {
    patch = adapt_functionality(patch, ctx, result.baseline, prompt, &result.final_report);
    return patch.status_label() + " rounds=" + std::to_string(patch.rounds.functionality);
  });
  result.patch = patch;
  return result;
}

}  // namespace mitiforge::adapt
