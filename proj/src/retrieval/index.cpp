#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mitiforge/mitigation_db.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::retrieval {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "mitiforge-index";

json section_to_json(const ingest::WorkaroundSection& s) {
  return {{"source_url", s.source_url},
          {"matched_keyword", s.matched_keyword},
          {"text", s.text},
          {"char_span", {s.char_span.start, s.char_span.end}}};
}

ingest::WorkaroundSection section_from_json(const json& j) {
  ingest::WorkaroundSection s;
  s.source_url = j.at("source_url").get<std::string>();
  s.matched_keyword = j.at("matched_keyword").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.char_span = {j.at("char_span").at(0).get<std::size_t>(),
                 j.at("char_span").at(1).get<std::size_t>()};
  return s;
}

}  // namespace

std::string_view to_string(StrategyDecision d) {
  return d == StrategyDecision::Resembling ? "Resembling" : "TypeBased";
}

void RetrievalConfig::validate() const {
  if (!(threshold_k >= 0.0 && threshold_k <= 2.0)) {
    throw Error(ErrorCode::InvalidConfig, "threshold_k must lie in [0, 2]");
  }
}

MitigationIndex MitigationIndex::build(std::vector<MitigationEntry> entries) {
  MitigationIndex index;
  for (const auto& e : entries) {
    if (e.workarounds.empty()) {
      throw Error(ErrorCode::InvalidArgument, e.cve_id + " has no workaround sections");
    }
    if (e.embedding.dim() == 0) {
      throw Error(ErrorCode::InvalidVector, e.cve_id + " has no embedding");
    }
    if (index.dim_ == 0) {
      index.dim_ = e.embedding.dim();
    } else if (e.embedding.dim() != index.dim_) {
      throw Error(ErrorCode::DimensionMismatch,
                  e.cve_id + " has dimension " + std::to_string(e.embedding.dim()) +
                      ", index has " + std::to_string(index.dim_));
    }
  }
  index.entries_ = std::move(entries);
  return index;
}

std::optional<std::pair<std::size_t, double>> MitigationIndex::nearest(
    const EmbeddingVector& query) const {
  if (entries_.empty()) return std::nullopt;
  if (query.dim() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(query.dim()) +
                                                  " vs index " + std::to_string(dim_));
  }
  std::size_t best = 0;
  double best_d = cosine_distance(entries_[0].embedding, query);
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    double d = cosine_distance(entries_[i].embedding, query);
    if (d < best_d || (d == best_d && entries_[i].cve_id < entries_[best].cve_id)) {
      best = i;
      best_d = d;
    }
  }
  return std::make_pair(best, best_d);
}

RetrievalResult query_nearest(const MitigationIndex& index, const EmbeddingVector& query,
                              const RetrievalConfig& cfg) {
  cfg.validate();
  RetrievalResult result;
  if (auto hit = index.nearest(query)) {
    result.best = ScoredEntry{index.entries()[hit->first], hit->second};
    if (hit->second <= cfg.threshold_k) result.decision = StrategyDecision::Resembling;
  }
  return result;
}

std::vector<SweepRow> sweep_threshold(const MitigationIndex& index,
                                      std::span<const EmbeddingVector> queries,
                                      std::span<const double> ks) {
  if (!std::is_sorted(ks.begin(), ks.end())) {
    throw Error(ErrorCode::InvalidArgument, "threshold sweep values must be ascending");
  }
  std::vector<double> best;
  best.reserve(queries.size());
  for (const auto& q : queries) {
    if (auto hit = index.nearest(q)) best.push_back(hit->second);
  }
  std::vector<SweepRow> rows;
  rows.reserve(ks.size());
  for (double k : ks) {
    auto n = static_cast<std::size_t>(
        std::count_if(best.begin(), best.end(), [k](double d) { return d <= k; }));
    rows.push_back({k, n});
  }
  return rows;
}

std::string MitigationIndex::to_jsonl() const {
  std::string out = json{{"format", kFormatName},
                         {"version", kFormatVersion},
                         {"dim", dim_},
                         {"count", entries_.size()},
                         {"metric", "cosine_distance"}}
                        .dump();
  out.push_back('\n');
  for (const auto& e : entries_) {
    json sections = json::array();
    for (const auto& s : e.workarounds) sections.push_back(section_to_json(s));
    json rec = {{"cve_id", e.cve_id},
                {"description", e.description},
                {"workarounds", sections},
                {"vector", std::vector<double>(e.embedding.values().begin(),
                                               e.embedding.values().end())}};
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

MitigationIndex MitigationIndex::from_jsonl(std::string_view data) {
  auto lines = text::split_lines(data);
  std::size_t li = 0;
  while (li < lines.size() && text::trim(lines[li]).empty()) ++li;
  if (li == lines.size()) throw Error(ErrorCode::MalformedIndex, "index file is empty");
  try {
    auto header = json::parse(lines[li]);
    if (header.at("format").get<std::string>() != kFormatName) {
      throw Error(ErrorCode::MalformedIndex, "not a mitiforge index");
    }
    if (header.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::MalformedIndex, "unsupported index version");
    }
    if (header.at("metric").get<std::string>() != "cosine_distance") {
      throw Error(ErrorCode::MalformedIndex, "unsupported metric");
    }
    auto dim = header.at("dim").get<std::size_t>();
    auto count = header.at("count").get<std::size_t>();
    std::vector<MitigationEntry> entries;
    for (++li; li < lines.size(); ++li) {
      if (text::trim(lines[li]).empty()) continue;
      auto rec = json::parse(lines[li]);
      MitigationEntry e;
      e.cve_id = rec.at("cve_id").get<std::string>();
      e.description = rec.at("description").get<std::string>();
      for (const auto& s : rec.at("workarounds")) e.workarounds.push_back(section_from_json(s));
      e.embedding = EmbeddingVector::from_unit(rec.at("vector").get<std::vector<double>>());
      entries.push_back(std::move(e));
    }
    if (entries.size() != count) {
      throw Error(ErrorCode::MalformedIndex, "header count " + std::to_string(count) +
                                                 " but " + std::to_string(entries.size()) +
                                                 " records");
    }
    auto index = build(std::move(entries));
    if (!index.empty() && index.dim() != dim) {
      throw Error(ErrorCode::MalformedIndex, "header dimension disagrees with records");
    }
    index.dim_ = index.empty() ? dim : index.dim_;
    return index;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedIndex, std::string("bad index record: ") + e.what());
  }
}

void MitigationIndex::save(const std::filesystem::path& path) const {
  text::write_file_atomic(path.string(), to_jsonl());
}

MitigationIndex MitigationIndex::load(const std::filesystem::path& path) {
  return from_jsonl(text::read_file(path.string()));
}

}  // namespace mitiforge::retrieval
