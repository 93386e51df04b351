#pragma once

// Description embeddings, the historical mitigation index and the
// resembling-vs-type-based decision.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mitiforge/http.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::retrieval {

/// Unit-length vector; construction validates finiteness and normalization so
/// cosine similarity reduces to a dot product.
class EmbeddingVector {
 public:
  static constexpr double kNormTolerance = 1e-6;

  EmbeddingVector() = default;

  /// Scales `raw` to unit length. Throws InvalidVector on zero or
  /// non-finite input.
  static EmbeddingVector normalize(std::vector<double> raw);
  /// Accepts values that are already unit length (within kNormTolerance).
  static EmbeddingVector from_unit(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double dot(const EmbeddingVector& other) const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  explicit EmbeddingVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

/// d = 1 - cos, clamped to [0, 2].
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic hashed bag-of-words: lower-cased alphanumeric tokens, FNV-1a
/// into 512 buckets, raw term-frequency weights, L2-normalized.
class HashingEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDim = 512;

  EmbeddingVector embed(std::string_view text) override;
  std::size_t dim() const override { return kDim; }
  std::string name() const override { return "fallback"; }

  static std::vector<std::string> tokenize(std::string_view text);
  static std::size_t bucket(std::string_view token);
};

/// OpenAI-style embeddings endpoint: POST {"model", "input"} and read
/// data[0].embedding.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string url, std::string model, std::shared_ptr<HttpTransport> transport,
               std::string api_key = {}, int timeout_seconds = 30);

  EmbeddingVector embed(std::string_view text) override;
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "http"; }

 private:
  std::string url_;
  std::string model_;
  std::shared_ptr<HttpTransport> transport_;
  std::string api_key_;
  int timeout_seconds_;
  std::size_t dim_ = 0;
};

/// Throws EmptyText for blank input.
EmbeddingVector embed_description(std::string_view text, Embedder& backend);

struct MitigationEntry {
  std::string cve_id;
  std::string description;
  std::vector<ingest::WorkaroundSection> workarounds;
  EmbeddingVector embedding;

  bool operator==(const MitigationEntry&) const = default;
};

enum class Metric { CosineDistance };

struct RetrievalConfig {
  double threshold_k = 0.5;
  Metric metric = Metric::CosineDistance;

  /// Throws InvalidConfig unless 0 <= threshold_k <= 2.
  void validate() const;
};

enum class StrategyDecision { Resembling, TypeBased };

std::string_view to_string(StrategyDecision d);

struct ScoredEntry {
  MitigationEntry entry;
  double distance = 0.0;
};

struct RetrievalResult {
  std::optional<ScoredEntry> best;
  StrategyDecision decision = StrategyDecision::TypeBased;
};

/// Exact linear-scan index, immutable after construction.
class MitigationIndex {
 public:
  MitigationIndex() = default;

  /// Throws DimensionMismatch when embeddings disagree on dimension and
  /// InvalidArgument for entries without workarounds.
  static MitigationIndex build(std::vector<MitigationEntry> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// 0 for an empty index.
  std::size_t dim() const { return dim_; }
  const std::vector<MitigationEntry>& entries() const { return entries_; }

  /// Index of the nearest entry and its distance; ties go to the smallest
  /// cve_id.
  std::optional<std::pair<std::size_t, double>> nearest(const EmbeddingVector& query) const;

  std::string to_jsonl() const;
  static MitigationIndex from_jsonl(std::string_view data);
  void save(const std::filesystem::path& path) const;
  static MitigationIndex load(const std::filesystem::path& path);

 private:
  std::vector<MitigationEntry> entries_;
  std::size_t dim_ = 0;
};

inline MitigationIndex build_index(std::vector<MitigationEntry> entries) {
  return MitigationIndex::build(std::move(entries));
}

/// Resembling iff a best entry exists with distance <= threshold_k.
RetrievalResult query_nearest(const MitigationIndex& index, const EmbeddingVector& query,
                              const RetrievalConfig& cfg);

struct SweepRow {
  double k = 0.0;
  std::size_t resembling_count = 0;
};

/// `ks` must be ascending (InvalidArgument otherwise).
std::vector<SweepRow> sweep_threshold(const MitigationIndex& index,
                                      std::span<const EmbeddingVector> queries,
                                      std::span<const double> ks);

}  // namespace mitiforge::retrieval
