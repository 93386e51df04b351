#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"
#include "mitiforge/mitigation_db.hpp"
#include "mitiforge/text_util.hpp"

namespace mitiforge::retrieval {

EmbeddingVector EmbeddingVector::normalize(std::vector<double> raw) {
  if (raw.empty()) throw Error(ErrorCode::InvalidVector, "embedding has zero dimension");
  double sq = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidVector, "embedding has non-finite entry");
    sq += v * v;
  }
  if (sq == 0.0) throw Error(ErrorCode::InvalidVector, "cannot normalize a zero vector");
  const double norm = std::sqrt(sq);
  for (double& v : raw) v /= norm;
  return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidVector, "embedding has zero dimension");
  double sq = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidVector, "embedding has non-finite entry");
    sq += v * v;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::InvalidVector, "embedding is not unit length");
  }
  return EmbeddingVector(std::move(values));
}

double EmbeddingVector::dot(const EmbeddingVector& other) const {
  if (dim() != other.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dimension " + std::to_string(dim()) + " vs " +
                                                  std::to_string(other.dim()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) acc += values_[i] * other.values_[i];
  return acc;
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a == b) return 0.0;  // 1 - a.a can round to a few ulps above zero
  return std::clamp(1.0 - a.dot(b), 0.0, 2.0);
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::size_t HashingEmbedder::bucket(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % kDim);
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "no tokens to embed");
  std::vector<double> tf(kDim, 0.0);
  for (const auto& t : tokens) tf[bucket(t)] += 1.0;
  return EmbeddingVector::normalize(std::move(tf));
}

HttpEmbedder::HttpEmbedder(std::string url, std::string model,
                           std::shared_ptr<HttpTransport> transport, std::string api_key,
                           int timeout_seconds)
    : url_(std::move(url)),
      model_(std::move(model)),
      transport_(std::move(transport)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) {
  if (text::trim(text).empty()) throw Error(ErrorCode::EmptyText, "no text to embed");
  if (!transport_ || url_.empty()) {
    throw Error(ErrorCode::BackendUnavailable, "embedding endpoint not configured");
  }
  HttpRequest req;
  req.method = "POST";
  req.url = url_;
  req.timeout_seconds = timeout_seconds_;
  req.headers["Content-Type"] = "application/json";
  if (!api_key_.empty()) req.headers["Authorization"] = "Bearer " + api_key_;
  req.body = nlohmann::json{{"model", model_}, {"input", std::string(text)}}.dump();
  HttpResponse resp;
  try {
    resp = transport_->send(req);
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendUnavailable, e.what());
  }
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::BackendUnavailable,
                "embedding endpoint returned HTTP " + std::to_string(resp.status));
  }
  try {
    auto doc = nlohmann::json::parse(resp.body);
    auto values = doc.at("data").at(0).at("embedding").get<std::vector<double>>();
    auto vec = EmbeddingVector::normalize(std::move(values));
    if (dim_ != 0 && vec.dim() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "embedding endpoint changed dimension");
    }
    dim_ = vec.dim();
    return vec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendUnavailable, std::string("bad embedding reply: ") + e.what());
  }
}

EmbeddingVector embed_description(std::string_view text, Embedder& backend) {
  if (text::trim(text).empty()) throw Error(ErrorCode::EmptyText, "description is empty");
  return backend.embed(text);
}

}  // namespace mitiforge::retrieval
