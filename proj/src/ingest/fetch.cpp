#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mitiforge/text_util.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::ingest {

namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ReferenceFetcher::ReferenceFetcher(FetchConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (config_.parallelism < 1) {
    throw Error(ErrorCode::InvalidConfig, "fetch_parallelism must be >= 1");
  }
}

std::string ReferenceFetcher::cache_key(std::string_view url) { return text::sha256_hex(url); }

std::optional<std::string> ReferenceFetcher::read_cache(std::string_view url) const {
  auto body_path = config_.cache_dir / (cache_key(url) + ".body");
  std::error_code ec;
  if (!fs::is_regular_file(body_path, ec)) return std::nullopt;
  return text::read_file(body_path.string());
}

void ReferenceFetcher::write_cache(std::string_view url, std::string_view body, int status) const {
  auto key = cache_key(url);
  nlohmann::json meta = {{"url", url}, {"fetched_at", utc_timestamp()}, {"status", status}};
  // meta first: a reader keys on the body file, so it must land last
  text::write_file_atomic((config_.cache_dir / (key + ".meta")).string(), meta.dump());
  text::write_file_atomic((config_.cache_dir / (key + ".body")).string(), body);
}

std::string ReferenceFetcher::fetch(const ReferenceLink& link) {
  if (auto cached = read_cache(link.url)) return *cached;
  if (config_.offline) {
    throw Error(ErrorCode::CacheMiss, "offline mode: no cache entry for " + link.url);
  }
  if (!transport_) throw Error(ErrorCode::NetworkError, "no HTTP transport configured");
  HttpRequest req;
  req.url = link.url;
  req.timeout_seconds = config_.timeout_seconds;
  req.headers["User-Agent"] = "mitiforge/1.0";
  ++network_calls_;
  auto resp = transport_->send(req);
  if (resp.status < 200 || resp.status >= 300) throw HttpStatusError(resp.status, link.url);
  write_cache(link.url, resp.body, resp.status);
  return resp.body;
}

std::vector<FetchOutcome> ReferenceFetcher::fetch_all(std::span<const ReferenceLink> links) {
  std::vector<FetchOutcome> outcomes(links.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      auto i = next.fetch_add(1);
      if (i >= links.size()) return;
      auto& out = outcomes[i];
      out.url = links[i].url;
      try {
        out.body = fetch(links[i]);
      } catch (const Error& e) {
        out.error = e.code();
        out.error_message = e.what();
      } catch (const std::exception& e) {
        out.error = ErrorCode::NetworkError;
        out.error_message = e.what();
      }
    }
  };
  auto n = std::min<std::size_t>(static_cast<std::size_t>(config_.parallelism), links.size());
  if (n <= 1) {
    worker();
    return outcomes;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  pool.clear();
  return outcomes;
}

}  // namespace mitiforge::ingest
