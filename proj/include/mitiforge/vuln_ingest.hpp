#pragma once

// Vulnerability ingestion: NVD feed parsing, reference fetching with an
// on-disk cache, HTML flattening and keyword-anchored workaround extraction.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mitiforge/error.hpp"
#include "mitiforge/http.hpp"

namespace mitiforge::ingest {

enum class RefTag { Mitigation, Exploit, Patch, VendorAdvisory, Other };

std::string_view to_string(RefTag tag);
/// Maps an NVD reference tag string onto RefTag; unknown strings map to Other.
RefTag parse_ref_tag(std::string_view nvd_tag);

struct ReferenceLink {
  std::string url;
  std::set<RefTag> tags;

  bool has(RefTag tag) const { return tags.count(tag) != 0; }
  bool operator==(const ReferenceLink&) const = default;
};

struct CweEntry {
  std::string id;    // "CWE-502"
  std::string name;  // empty when the id is not in the built-in name table
  bool operator==(const CweEntry&) const = default;
};

struct VulnRecord {
  std::string cve_id;
  std::string description;
  std::vector<CweEntry> cwes;
  std::vector<ReferenceLink> references;
  std::string published;  // ISO-8601 as found in the feed

  bool operator==(const VulnRecord&) const = default;
};

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  bool operator==(const CharSpan&) const = default;
};

struct WorkaroundSection {
  std::string source_url;
  std::string matched_keyword;
  std::string text;
  CharSpan char_span;
  bool operator==(const WorkaroundSection&) const = default;
};

bool is_valid_cve_id(std::string_view id);
bool is_absolute_url(std::string_view url);
/// Name of a well-known CWE id, or empty.
std::string_view cwe_name(std::string_view cwe_id);

enum class FeedFormat { NvdJson20 };

FeedFormat parse_feed_format(std::string_view name);

struct FeedParseResult {
  std::vector<VulnRecord> records;
  std::size_t skipped_empty_description = 0;
  std::size_t skipped_invalid_id = 0;
  std::size_t skipped_duplicate = 0;
  std::size_t dropped_references = 0;  // syntactically invalid URLs

  std::size_t skipped() const {
    return skipped_empty_description + skipped_invalid_id + skipped_duplicate;
  }
};

/// Throws PositionedError(MalformedFeed) with the byte offset of a syntax or
/// schema error.
FeedParseResult parse_cve_feed(std::string_view feed_bytes,
                               FeedFormat format = FeedFormat::NvdJson20);

/// NVD JSON 2.0 rendering of the retained fields.
std::string serialize_cve_feed(const std::vector<VulnRecord>& records);

/// Reads a feed file, transparently inflating gzip content.
std::string load_feed_file(const std::filesystem::path& path);

std::string gunzip(std::string_view compressed);

// --- reference fetching ---------------------------------------------------

struct FetchConfig {
  std::filesystem::path cache_dir = ".mitiforge-cache";
  bool offline = false;
  int parallelism = 4;
  int timeout_seconds = 30;
};

struct FetchOutcome {
  std::string url;
  std::optional<std::string> body;
  std::optional<ErrorCode> error;
  std::string error_message;
};

/// Cache layout: <cache_dir>/<sha256(url)>.body and .meta (JSON with url,
/// fetched_at, status). Entries never expire.
class ReferenceFetcher {
 public:
  ReferenceFetcher(FetchConfig config, std::shared_ptr<HttpTransport> transport);

  std::string fetch(const ReferenceLink& link);
  /// Fetches with bounded parallelism; outcomes are in input order.
  std::vector<FetchOutcome> fetch_all(std::span<const ReferenceLink> links);

  std::size_t network_calls() const { return network_calls_.load(); }
  const FetchConfig& config() const { return config_; }

  static std::string cache_key(std::string_view url);

 private:
  std::optional<std::string> read_cache(std::string_view url) const;
  void write_cache(std::string_view url, std::string_view body, int status) const;

  FetchConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::atomic<std::size_t> network_calls_{0};
};

// --- page text --------------------------------------------------------------

/// Flattens HTML to plain text: tags stripped, script/style dropped, block
/// elements on their own lines, whitespace runs collapsed within a line.
std::string html_to_text(std::string_view page);

/// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

/// True when ASCII letters outnumber non-ASCII code points.
bool is_ascii_dominant(std::string_view text);

const std::vector<std::string>& keyword_roster();

/// Heading-delimited sections introduced by a roster keyword. A heading is a
/// line of trimmed length <= 80 containing a keyword as a whole phrase (an
/// optional plural "s" is accepted). The section body runs to the next
/// heading or end of text and excludes the heading line itself.
std::vector<WorkaroundSection> extract_workaround_sections(std::string_view page_text,
                                                           std::string_view source_url);

}  // namespace mitiforge::ingest
