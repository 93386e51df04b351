#include <zlib.h>

#include <map>
#include <regex>
#include <unordered_set>

#include "json.hpp"
#include "mitiforge/text_util.hpp"
#include "mitiforge/vuln_ingest.hpp"

namespace mitiforge::ingest {

using nlohmann::json;

namespace {

const std::map<std::string, std::string, std::less<>>& cwe_names() {
  static const std::map<std::string, std::string, std::less<>> names = {
      {"CWE-20", "Improper Input Validation"},
      {"CWE-22", "Improper Limitation of a Pathname to a Restricted Directory ('Path Traversal')"},
      {"CWE-78", "Improper Neutralization of Special Elements used in an OS Command ('OS Command Injection')"},
      {"CWE-79", "Improper Neutralization of Input During Web Page Generation ('Cross-site Scripting')"},
      {"CWE-89", "Improper Neutralization of Special Elements used in an SQL Command ('SQL Injection')"},
      {"CWE-91", "XML Injection (aka Blind XPath Injection)"},
      {"CWE-94", "Improper Control of Generation of Code ('Code Injection')"},
      {"CWE-121", "Stack-based Buffer Overflow"},
      {"CWE-200", "Exposure of Sensitive Information to an Unauthorized Actor"},
      {"CWE-248", "Uncaught Exception"},
      {"CWE-276", "Incorrect Default Permissions"},
      {"CWE-400", "Uncontrolled Resource Consumption"},
      {"CWE-502", "Deserialization of Untrusted Data"},
      {"CWE-611", "Improper Restriction of XML External Entity Reference"},
      {"CWE-674", "Uncontrolled Recursion"},
      {"CWE-732", "Incorrect Permission Assignment for Critical Resource"},
      {"CWE-770", "Allocation of Resources Without Limits or Throttling"},
      {"CWE-787", "Out-of-bounds Write"},
      {"CWE-834", "Excessive Iteration"},
      {"CWE-835", "Loop with Unreachable Exit Condition ('Infinite Loop')"},
      {"CWE-917", "Improper Neutralization of Special Elements used in an Expression Language Statement ('Expression Language Injection')"},
      {"CWE-918", "Server-Side Request Forgery (SSRF)"},
  };
  return names;
}

[[noreturn]] void malformed(const std::string& what, std::size_t offset = 0) {
  throw PositionedError(ErrorCode::MalformedFeed, "malformed feed: " + what, 0, 0, offset);
}

std::string pick_description(const json& cve) {
  auto it = cve.find("descriptions");
  if (it == cve.end() || !it->is_array()) return {};
  std::string fallback;
  for (const auto& d : *it) {
    if (!d.is_object() || !d.contains("value") || !d["value"].is_string()) continue;
    const auto value = d["value"].get<std::string>();
    if (d.value("lang", "") == "en") return value;
    if (fallback.empty()) fallback = value;
  }
  return fallback;
}

std::vector<CweEntry> pick_cwes(const json& cve) {
  std::vector<CweEntry> out;
  std::unordered_set<std::string> seen;
  auto it = cve.find("weaknesses");
  if (it == cve.end() || !it->is_array()) return out;
  for (const auto& w : *it) {
    if (!w.is_object() || !w.contains("description") || !w["description"].is_array()) continue;
    for (const auto& d : w["description"]) {
      if (!d.is_object() || !d.contains("value") || !d["value"].is_string()) continue;
      auto id = d["value"].get<std::string>();
      if (id.rfind("CWE-", 0) != 0 || !seen.insert(id).second) continue;
      out.push_back({id, std::string(cwe_name(id))});
    }
  }
  return out;
}

std::vector<ReferenceLink> pick_references(const json& cve, std::size_t& dropped) {
  std::vector<ReferenceLink> out;
  auto it = cve.find("references");
  if (it == cve.end() || !it->is_array()) return out;
  for (const auto& r : *it) {
    if (!r.is_object() || !r.contains("url") || !r["url"].is_string()) {
      ++dropped;
      continue;
    }
    ReferenceLink link{r["url"].get<std::string>(), {}};
    if (!is_absolute_url(link.url)) {
      ++dropped;
      continue;
    }
    if (r.contains("tags") && r["tags"].is_array()) {
      for (const auto& t : r["tags"]) {
        if (t.is_string()) link.tags.insert(parse_ref_tag(t.get<std::string>()));
      }
    }
    out.push_back(std::move(link));
  }
  return out;
}

}  // namespace

std::string_view to_string(RefTag tag) {
  switch (tag) {
    case RefTag::Mitigation: return "Mitigation";
    case RefTag::Exploit: return "Exploit";
    case RefTag::Patch: return "Patch";
    case RefTag::VendorAdvisory: return "Vendor Advisory";
    case RefTag::Other: return "Other";
  }
  return "Other";
}

RefTag parse_ref_tag(std::string_view nvd_tag) {
  auto t = text::to_lower(text::trim(nvd_tag));
  if (t == "mitigation") return RefTag::Mitigation;
  if (t == "exploit") return RefTag::Exploit;
  if (t == "patch") return RefTag::Patch;
  if (t == "vendor advisory" || t == "vendoradvisory") return RefTag::VendorAdvisory;
  return RefTag::Other;
}

bool is_valid_cve_id(std::string_view id) {
  static const std::regex pattern(R"(CVE-\d{4}-\d{4,})");
  return std::regex_match(id.begin(), id.end(), pattern);
}

bool is_absolute_url(std::string_view url) {
  static const std::regex pattern(R"([A-Za-z][A-Za-z0-9+.\-]*://[^\s/?#@]+(:\d+)?([/?#]\S*)?)");
  return std::regex_match(url.begin(), url.end(), pattern);
}

std::string_view cwe_name(std::string_view cwe_id) {
  const auto& names = cwe_names();
  auto it = names.find(cwe_id);
  return it == names.end() ? std::string_view{} : std::string_view(it->second);
}

FeedFormat parse_feed_format(std::string_view name) {
  auto n = text::to_lower(name);
  if (n == "nvdjson20" || n == "nvd-json-2.0" || n == "nvd") return FeedFormat::NvdJson20;
  throw Error(ErrorCode::UnsupportedFormat, "unsupported feed format: " + std::string(name));
}

FeedParseResult parse_cve_feed(std::string_view feed_bytes, FeedFormat format) {
  if (format != FeedFormat::NvdJson20) {
    throw Error(ErrorCode::UnsupportedFormat, "only NVD JSON 2.0 is supported");
  }
  json doc;
  try {
    doc = json::parse(feed_bytes.begin(), feed_bytes.end());
  } catch (const json::parse_error& e) {
    malformed(e.what(), e.byte);
  }
  if (!doc.is_object()) malformed("top-level value is not an object");
  if (!doc.contains("vulnerabilities")) {
    if (doc.contains("CVE_Items")) {
      throw Error(ErrorCode::UnsupportedFormat, "NVD JSON 1.1 feeds are not supported");
    }
    malformed("missing 'vulnerabilities' array");
  }
  const auto& items = doc["vulnerabilities"];
  if (!items.is_array()) malformed("'vulnerabilities' is not an array");

  FeedParseResult result;
  std::unordered_set<std::string> seen_ids;
  for (const auto& item : items) {
    if (!item.is_object() || !item.contains("cve") || !item["cve"].is_object()) {
      malformed("vulnerability item without a 'cve' object");
    }
    const auto& cve = item["cve"];
    std::string id = cve.contains("id") && cve["id"].is_string() ? cve["id"].get<std::string>() : "";
    if (!is_valid_cve_id(id)) {
      ++result.skipped_invalid_id;
      continue;
    }
    std::string description(text::trim(pick_description(cve)));
    if (description.empty()) {
      ++result.skipped_empty_description;
      continue;
    }
    if (!seen_ids.insert(id).second) {
      ++result.skipped_duplicate;
      continue;
    }
    VulnRecord rec;
    rec.cve_id = std::move(id);
    rec.description = std::move(description);
    rec.cwes = pick_cwes(cve);
    rec.references = pick_references(cve, result.dropped_references);
    rec.published = cve.value("published", "");
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::string serialize_cve_feed(const std::vector<VulnRecord>& records) {
  json items = json::array();
  for (const auto& rec : records) {
    json cve;
    cve["id"] = rec.cve_id;
    cve["published"] = rec.published;
    cve["descriptions"] = json::array({{{"lang", "en"}, {"value", rec.description}}});
    json weaknesses = json::array();
    if (!rec.cwes.empty()) {
      json desc = json::array();
      for (const auto& c : rec.cwes) desc.push_back({{"lang", "en"}, {"value", c.id}});
      weaknesses.push_back({{"source", "nvd@nist.gov"}, {"type", "Primary"}, {"description", desc}});
    }
    cve["weaknesses"] = weaknesses;
    json refs = json::array();
    for (const auto& r : rec.references) {
      json tags = json::array();
      for (auto t : r.tags) tags.push_back(std::string(to_string(t)));
      refs.push_back({{"url", r.url}, {"tags", tags}});
    }
    cve["references"] = refs;
    items.push_back({{"cve", cve}});
  }
  json doc = {{"format", "NVD_CVE"},
              {"version", "2.0"},
              {"totalResults", records.size()},
              {"vulnerabilities", items}};
  return doc.dump(2);
}

std::string gunzip(std::string_view compressed) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw Error(ErrorCode::Io, "inflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  std::string out;
  char buffer[1 << 15];
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw PositionedError(ErrorCode::MalformedFeed, "corrupt gzip stream", 0, 0, zs.total_in);
    }
    out.append(buffer, sizeof(buffer) - zs.avail_out);
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) {
    throw PositionedError(ErrorCode::MalformedFeed, "truncated gzip stream", 0, 0, zs.total_in);
  }
  return out;
}

std::string load_feed_file(const std::filesystem::path& path) {
  auto raw = text::read_file(path.string());
  if (raw.size() >= 2 && static_cast<unsigned char>(raw[0]) == 0x1f &&
      static_cast<unsigned char>(raw[1]) == 0x8b) {
    return gunzip(raw);
  }
  return raw;
}

}  // namespace mitiforge::ingest
