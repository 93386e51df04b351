#include <gtest/gtest.h>
#include <zlib.h>

#include "mitiforge/text_util.hpp"
#include "mitiforge/vuln_ingest.hpp"
#include "test_support.hpp"

using namespace mitiforge;
using namespace mitiforge::ingest;

namespace {

const char* kLog4Shell = R"J({
  "format": "NVD_CVE", "version": "2.0", "totalResults": 1,
  "vulnerabilities": [{"cve": {
    "id": "CVE-2021-44228",
    "published": "2021-12-10T10:15:09.143",
    "descriptions": [
      {"lang": "es", "value": "Apache Log4j2 ... (es)"},
      {"lang": "en", "value": "Apache Log4j2 JNDI features do not protect against attacker controlled LDAP."}
    ],
    "weaknesses": [{"source": "nvd@nist.gov", "type": "Primary",
      "description": [{"lang": "en", "value": "CWE-502"}, {"lang": "en", "value": "CWE-400"},
                      {"lang": "en", "value": "NVD-CWE-Other"}]}],
    "references": [
      {"url": "https://logging.apache.org/log4j/2.x/security.html", "tags": ["Mitigation", "Vendor Advisory"]},
      {"url": "not a url", "tags": ["Patch"]},
      {"url": "http://example.com/exploit", "tags": ["Exploit", "Third Party Advisory"]}
    ]}}]
})J";

std::string gzip(const std::string& data) {
  z_stream zs{};
  deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY);
  std::string out(deflateBound(&zs, data.size()) + 32, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

std::string feed_of(const std::string& items) {
  return R"({"format":"NVD_CVE","version":"2.0","vulnerabilities":[)" + items + "]}";
}

}  // namespace

TEST(Feed, ParsesMinimalRecord) {
  auto r = parse_cve_feed(kLog4Shell);
  ASSERT_EQ(r.records.size(), 1u);
  const auto& rec = r.records[0];
  EXPECT_EQ(rec.cve_id, "CVE-2021-44228");
  EXPECT_EQ(rec.description,
            "Apache Log4j2 JNDI features do not protect against attacker controlled LDAP.");
  ASSERT_EQ(rec.cwes.size(), 2u);
  EXPECT_EQ(rec.cwes[0].id, "CWE-502");
  EXPECT_EQ(rec.cwes[0].name, "Deserialization of Untrusted Data");
  ASSERT_EQ(rec.references.size(), 2u);
  EXPECT_TRUE(rec.references[0].has(RefTag::Mitigation));
  EXPECT_TRUE(rec.references[0].has(RefTag::VendorAdvisory));
  EXPECT_TRUE(rec.references[1].has(RefTag::Exploit));
  EXPECT_TRUE(rec.references[1].has(RefTag::Other));
  EXPECT_EQ(r.dropped_references, 1u);
  EXPECT_EQ(rec.published, "2021-12-10T10:15:09.143");
}

TEST(Feed, EmptyArrayGivesNoRecords) {
  auto r = parse_cve_feed(feed_of(""));
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.skipped(), 0u);
}

TEST(Feed, MissingDescriptionIsSkippedAndCounted) {
  auto r = parse_cve_feed(feed_of(
      R"({"cve":{"id":"CVE-2022-0001","descriptions":[]}},)"
      R"({"cve":{"id":"CVE-2022-0002","descriptions":[{"lang":"en","value":"x"}]}})"));
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].cve_id, "CVE-2022-0002");
  EXPECT_EQ(r.skipped_empty_description, 1u);
}

TEST(Feed, InvalidIdAndDuplicatesAreSkipped) {
  auto r = parse_cve_feed(feed_of(
      R"({"cve":{"id":"CVE-22-1","descriptions":[{"lang":"en","value":"x"}]}},)"
      R"({"cve":{"id":"CVE-2022-1111","descriptions":[{"lang":"en","value":"first"}]}},)"
      R"({"cve":{"id":"CVE-2022-1111","descriptions":[{"lang":"en","value":"second"}]}})"));
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].description, "first");
  EXPECT_EQ(r.skipped_invalid_id, 1u);
  EXPECT_EQ(r.skipped_duplicate, 1u);
  EXPECT_EQ(r.skipped(), 2u);
}

TEST(Feed, SyntaxErrorCarriesByteOffset) {
  const std::string bad = R"({"vulnerabilities": [ {"cve": } ]})";
  try {
    parse_cve_feed(bad);
    FAIL();
  } catch (const PositionedError& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedFeed);
    EXPECT_EQ(e.byte_offset(), bad.find('}') + 1);
  }
}

TEST(Feed, SchemaViolationsAreMalformed) {
  for (const std::string doc : {"[]", R"({"x":1})", R"({"vulnerabilities":{}})",
                                R"({"vulnerabilities":[{"nocve":1}]})"}) {
    try {
      parse_cve_feed(doc);
      FAIL() << doc;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedFeed) << doc;
    }
  }
}

TEST(Feed, LegacyFormatIsUnsupported) {
  try {
    parse_cve_feed(R"({"CVE_data_format":"MITRE","CVE_Items":[]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedFormat);
  }
  EXPECT_THROW(parse_feed_format("nvd-1.1"), Error);
  EXPECT_EQ(parse_feed_format("NVD"), FeedFormat::NvdJson20);
}

TEST(Feed, SerializeRoundTrips) {
  auto first = parse_cve_feed(kLog4Shell).records;
  auto again = parse_cve_feed(serialize_cve_feed(first)).records;
  EXPECT_EQ(first, again);
}

TEST(Feed, GzipFilesAreInflated) {
  testing_support::ScratchDir dir;
  auto plain = dir / "feed.json";
  auto packed = dir / "feed.json.gz";
  text::write_file_atomic(plain.string(), kLog4Shell);
  text::write_file_atomic(packed.string(), gzip(kLog4Shell));
  EXPECT_EQ(load_feed_file(plain), kLog4Shell);
  EXPECT_EQ(load_feed_file(packed), kLog4Shell);
  auto truncated = gzip(kLog4Shell);
  truncated.resize(truncated.size() / 2);
  EXPECT_THROW(gunzip(truncated), PositionedError);
}

TEST(Feed, IdAndUrlValidators) {
  EXPECT_TRUE(is_valid_cve_id("CVE-2021-44228"));
  EXPECT_TRUE(is_valid_cve_id("CVE-1999-0001"));
  EXPECT_FALSE(is_valid_cve_id("CVE-2021-123"));
  EXPECT_FALSE(is_valid_cve_id("cve-2021-44228"));
  EXPECT_TRUE(is_absolute_url("https://a.b/c?d=1"));
  EXPECT_TRUE(is_absolute_url("http://localhost:8080"));
  EXPECT_FALSE(is_absolute_url("/relative/path"));
  EXPECT_FALSE(is_absolute_url("https://"));
}
