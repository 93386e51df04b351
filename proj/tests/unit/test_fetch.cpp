#include <gtest/gtest.h>

#include "httplib.h"

#include <thread>

#include "mitiforge/text_util.hpp"
#include "mitiforge/vuln_ingest.hpp"
#include "test_support.hpp"

using namespace mitiforge;
using namespace mitiforge::ingest;

namespace {

class CannedTransport : public HttpTransport {
 public:
  HttpResponse send(const HttpRequest& req) override {
    ++calls;
    if (req.url.find("missing") != std::string::npos) return {404, "nope"};
    return {200, "body of " + req.url};
  }
  std::atomic<int> calls{0};
};

ReferenceLink link(const std::string& url) { return {url, {RefTag::Mitigation}}; }

}  // namespace

TEST(Fetch, SecondFetchIsServedFromCache) {
  testing_support::ScratchDir dir;
  auto transport = std::make_shared<CannedTransport>();
  ReferenceFetcher f({dir.path(), false, 1, 5}, transport);
  EXPECT_EQ(f.fetch(link("https://a.org/x")), "body of https://a.org/x");
  EXPECT_EQ(f.network_calls(), 1u);

  ReferenceFetcher again({dir.path(), false, 1, 5}, transport);
  EXPECT_EQ(again.fetch(link("https://a.org/x")), "body of https://a.org/x");
  EXPECT_EQ(again.network_calls(), 0u);
  EXPECT_EQ(transport->calls.load(), 1);

  auto key = ReferenceFetcher::cache_key("https://a.org/x");
  EXPECT_EQ(key, text::sha256_hex("https://a.org/x"));
  auto meta = text::read_file((dir / (key + ".meta")).string());
  EXPECT_NE(meta.find("\"status\":200"), std::string::npos);
}

TEST(Fetch, OfflineMissIsCacheMiss) {
  testing_support::ScratchDir dir;
  auto transport = std::make_shared<CannedTransport>();
  ReferenceFetcher f({dir.path(), true, 1, 5}, transport);
  try {
    f.fetch(link("https://a.org/y"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CacheMiss);
  }
  EXPECT_EQ(transport->calls.load(), 0);
}

TEST(Fetch, NonSuccessStatusIsNotCached) {
  testing_support::ScratchDir dir;
  auto transport = std::make_shared<CannedTransport>();
  ReferenceFetcher f({dir.path(), false, 1, 5}, transport);
  for (int i = 0; i < 2; ++i) {
    try {
      f.fetch(link("https://a.org/missing"));
      FAIL();
    } catch (const HttpStatusError& e) {
      EXPECT_EQ(e.status(), 404);
    }
  }
  EXPECT_EQ(transport->calls.load(), 2);
}

TEST(Fetch, FetchAllKeepsInputOrderUnderParallelism) {
  testing_support::ScratchDir dir;
  auto transport = std::make_shared<CannedTransport>();
  ReferenceFetcher f({dir.path(), false, 4, 5}, transport);
  std::vector<ReferenceLink> links;
  for (int i = 0; i < 20; ++i) {
    links.push_back(link("https://h.org/" + std::string(i % 7 == 3 ? "missing" : "ok") +
                         std::to_string(i)));
  }
  auto out = f.fetch_all(links);
  ASSERT_EQ(out.size(), links.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    EXPECT_EQ(out[i].url, links[i].url);
    if (links[i].url.find("missing") != std::string::npos) {
      EXPECT_EQ(out[i].error, ErrorCode::HttpStatus);
      EXPECT_FALSE(out[i].body);
    } else {
      EXPECT_EQ(out[i].body, "body of " + links[i].url);
    }
  }
}

TEST(Fetch, RejectsZeroParallelism) {
  EXPECT_THROW(ReferenceFetcher({"c", false, 0, 5}, nullptr), Error);
}

TEST(Fetch, RealTransportAgainstLocalServer) {
  httplib::Server server;
  server.Get("/page", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("<p>Workaround</p>", "text/html");
  });
  server.Get("/gone", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  testing_support::ScratchDir dir;
  ReferenceFetcher f({dir.path(), false, 1, 5}, make_default_transport());
  const auto base = "http://127.0.0.1:" + std::to_string(port);
  const auto before = network_request_count();
  EXPECT_EQ(f.fetch(link(base + "/page")), "<p>Workaround</p>");
  try {
    f.fetch(link(base + "/gone"));
    FAIL();
  } catch (const HttpStatusError& e) {
    EXPECT_EQ(e.status(), 404);
  }
  EXPECT_EQ(network_request_count() - before, 2u);
  server.stop();
  t.join();
}
