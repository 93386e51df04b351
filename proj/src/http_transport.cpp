#include "httplib.h"

#include <atomic>
#include <regex>

#include "mitiforge/error.hpp"
#include "mitiforge/http.hpp"

namespace mitiforge {

namespace {

std::atomic<std::size_t> g_requests{0};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path?query
};

SplitUrl split_url(const std::string& url) {
  static const std::regex re(R"(^([A-Za-z][A-Za-z0-9+.\-]*://[^/?#]+)([^#]*))");
  std::smatch m;
  if (!std::regex_search(url, m, re)) {
    throw Error(ErrorCode::NetworkError, "not an absolute URL: " + url);
  }
  SplitUrl out{m[1].str(), m[2].str()};
  if (out.path.empty()) out.path = "/";
  if (out.path.front() == '?') out.path.insert(out.path.begin(), '/');
  return out;
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpResponse send(const HttpRequest& request) override {
    auto parts = split_url(request.url);
    httplib::Client client(parts.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(request.timeout_seconds, 0);
    client.set_read_timeout(request.timeout_seconds, 0);
    client.set_write_timeout(request.timeout_seconds, 0);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    ++g_requests;
    httplib::Result res;
    if (request.method == "GET") {
      res = client.Get(parts.path, headers);
    } else if (request.method == "POST") {
      res = client.Post(parts.path, headers, request.body, content_type);
    } else {
      throw Error(ErrorCode::NetworkError, "unsupported HTTP method " + request.method);
    }
    if (!res) {
      throw Error(ErrorCode::NetworkError,
                  "request to " + request.url + " failed: " + httplib::to_string(res.error()));
    }
    return {res->status, res->body};
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() {
  return std::make_shared<HttplibTransport>();
}

std::size_t network_request_count() { return g_requests.load(); }

}  // namespace mitiforge
