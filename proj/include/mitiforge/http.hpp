#pragma once

#include <map>
#include <memory>
#include <string>

namespace mitiforge {

struct HttpRequest {
  std::string method = "GET";
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  int timeout_seconds = 30;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Blocking HTTP(S) transport. Throws Error(NetworkError) when no response
/// could be obtained; non-2xx statuses are returned, not thrown.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpTransport> make_default_transport();

/// Total requests issued by default transports in this process.
std::size_t network_request_count();

}  // namespace mitiforge
