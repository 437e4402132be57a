#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "slam/clock.h"

namespace slam {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// Minimal request/response seam between the gateway and a provider. Throws
// Error(kProviderError) when no HTTP response was obtained and
// Error(kTimeout) when the deadline elapsed.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const HttpHeaders& headers) = 0;
};

using TransportFactory = std::function<std::unique_ptr<HttpTransport>(
    const std::string& base_url, Duration timeout)>;

// Real network transport ("http://host:port" or "https://host").
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   Duration timeout);

// Adapts a callable, mostly for tests.
class FunctionTransport final : public HttpTransport {
 public:
  using Handler = std::function<HttpResponse(const std::string& path,
                                             const std::string& body,
                                             const HttpHeaders& headers)>;
  explicit FunctionTransport(Handler handler) : handler_(std::move(handler)) {}

  HttpResponse post(const std::string& path, const std::string& body,
                    const HttpHeaders& headers) override {
    return handler_(path, body, headers);
  }

 private:
  Handler handler_;
};

}  // namespace slam
