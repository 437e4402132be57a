#include "slam/http_transport.h"

#include <chrono>

#include <httplib.h>

#include "slam/error.h"

namespace slam {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, Duration timeout)
      : base_url_(base_url), client_(base_url) {
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client_.set_connection_timeout(std::chrono::seconds(10));
    client_.set_read_timeout(secs.count(), usecs.count());
    client_.set_write_timeout(secs.count(), usecs.count());
  }

  HttpResponse post(const std::string& path, const std::string& body,
                    const HttpHeaders& headers) override {
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client_.Post(path, hdrs, body, "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write) {
        throw Error(ErrorCode::kTimeout, base_url_ + path + ": " + httplib::to_string(err));
      }
      throw Error(ErrorCode::kProviderError,
                  base_url_ + path + ": " + httplib::to_string(err));
    }
    return HttpResponse{res->status, res->body};
  }

 private:
  std::string base_url_;
  httplib::Client client_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   Duration timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

}  // namespace slam
