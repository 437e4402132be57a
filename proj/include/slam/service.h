#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slam/clock.h"
#include "slam/gateway.h"
#include "slam/human_eval.h"
#include "slam/store.h"

namespace slam {

// Pre-shared invite token binding a rater to one assignment.
struct SessionToken {
  std::string token;
  std::string rater_id;
  std::string experiment_id;
  std::string assignment_id;
  UtcTime expires_at{};

  bool operator==(const SessionToken&) const = default;
};

void to_json(nlohmann::json& j, const SessionToken& t);
void from_json(const nlohmann::json& j, SessionToken& t);

// Tokens persisted in <data_dir>/sessions.json.
class SessionStore {
 public:
  SessionStore(Store& store, Clock& clock);

  SessionToken issue(const Assignment& assignment, Duration ttl);
  // Absent for unknown or expired tokens.
  std::optional<SessionToken> validate(const std::string& token) const;

 private:
  std::vector<SessionToken> load() const;

  Store& store_;
  Clock& clock_;
  mutable std::mutex mu_;
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  Duration session_ttl = std::chrono::hours(24 * 7);
  std::size_t report_k = 10;
  std::uint64_t assignment_seed = 0;
};

// REST surface over the store. Routing lives in handle() so it can be
// exercised without sockets; serve() puts it behind an HTTP listener.
//   POST /experiments                     create (201 / 400 / 409)
//   GET  /experiments                     list ids
//   POST /experiments/{id}/run            execute with the configured gateway
//   POST /experiments/{id}/assignments    {"raters": [...]} -> invite tokens
//   GET  /experiments/{id}/report         snapshot, else computed
//   GET  /rate/next                       next unrated item (bearer token)
//   GET  /rate/progress                   {"done", "total"} (bearer token)
//   POST /rate/{item_id}                  {"score": n}
//   GET  /healthz
class Service {
 public:
  // `gateway` may be null; /run then answers 503.
  Service(Store& store, Clock& clock, Gateway* gateway, ServiceOptions options = {});

  ApiResponse handle(const ApiRequest& request);

  SessionStore& sessions() { return sessions_; }

 private:
  ApiResponse create_experiment(const ApiRequest& r);
  ApiResponse run_experiment(const std::string& id);
  ApiResponse create_assignments(const std::string& id, const ApiRequest& r);
  ApiResponse report(const std::string& id);
  ApiResponse next_item(const ApiRequest& r);
  ApiResponse progress(const ApiRequest& r);
  ApiResponse submit(const std::string& item_id, const ApiRequest& r);

  // Session and assignment behind a bearer token, or the error response.
  struct RaterContext {
    SessionToken session;
    Assignment assignment;
  };
  std::optional<RaterContext> rater(const ApiRequest& r, ApiResponse& error) const;

  Store& store_;
  Clock& clock_;
  Gateway* gateway_;
  ServiceOptions options_;
  HumanEval human_;
  SessionStore sessions_;
  // Serializes writers (create, run, assignments, ratings).
  std::mutex write_mu_;
};

// Parses "host:port"; a bare port binds 127.0.0.1.
std::pair<std::string, int> parse_listen_address(const std::string& listen);

class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host, int port);
  // Blocks until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace slam
