#include "slam/service.h"

#include <httplib.h>

#include <algorithm>
#include <random>
#include <thread>

#include "slam/error.h"
#include "slam/pipeline.h"

namespace slam {

using nlohmann::json;

void to_json(json& j, const SessionToken& t) {
  j = json{{"token", t.token},
           {"rater_id", t.rater_id},
           {"experiment_id", t.experiment_id},
           {"assignment_id", t.assignment_id},
           {"expires_at", format_rfc3339(t.expires_at)}};
}

void from_json(const json& j, SessionToken& t) {
  t.token = j.at("token").get<std::string>();
  t.rater_id = j.at("rater_id").get<std::string>();
  t.experiment_id = j.at("experiment_id").get<std::string>();
  t.assignment_id = j.at("assignment_id").get<std::string>();
  t.expires_at = parse_rfc3339(j.at("expires_at").get<std::string>());
}

SessionStore::SessionStore(Store& store, Clock& clock) : store_(store), clock_(clock) {}

std::vector<SessionToken> SessionStore::load() const {
  auto doc = store_.read_document(store_.root() / "sessions.json");
  if (!doc) return {};
  json j = json::parse(*doc, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kStorageFailure, "corrupt sessions.json");
  return j.get<std::vector<SessionToken>>();
}

SessionToken SessionStore::issue(const Assignment& assignment, Duration ttl) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::random_device rd;
  std::string token;
  for (int i = 0; i < 4; ++i) {
    std::uint32_t v = rd();
    for (int n = 0; n < 8; ++n, v >>= 4) token.push_back(kHex[v & 0xf]);
  }
  SessionToken t{token, assignment.rater_id, assignment.experiment_id,
                 assignment.assignment_id, clock_.now() + ttl};
  std::lock_guard lock(mu_);
  auto all = load();
  std::erase_if(all, [&](const SessionToken& s) { return s.expires_at <= clock_.now(); });
  all.push_back(t);
  store_.write_document(store_.root() / "sessions.json", json(all).dump(2) + "\n");
  return t;
}

std::optional<SessionToken> SessionStore::validate(const std::string& token) const {
  if (token.empty()) return std::nullopt;
  std::lock_guard lock(mu_);
  for (const auto& s : load()) {
    if (s.token == token) {
      if (s.expires_at <= clock_.now()) return std::nullopt;
      return s;
    }
  }
  return std::nullopt;
}

namespace {

ApiResponse error_response(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return {status, extra};
}

int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kValidationFailed:
    case ErrorCode::kKTooLarge:
      return 400;
    case ErrorCode::kNotFound:
    case ErrorCode::kUnknownAssignment:
    case ErrorCode::kUnknownItem:
    case ErrorCode::kUnknownModel:
    case ErrorCode::kNoRecords:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kScoreOutOfRange:
      return 422;
    default:
      return 500;
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path.substr(0, path.find('?'))) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

// Field names from an InvalidConfig message: "...: a, b" -> [a, b].
json fields_of(const std::string& message) {
  json fields = json::array();
  auto colon = message.rfind(": ");
  if (colon == std::string::npos) return fields;
  std::string rest = message.substr(colon + 2);
  std::size_t start = 0;
  while (start <= rest.size()) {
    auto comma = rest.find(", ", start);
    std::string f = rest.substr(start, comma == std::string::npos ? std::string::npos
                                                                  : comma - start);
    f = f.substr(0, f.find(" ("));  // "name (missing)" -> "name"
    if (!f.empty()) fields.push_back(f);
    if (comma == std::string::npos) break;
    start = comma + 2;
  }
  return fields;
}

}  // namespace

Service::Service(Store& store, Clock& clock, Gateway* gateway, ServiceOptions options)
    : store_(store),
      clock_(clock),
      gateway_(gateway),
      options_(options),
      human_(store, clock),
      sessions_(store, clock) {}

ApiResponse Service::handle(const ApiRequest& request) {
  const auto parts = split_path(request.path);
  const std::string& m = request.method;
  try {
    if (m == "GET" && parts == std::vector<std::string>{"healthz"}) {
      return {200, {{"status", "ok"}}};
    }
    if (!parts.empty() && parts[0] == "experiments") {
      if (parts.size() == 1 && m == "POST") return create_experiment(request);
      if (parts.size() == 1 && m == "GET") return {200, {{"experiments", store_.experiments()}}};
      if (parts.size() == 3 && m == "POST" && parts[2] == "run") return run_experiment(parts[1]);
      if (parts.size() == 3 && m == "POST" && parts[2] == "assignments") {
        return create_assignments(parts[1], request);
      }
      if (parts.size() == 3 && m == "GET" && parts[2] == "report") return report(parts[1]);
    }
    if (!parts.empty() && parts[0] == "rate") {
      if (parts.size() == 2 && m == "GET" && parts[1] == "next") return next_item(request);
      if (parts.size() == 2 && m == "GET" && parts[1] == "progress") return progress(request);
      if (parts.size() == 2 && m == "POST") return submit(parts[1], request);
    }
    return error_response(404, "no route for " + m + " " + request.path);
  } catch (const Error& e) {
    return error_response(status_for(e), e.what());
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
}

ApiResponse Service::create_experiment(const ApiRequest& r) {
  json body = json::parse(r.body, nullptr, false);
  if (body.is_discarded()) return error_response(400, "request body is not JSON");
  ExperimentPlan plan;
  try {
    plan = parse_experiment_plan(body);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInvalidConfig) throw;
    return error_response(400, e.what(), {{"fields", fields_of(e.what())}});
  }
  std::lock_guard lock(write_mu_);
  if (store_.has_experiment(plan.experiment_id)) {
    return error_response(409, "experiment '" + plan.experiment_id + "' already exists");
  }
  store_.create_experiment(plan);
  return {201, {{"experiment_id", plan.experiment_id}}};
}

ApiResponse Service::run_experiment(const std::string& id) {
  if (!store_.has_experiment(id)) return error_response(404, "unknown experiment '" + id + "'");
  if (!gateway_) return error_response(503, "no providers configured");
  std::lock_guard lock(write_mu_);
  auto summary = execute_experiment(store_, *gateway_, store_.load_plan(id));
  json failures = json::array();
  for (const auto& [model, why] : summary.pull_failures) {
    failures.push_back({{"model_id", model}, {"error", why}});
  }
  return {200,
          {{"experiment_id", id},
           {"records", summary.records},
           {"failed_records", summary.failed_records},
           {"pull_failures", failures}}};
}

ApiResponse Service::create_assignments(const std::string& id, const ApiRequest& r) {
  if (!store_.has_experiment(id)) return error_response(404, "unknown experiment '" + id + "'");
  json body = json::parse(r.body, nullptr, false);
  if (body.is_discarded() || !body.contains("raters") || !body["raters"].is_array()) {
    return error_response(400, "expected {\"raters\": [...]}", {{"fields", {"raters"}}});
  }
  auto raters = body["raters"].get<std::vector<std::string>>();
  std::uint64_t seed = body.value("seed", options_.assignment_seed);
  std::lock_guard lock(write_mu_);
  auto assignments = human_.build_assignments(id, raters, seed);
  json invites = json::array();
  for (const auto& a : assignments) {
    auto token = sessions_.issue(a, options_.session_ttl);
    invites.push_back({{"rater_id", a.rater_id},
                       {"assignment_id", a.assignment_id},
                       {"token", token.token},
                       {"expires_at", format_rfc3339(token.expires_at)},
                       {"items", a.items.size()}});
  }
  return {201, {{"experiment_id", id}, {"invites", invites}}};
}

ApiResponse Service::report(const std::string& id) {
  if (!store_.has_experiment(id)) return error_response(404, "unknown experiment '" + id + "'");
  if (auto snapshot = store_.read_report(id)) return {200, json::parse(*snapshot)};
  ReportOptions lenient;
  lenient.k = options_.report_k;
  lenient.strict_k = false;
  return {200, build_report(store_, id, lenient)};
}

std::optional<Service::RaterContext> Service::rater(const ApiRequest& r,
                                                    ApiResponse& error) const {
  std::string token;
  if (auto it = r.headers.find("authorization"); it != r.headers.end()) {
    const std::string prefix = "Bearer ";
    if (it->second.rfind(prefix, 0) == 0) token = it->second.substr(prefix.size());
  }
  auto session = sessions_.validate(token);
  if (!session) {
    error = error_response(401, "missing, unknown or expired token");
    return std::nullopt;
  }
  auto assignment = human_.find_assignment(session->assignment_id);
  if (!assignment) {
    error = error_response(404, "no assignment for this rater");
    return std::nullopt;
  }
  return RaterContext{*session, *assignment};
}

ApiResponse Service::next_item(const ApiRequest& r) {
  ApiResponse error;
  auto ctx = rater(r, error);
  if (!ctx) return error;
  const auto& a = ctx->assignment;
  std::set<std::string> rated;
  for (const auto& rating : store_.ratings(a.experiment_id)) {
    if (rating.rater_id == a.rater_id) rated.insert(rating.item_id);
  }
  for (const auto& item : a.items) {
    if (rated.count(item.item_id)) continue;
    auto records = store_.generations(a.experiment_id);
    auto rec = std::find_if(records.begin(), records.end(), [&](const GenerationRecord& g) {
      return g.record_id == item.record_id;
    });
    if (rec == records.end()) {
      throw Error(ErrorCode::kStorageFailure, "assigned record " + item.record_id + " missing");
    }
    // Exactly these four fields: nothing that identifies the model.
    return {200,
            {{"item_id", item.item_id},
             {"prompt_text", rec->prompt_text},
             {"response_text", rec->response_text},
             {"anon_label", item.anon_label}}};
  }
  return {200, {{"done", true}}};
}

ApiResponse Service::progress(const ApiRequest& r) {
  ApiResponse error;
  auto ctx = rater(r, error);
  if (!ctx) return error;
  const auto& a = ctx->assignment;
  std::set<std::string> rated;
  for (const auto& rating : store_.ratings(a.experiment_id)) {
    if (rating.rater_id == a.rater_id) rated.insert(rating.item_id);
  }
  std::size_t done = 0;
  for (const auto& item : a.items) done += rated.count(item.item_id);
  return {200, {{"done", done}, {"total", a.items.size()}}};
}

ApiResponse Service::submit(const std::string& item_id, const ApiRequest& r) {
  ApiResponse error;
  auto ctx = rater(r, error);
  if (!ctx) return error;
  json body = json::parse(r.body, nullptr, false);
  if (body.is_discarded() || !body.contains("score")) {
    return error_response(400, "expected {\"score\": n}", {{"fields", {"score"}}});
  }
  const json& score = body["score"];
  if (!score.is_number_integer()) {
    return error_response(422, "score must be an integer in [0, 10]");
  }
  // Clamping to [-1, 11] keeps out-of-range input out of range without
  // overflowing int.
  const int value = static_cast<int>(std::clamp<std::int64_t>(score.get<std::int64_t>(), -1, 11));
  std::lock_guard lock(write_mu_);
  auto rating = human_.submit_rating(ctx->assignment.assignment_id, item_id, value);
  return {200, {{"accepted", true}, {"item_id", rating.item_id}, {"score", rating.score}}};
}

std::pair<std::string, int> parse_listen_address(const std::string& listen) {
  auto colon = listen.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : listen.substr(0, colon);
  std::string port = colon == std::string::npos ? listen : listen.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  try {
    std::size_t used = 0;
    int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::invalid_argument(port);
    return {host, p};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad listen address '" + listen + "'");
  }
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Service& s) : service(s) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest r;
      r.method = req.method;
      r.path = req.path;
      r.body = req.body;
      for (const auto& [name, value] : req.headers) {
        std::string lower(name);
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        r.headers[lower] = value;
      }
      auto out = service.handle(r);
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
    server.Get(R"(/.*)", dispatch);
    server.Post(R"(/.*)", dispatch);
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kStorageFailure, "cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace slam
