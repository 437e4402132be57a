#include "slam/simulator.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "slam/error.h"
#include "slam/stats.h"

namespace slam {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 64> kVocabulary = {
    "today",    "focus",     "goals",     "tasks",      "planning",  "progress",
    "routine",  "energy",    "demo",      "prototype",  "review",    "rituals",
    "week",     "great",     "start",     "momentum",   "priority",  "appointment",
    "schedule", "habits",    "balance",   "complete",   "prepare",   "testing",
    "api",      "project",   "report",    "consultation", "workflow", "inbox",
    "lifting",  "health",    "back",      "care",       "learning",  "models",
    "local",    "feature",   "ready",     "productive", "steady",    "keep",
    "moving",   "aligned",   "important", "daily",      "meetings",  "yesterday",
    "finished", "plan",      "encourage", "strong",     "wins",      "small",
    "step",     "clear",     "mind",      "deep",       "work",      "tomorrow",
    "morning",  "briefing",  "achieve",   "confidence"};

std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

std::vector<std::string> canonical_answer(const std::string& prompt, int length) {
  std::uint64_t base = fnv1a(prompt);
  std::vector<std::string> out;
  for (int i = 0; i < length; ++i) {
    out.emplace_back(kVocabulary[mix64(base + static_cast<std::uint64_t>(i)) %
                                 kVocabulary.size()]);
  }
  return out;
}

// Share of `text` words that occur in the canonical answer to `prompt`.
double canonical_share(const std::string& prompt, const std::string& text, int length) {
  auto canon = canonical_answer(prompt, length);
  std::set<std::string> canon_set(canon.begin(), canon.end());
  auto words = words_of(text);
  if (words.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& w : words) hits += canon_set.count(w);
  return static_cast<double>(hits) / static_cast<double>(words.size());
}

std::string between(const std::string& s, const std::string& open, const std::string& close) {
  auto a = s.find(open);
  if (a == std::string::npos) return {};
  a += open.size();
  auto b = close.empty() ? std::string::npos : s.find(close, a);
  return s.substr(a, b == std::string::npos ? std::string::npos : b - a);
}

int clamp_score(double v) {
  return static_cast<int>(std::clamp(std::lround(v), 0L, 10L));
}

HttpResponse json_response(int status, const json& body) { return {status, body.dump()}; }

}  // namespace

void from_json(const json& j, SimulatorConfig& c) {
  c.seed = j.value("seed", c.seed);
  c.base_latency_ms = j.value("base_latency_ms", c.base_latency_ms);
  c.ms_per_output_token = j.value("ms_per_output_token", c.ms_per_output_token);
  c.ms_per_input_token = j.value("ms_per_input_token", c.ms_per_input_token);
  c.min_words = j.value("min_words", c.min_words);
  c.max_words = j.value("max_words", c.max_words);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  if (j.contains("missing_models")) {
    c.missing_models = j["missing_models"].get<std::set<std::string>>();
  }
  if (j.contains("failing_models")) {
    c.failing_models = j["failing_models"].get<std::set<std::string>>();
  }
  if (j.contains("fidelity")) c.fidelity = j["fidelity"].get<std::map<std::string, double>>();
  if (j.contains("slowdown")) c.slowdown = j["slowdown"].get<std::map<std::string, double>>();
  for (const auto& [m, f] : c.slowdown) {
    if (!(f > 0)) throw Error(ErrorCode::kInvalidConfig, "simulator slowdown for " + m + " must be > 0");
  }
  if (c.min_words <= 0 || c.max_words < c.min_words || c.embedding_dim <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "simulator word range or embedding_dim invalid");
  }
}

ProviderSimulator::ProviderSimulator(SimulatorConfig config, Clock& clock)
    : config_(std::move(config)), clock_(clock) {}

TransportFactory ProviderSimulator::transport_factory() {
  return [this](const std::string&, Duration) -> std::unique_ptr<HttpTransport> {
    return std::make_unique<FunctionTransport>(
        [this](const std::string& path, const std::string& body, const HttpHeaders&) {
          return handle(path, body);
        });
  };
}

std::uint64_t ProviderSimulator::calls(const std::string& model) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(model);
  return it == calls_.end() ? 0 : it->second;
}

HttpResponse ProviderSimulator::handle(const std::string& path, const std::string& body) {
  json req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) {
    return json_response(400, {{"error", "invalid JSON"}});
  }
  if (path == "/v1/chat/completions") return chat(req);
  if (path == "/api/generate") return generate(req);
  if (path == "/api/pull") return pull(req);
  if (path == "/embed") return embed(req);
  return json_response(404, {{"error", "no route " + path}});
}

double ProviderSimulator::speed_of(const std::string& model) const {
  auto it = config_.slowdown.find(model);
  return it == config_.slowdown.end() ? 1.0 : it->second;
}

double ProviderSimulator::fidelity_of(const std::string& model) const {
  if (auto it = config_.fidelity.find(model); it != config_.fidelity.end()) return it->second;
  return 0.35 + 0.6 * unit(mix64(config_.seed ^ fnv1a(model)));
}

ProviderSimulator::Completion ProviderSimulator::complete(const std::string& model,
                                                          const std::string& prompt,
                                                          std::optional<int> max_tokens) {
  std::uint64_t call = 0;
  {
    std::lock_guard lock(mu_);
    call = calls_[model]++;
  }
  const std::uint64_t h = mix64(config_.seed ^ fnv1a(model) ^ mix64(fnv1a(prompt) + call));
  std::string text;
  if (prompt.find("Rate the response on a scale of 0 to 10") != std::string::npos ||
      prompt.find("TARGET RESPONSE:") != std::string::npos ||
      prompt.find("What is the best response?") != std::string::npos) {
    text = answer_judge(prompt, h);
  } else {
    const int span = config_.max_words - config_.min_words + 1;
    int n = config_.min_words + static_cast<int>(mix64(h + 1) % static_cast<std::uint64_t>(span));
    if (max_tokens) n = std::min(n, *max_tokens);
    auto canon = canonical_answer(prompt, config_.max_words);
    const double fidelity = fidelity_of(model);
    std::ostringstream os;
    for (int i = 0; i < n; ++i) {
      std::uint64_t wh = mix64(h ^ (0x51ed27u + static_cast<std::uint64_t>(i)));
      std::string w = unit(wh) < fidelity
                          ? canon[static_cast<std::size_t>(i)]
                          : kVocabulary[mix64(wh) % kVocabulary.size()];
      if (i % 12 == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (i > 0) os << (i % 12 == 0 ? ". " : " ");
      os << w;
    }
    os << '.';
    text = os.str();
  }
  Completion c{text, static_cast<std::int64_t>(words_of(prompt).size()),
               static_cast<std::int64_t>(words_of(text).size())};
  if (c.output_tokens == 0) c.output_tokens = 1;
  double jitter = 0.9 + 0.2 * unit(mix64(h + 7));
  double ms = (config_.base_latency_ms + config_.ms_per_input_token * c.input_tokens +
               config_.ms_per_output_token * speed_of(model) * c.output_tokens) *
              jitter;
  clock_.sleep_for(Duration(static_cast<std::int64_t>(std::llround(ms * 1000.0))));
  return c;
}

std::string ProviderSimulator::answer_judge(const std::string& prompt, std::uint64_t h) const {
  const int noise = static_cast<int>(mix64(h + 3) % 3) - 1;
  if (prompt.find("What is the best response?") != std::string::npos) {
    std::string original = between(prompt, "PROMPT:\n\n", "\n\nRESPONSES:");
    std::string block = between(prompt, "RESPONSES:\n\n", "\n\nWhat is the best response?");
    std::vector<std::string> responses;
    std::istringstream in(block);
    std::string line;
    while (std::getline(in, line)) {
      std::size_t digits = 0;
      while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) {
        ++digits;
      }
      if (digits > 0 && line.compare(digits, 2, ". ") == 0) {
        responses.push_back(line.substr(digits + 2));
      } else if (!responses.empty()) {
        responses.back() += "\n" + line;
      }
    }
    std::size_t best = 0;
    double best_share = -1;
    for (std::size_t i = 0; i < responses.size(); ++i) {
      double share = canonical_share(original, responses[i], config_.max_words);
      if (share > best_share) {
        best_share = share;
        best = i;
      }
    }
    return "Reason: Response " + std::to_string(best + 1) +
           " references the most tasks and goals.\nChoice: " + std::to_string(best + 1);
  }
  if (prompt.find("TARGET RESPONSE:") != std::string::npos) {
    auto ref = words_of(between(prompt, "REFERENCE RESPONSE: ", "\n\nTARGET RESPONSE:"));
    auto tgt = words_of(between(prompt, "TARGET RESPONSE: ", "\n\nRate on a scale"));
    std::set<std::string> a(ref.begin(), ref.end()), b(tgt.begin(), tgt.end());
    std::size_t inter = 0;
    for (const auto& w : a) inter += b.count(w);
    std::size_t uni = a.size() + b.size() - inter;
    int score = clamp_score(10.0 * (uni == 0 ? 1.0 : static_cast<double>(inter) / uni) + noise);
    if (prompt.find("Output format") == std::string::npos) return std::to_string(score);
    return "Reason: The target covers " + std::to_string(inter) +
           " of the reference's key terms.\nScore: " + std::to_string(score);
  }
  std::string original = between(prompt, "PROMPT: ", "\n\nRESPONSE:");
  std::string response = between(prompt, "RESPONSE:", "\n\nRate the response");
  int score = clamp_score(10.0 * canonical_share(original, response, config_.max_words) + noise);
  return "The response mentions the relevant tasks and keeps an encouraging tone. Score: " +
         std::to_string(score);
}

HttpResponse ProviderSimulator::chat(const json& req) {
  std::string model = req.value("model", std::string());
  if (config_.failing_models.count(model)) {
    return json_response(500, {{"error", {{"message", "simulated outage"}}}});
  }
  std::string prompt;
  if (req.contains("messages") && req["messages"].is_array()) {
    for (const auto& m : req["messages"]) prompt += m.value("content", std::string());
  }
  std::optional<int> max_tokens;
  if (req.contains("max_tokens")) max_tokens = req["max_tokens"].get<int>();
  Completion c = complete(model, prompt, max_tokens);
  return json_response(
      200, {{"id", "chatcmpl-sim"},
            {"object", "chat.completion"},
            {"model", model},
            {"choices", json::array({{{"index", 0},
                                      {"message", {{"role", "assistant"}, {"content", c.text}}},
                                      {"finish_reason", "stop"}}})},
            {"usage",
             {{"prompt_tokens", c.input_tokens},
              {"completion_tokens", c.output_tokens},
              {"total_tokens", c.input_tokens + c.output_tokens}}}});
}

HttpResponse ProviderSimulator::generate(const json& req) {
  std::string model = req.value("model", std::string());
  if (config_.failing_models.count(model)) {
    return json_response(500, {{"error", "simulated runner failure"}});
  }
  if (config_.missing_models.count(model)) {
    return json_response(404, {{"error", "model '" + model + "' not found"}});
  }
  std::optional<int> max_tokens;
  if (req.contains("options") && req["options"].contains("num_predict")) {
    max_tokens = req["options"]["num_predict"].get<int>();
  }
  Completion c = complete(model, req.value("prompt", std::string()), max_tokens);
  return json_response(200, {{"model", model},
                             {"created_at", format_rfc3339(clock_.now())},
                             {"response", c.text},
                             {"done", true},
                             {"prompt_eval_count", c.input_tokens},
                             {"eval_count", c.output_tokens}});
}

HttpResponse ProviderSimulator::pull(const json& req) {
  std::string name = req.value("name", std::string());
  if (name.empty() || config_.missing_models.count(name)) {
    return json_response(404, {{"error", "pull model manifest: file does not exist"}});
  }
  return json_response(200, {{"status", "success"}});
}

HttpResponse ProviderSimulator::embed(const json& req) {
  if (!req.contains("texts") || !req["texts"].is_array()) {
    return json_response(400, {{"error", "texts required"}});
  }
  const auto dim = static_cast<std::size_t>(config_.embedding_dim);
  json vectors = json::array();
  for (const auto& t : req["texts"]) {
    std::vector<double> v(dim, 0.0);
    v[0] = 1e-3;
    for (const auto& w : words_of(t.get<std::string>())) {
      std::uint64_t wh = mix64(fnv1a(w) ^ config_.seed);
      double sign = (wh >> 63) ? -1.0 : 1.0;
      v[wh % dim] += sign;
      v[(wh >> 20) % dim] += 0.5 * sign;
    }
    vectors.push_back(v);
  }
  return json_response(200, {{"vectors", vectors}});
}

}  // namespace slam
