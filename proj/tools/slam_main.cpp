// slam: operator CLI over a data directory.
#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "slam/error.h"
#include "slam/human_eval.h"
#include "slam/judge.h"
#include "slam/pipeline.h"
#include "slam/service.h"

namespace {

using nlohmann::json;
using namespace slam;

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Globals {
  std::string data_dir = "data";
  std::string providers_file;
  std::optional<std::uint64_t> seed;
  std::string output = "text";

  bool json_output() const { return output == "json"; }
};

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kMissingPlaceholder:
    case ErrorCode::kKTooLarge:
    case ErrorCode::kConflict:
    case ErrorCode::kNotFound:
    case ErrorCode::kUnknownModel:
    case ErrorCode::kUnknownProvider:
      return kUsageError;
    default:
      return kRuntimeFailure;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kInvalidConfig, path + " is not valid JSON");
  return j;
}

// Owns whatever a command needs; the gateway exists only with --providers.
struct Context {
  Globals globals;
  std::optional<Environment> env;
  std::unique_ptr<SystemClock> system_clock;
  std::unique_ptr<Store> store;

  explicit Context(const Globals& g, bool need_providers) : globals(g) {
    if (!g.providers_file.empty()) {
      env = make_environment(parse_providers_config(read_json_file(g.providers_file)), g.seed);
    } else if (need_providers) {
      throw Error(ErrorCode::kInvalidArgument, "--providers is required for this command");
    }
    Clock* clock = env ? env->clock.get() : nullptr;
    if (!clock) {
      system_clock = std::make_unique<SystemClock>();
      clock = system_clock.get();
    }
    store = std::make_unique<Store>(g.data_dir, *clock);
  }

  Gateway& gateway() { return *env->gateway; }
  Clock& clock() { return env ? *env->clock : *system_clock; }

  void require_experiment(const std::string& id) const {
    if (!store->has_experiment(id)) {
      throw Error(ErrorCode::kNotFound, "unknown experiment '" + id + "'");
    }
  }
};

void emit(const Globals& g, const json& j, const std::string& text) {
  if (g.json_output()) {
    std::cout << j.dump(2) << "\n";
  } else if (!text.empty()) {
    std::cout << text;
  }
}

int cmd_pull(const Globals& g, const std::vector<std::string>& models) {
  Context ctx(g, true);
  json results = json::array();
  std::ostringstream text;
  bool all_ready = true;
  for (const auto& id : models) {
    json row{{"model_id", id}};
    try {
      if (!ctx.gateway().registry().contains(id)) {
        throw Error(ErrorCode::kUnknownModel, "'" + id + "' is not in the providers file");
      }
      auto status = ctx.gateway().pull_model(id);
      row["status"] = to_string(status);
      if (status != AcquisitionStatus::kReady) {
        all_ready = false;
        text << "error " << id << ": pull " << to_string(status) << "\n";
      } else {
        text << "ok " << id << " ready\n";
      }
    } catch (const Error& e) {
      all_ready = false;
      row["status"] = "failed";
      row["error"] = e.what();
      text << "error " << id << ": " << e.what() << "\n";
    }
    results.push_back(row);
  }
  emit(g, {{"results", results}}, text.str());
  return all_ready ? kOk : kRuntimeFailure;
}

int cmd_run(const Globals& g, const std::string& config_path) {
  ExperimentPlan plan = parse_experiment_plan(read_json_file(config_path));
  Context ctx(g, true);
  ctx.store->create_experiment(plan);
  auto summary = execute_experiment(*ctx.store, ctx.gateway(), plan);
  json failures = json::array();
  std::ostringstream text;
  for (const auto& [model, why] : summary.pull_failures) {
    failures.push_back({{"model_id", model}, {"error", why}});
    text << "warning: " << model << " not pulled: " << why << "\n";
  }
  text << "experiment " << plan.experiment_id << ": " << summary.records << " records ("
       << summary.failed_records << " failed)\nreport " << summary.report_path.string() << "\n";
  emit(g,
       {{"experiment_id", plan.experiment_id},
        {"records", summary.records},
        {"failed_records", summary.failed_records},
        {"pull_failures", failures},
        {"report_path", summary.report_path.string()}},
       text.str());
  return kOk;
}

int cmd_judge(const Globals& g, const std::string& experiment_id, const std::string& method,
              const std::string& judge_model, const std::string& templates_dir,
              double max_failure_rate) {
  JudgeRunOptions options;
  options.method = judge_method_from_string(method);
  options.judge_model_id = judge_model;
  Context ctx(g, true);
  ctx.require_experiment(experiment_id);
  if (!ctx.gateway().registry().contains(judge_model)) {
    throw Error(ErrorCode::kUnknownModel, "judge model '" + judge_model + "'");
  }
  auto pull_failures = pull_local_models(ctx.gateway(), {judge_model});
  if (!pull_failures.empty()) {
    throw Error(ErrorCode::kPullFailed, pull_failures.front().second);
  }
  Judge judge(ctx.gateway(),
              templates_dir.empty() ? JudgeTemplates::builtin() : JudgeTemplates::load(templates_dir));
  auto s = run_judge(*ctx.store, judge, experiment_id, options);
  const bool too_many = s.parse_failure_rate() > max_failure_rate;
  std::ostringstream text;
  text << method << " by " << judge_model << ": " << s.recorded << " verdicts, " << s.skipped
       << " already judged, " << s.parse_failures << " unparseable of " << s.attempted << "\n";
  if (too_many) {
    text << "error: parse failure rate " << s.parse_failure_rate() << " exceeds "
         << max_failure_rate << "\n";
  }
  emit(g,
       {{"experiment_id", experiment_id},
        {"method", to_string(options.method)},
        {"judge_model", judge_model},
        {"attempted", s.attempted},
        {"recorded", s.recorded},
        {"skipped", s.skipped},
        {"parse_failures", s.parse_failures},
        {"parse_failure_rate", s.parse_failure_rate()}},
       text.str());
  return too_many ? kRuntimeFailure : kOk;
}

int cmd_similarity(const Globals& g, const std::string& experiment_id,
                   const std::vector<std::string>& metric_names,
                   const std::optional<std::string>& provider) {
  SimilarityRunOptions options;
  options.provider_id = provider;
  if (metric_names.empty()) {
    options.metrics = {SimilarityMetric::kTfidf, SimilarityMetric::kBleu};
    if (provider) {
      options.metrics.push_back(SimilarityMetric::kEmbedCosine);
      options.metrics.push_back(SimilarityMetric::kSemBleu);
    }
  } else {
    for (const auto& m : metric_names) {
      try {
        options.metrics.push_back(similarity_metric_from_string(m));
      } catch (const Error&) {
        throw Error(ErrorCode::kInvalidArgument, "unknown metric '" + m + "'");
      }
    }
  }
  Context ctx(g, false);
  ctx.require_experiment(experiment_id);
  Gateway* gateway = ctx.env ? ctx.env->gateway.get() : nullptr;
  auto s = run_similarity(*ctx.store, gateway, experiment_id, options);
  json metrics = json::array();
  for (auto m : options.metrics) metrics.push_back(to_string(m));
  std::ostringstream text;
  text << "similarity: " << s.recorded << " scores, " << s.skipped << " already present\n";
  emit(g,
       {{"experiment_id", experiment_id},
        {"metrics", metrics},
        {"recorded", s.recorded},
        {"skipped", s.skipped}},
       text.str());
  return kOk;
}

std::string report_text(const json& report) {
  std::ostringstream os;
  os << "experiment " << report["experiment_id"].get<std::string>() << "\n";
  for (const auto& [source, ranking] : report["rankings"].items()) {
    os << "ranking " << source << ":";
    for (const auto& e : ranking["entries"]) {
      os << " " << e["model_id"].get<std::string>() << "=" << e["score"].get<double>();
    }
    os << "\n";
  }
  for (const auto& [source, a] : report["agreement"].items()) {
    const std::string k = std::to_string(a["k"].get<std::size_t>());
    os << "agreement " << source << ": jaccard@" << k << "=" << a["jaccard@" + k].get<double>()
       << " rbo@" << k << "=" << a["rbo@" + k].get<double>() << "\n";
  }
  for (const auto& c : report["cost"]) {
    os << "cost " << c["model_id"].get<std::string>() << ": "
       << c["cost_per_1k_tokens"].get<std::string>() << " per 1K tokens";
    if (c.contains("reduction_vs_api")) os << ", " << c["reduction_vs_api"].get<double>() << "x";
    os << "\n";
  }
  return os.str();
}

int cmd_analyze(const Globals& g, const std::string& experiment_id, std::size_t k) {
  Context ctx(g, false);
  ctx.require_experiment(experiment_id);
  ReportOptions options;
  options.k = k;
  json report = build_report(*ctx.store, experiment_id, options);
  auto path = ctx.store->snapshot_report(experiment_id, report);
  if (report["rankings"].empty()) {
    std::cerr << "error: no score source for '" << experiment_id
              << "' (no completed ratings, verdicts or similarity scores)\n";
    return kRuntimeFailure;
  }
  emit(g, report, report_text(report) + "report " + path.string() + "\n");
  return kOk;
}

int cmd_assign(const Globals& g, const std::string& experiment_id,
               const std::vector<std::string>& raters) {
  Context ctx(g, false);
  ctx.require_experiment(experiment_id);
  HumanEval human(*ctx.store, ctx.clock());
  SessionStore sessions(*ctx.store, ctx.clock());
  auto assignments = human.build_assignments(experiment_id, raters, g.seed.value_or(0));
  json invites = json::array();
  std::ostringstream text;
  for (const auto& a : assignments) {
    auto t = sessions.issue(a, ServiceOptions{}.session_ttl);
    invites.push_back({{"rater_id", a.rater_id},
                       {"assignment_id", a.assignment_id},
                       {"token", t.token},
                       {"expires_at", format_rfc3339(t.expires_at)}});
    text << a.rater_id << " " << t.token << "\n";
  }
  emit(g, {{"experiment_id", experiment_id}, {"invites", invites}}, text.str());
  return kOk;
}

HttpServer* g_server = nullptr;

int cmd_serve(const Globals& g, const std::string& listen) {
  auto [host, port] = parse_listen_address(listen);
  Context ctx(g, false);
  ServiceOptions options;
  options.assignment_seed = g.seed.value_or(0);
  Service service(*ctx.store, ctx.clock(), ctx.env ? ctx.env->gateway.get() : nullptr, options);
  HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "listening on " << host << ":" << port << ", data in " << g.data_dir << "\n";
  server.listen(host, port);
  g_server = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark self-hosted language models against a hosted API"};
  app.require_subcommand(1);
  Globals g;
  if (const char* env = std::getenv("SLAM_DATA_DIR"); env && *env) g.data_dir = env;
  std::uint64_t seed = 0;
  app.add_option("--data-dir", g.data_dir, "Data directory (env SLAM_DATA_DIR)");
  app.add_option("--providers", g.providers_file, "Providers file (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for simulated providers and assignments");
  app.add_option("--output", g.output, "Output format")->check(CLI::IsMember({"text", "json"}));

  std::vector<std::string> pull_models;
  auto* pull = app.add_subcommand("pull", "Download models into the local runner");
  pull->add_option("models", pull_models, "Model ids")->required();

  std::string config_path;
  auto* run = app.add_subcommand("run", "Create and execute an experiment");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string experiment_id, method = "scorer", judge_model, templates_dir;
  double max_failure_rate = 0.1;
  auto* judge = app.add_subcommand("judge", "Score records with a judge model");
  judge->add_option("experiment", experiment_id, "Experiment id")->required();
  judge->add_option("--method", method, "scorer | comparer | comparer-nr | selector")
      ->check(CLI::IsMember({"scorer", "comparer", "comparer-nr", "selector"}));
  judge->add_option("--judge-model", judge_model, "Judge model id")->required();
  judge->add_option("--templates", templates_dir, "Directory overriding the judge templates");
  judge->add_option("--max-parse-failure-rate", max_failure_rate,
                    "Fail when more verdicts than this fraction are unparseable");

  std::vector<std::string> metrics;
  std::string provider;
  auto* sim = app.add_subcommand("similarity", "Score records against the reference response");
  sim->add_option("experiment", experiment_id, "Experiment id")->required();
  sim->add_option("--metric", metrics, "tfidf | bleu | embed_cosine | sem_bleu (repeatable)");
  auto* provider_opt = sim->add_option("--provider", provider, "Embedding provider id");

  std::size_t k = 10;
  auto* analyze = app.add_subcommand("analyze", "Build the analysis report");
  analyze->add_option("experiment", experiment_id, "Experiment id")->required();
  analyze->add_option("--k", k, "Bottom-k depth for agreement")->check(CLI::PositiveNumber);

  std::vector<std::string> raters;
  auto* assign = app.add_subcommand("assign", "Create blind-rating assignments and invite tokens");
  assign->add_option("experiment", experiment_id, "Experiment id")->required();
  assign->add_option("--rater", raters, "Rater id (repeatable)")->required();

  std::string listen = "127.0.0.1:8080";
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--listen", listen, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*pull) return cmd_pull(g, pull_models);
    if (*run) return cmd_run(g, config_path);
    if (*judge) {
      return cmd_judge(g, experiment_id, method, judge_model, templates_dir, max_failure_rate);
    }
    if (*sim) {
      return cmd_similarity(g, experiment_id, metrics,
                            provider_opt->count() ? std::optional(provider) : std::nullopt);
    }
    if (*analyze) return cmd_analyze(g, experiment_id, k);
    if (*assign) return cmd_assign(g, experiment_id, raters);
    if (*serve) return cmd_serve(g, listen);
  } catch (const Error& e) {
    if (g.json_output()) {
      std::cout << json{{"error", e.what()}, {"code", std::string(error_code_name(e.code()))}}.dump(2) << "\n";
    }
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
