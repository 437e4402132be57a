#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "slam/clock.h"
#include "slam/gateway.h"
#include "slam/simulator.h"

namespace slam::testing {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(SLAM_FIXTURE_DIR) / name;
}

inline nlohmann::json fixture_json(const std::string& name) {
  return nlohmann::json::parse(read_file(fixture(name)));
}

inline UtcTime t0() { return parse_rfc3339("2023-11-13T08:00:00Z"); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("slam-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ModelSpec local_model(const std::string& id) {
  ModelSpec m;
  m.model_id = id;
  m.provider = ProviderKind::kLocalRunner;
  m.params_billion = 7;
  m.quant_bits = 4;
  m.size_gb = 4.1;
  m.pull_ref = id;
  return m;
}

inline ModelSpec hosted_model(const std::string& id) {
  ModelSpec m;
  m.model_id = id;
  m.provider = ProviderKind::kHostedApi;
  return m;
}

// Gateway wired to a simulator on a manual clock.
struct SimulatedGateway {
  ManualClock clock{t0()};
  ProviderSimulator sim;
  Gateway gateway;

  explicit SimulatedGateway(SimulatorConfig config = {}, bool rate_limited = false)
      : sim(config, clock), gateway(clock, sim.transport_factory()) {
    EndpointConfig hosted{"http://hosted", std::nullopt, std::chrono::seconds(30), std::nullopt};
    if (rate_limited) hosted.rate_limit = RateLimitPolicy{};
    gateway.set_hosted_endpoint(hosted);
    gateway.set_local_endpoint({"http://runner", std::nullopt, std::chrono::seconds(30),
                                std::nullopt});
    gateway.add_embedding_provider({"sbert", "http://embed", config.embedding_dim,
                                    std::chrono::seconds(30)});
  }

  void add_local(const std::string& id, bool pull = true) {
    gateway.register_model(local_model(id));
    if (pull) gateway.pull_model(id);
  }
  void add_hosted(const std::string& id) { gateway.register_model(hosted_model(id)); }
};

}  // namespace slam::testing
