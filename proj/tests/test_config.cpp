#include <gtest/gtest.h>

#include <json.hpp>

#include "slam/config.h"
#include "slam/error.h"
#include "slam/runner.h"
#include "test_util.h"

using namespace slam;
using nlohmann::json;

namespace {

json minimal_plan() {
  return json{{"experiment_id", "exp-1"},
              {"prompt_template", "Hi [X]"},
              {"placeholder_values", {{"X", "there"}}},
              {"models", {"a", "b"}}};
}

std::string config_error(const json& j) {
  try {
    parse_experiment_plan(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    return e.what();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return {};
}

}  // namespace

TEST(Config, Defaults) {
  auto p = parse_experiment_plan(minimal_plan());
  EXPECT_EQ(p.repetitions, 10);
  EXPECT_DOUBLE_EQ(p.params.temperature, 0.7);
  EXPECT_FALSE(p.warmup_requests);
  EXPECT_FALSE(p.schedule);
  EXPECT_EQ(p.cost.pricing.input_per_1k, Money::parse("0.03"));
  EXPECT_EQ(p.cost.pricing.output_per_1k, Money::parse("0.06"));
  EXPECT_DOUBLE_EQ(p.cost.utilization, 0.8);
}

TEST(Config, ListsEveryBadField) {
  json j = minimal_plan();
  j.erase("prompt_template");
  j["repetitions"] = "ten";
  j["models"] = json::array();
  std::string msg = config_error(j);
  EXPECT_NE(msg.find("prompt_template"), std::string::npos) << msg;
  EXPECT_NE(msg.find("repetitions"), std::string::npos) << msg;
}

TEST(Config, RejectsSemanticProblems) {
  json j = minimal_plan();
  j["models"] = {"a", "a"};
  EXPECT_NE(config_error(j).find("duplicate"), std::string::npos);
  j = minimal_plan();
  j["repetitions"] = 0;
  config_error(j);
  j = minimal_plan();
  j["experiment_id"] = "../escape";
  config_error(j);
  j = minimal_plan();
  j["reference_model"] = "zzz";
  config_error(j);
  j = minimal_plan();
  j["cost"] = {{"utilization", 0}};
  config_error(j);
  j = minimal_plan();
  j["params"] = {{"temperature", 5}};
  config_error(j);
}

TEST(Config, RoundTripsThroughJson) {
  json j = minimal_plan();
  j["schedule"] = {{"hours", 2}, {"per_hour", 3}, {"aligned_to_hour", true}};
  j["warmup_requests"] = 2;
  j["reference_model"] = "a";
  j["cost"] = {{"hourly_price", "0.72"}, {"hourly_price_by_model", {{"b", "1.5"}}}};
  auto p = parse_experiment_plan(j);
  json out = p;
  auto q = parse_experiment_plan(out);
  EXPECT_EQ(json(q), out);
  EXPECT_EQ(q.schedule->hours, 2);
  EXPECT_EQ(q.cost.hourly_price_by_model.at("b"), Money::parse("1.5"));
}

TEST(Config, ShippedPepTalkConfigIsValidAndRenders) {
  auto j = json::parse(slam::testing::read_file(std::string(SLAM_SOURCE_DIR) +
                                                "/configs/pep_talk.json"));
  auto p = parse_experiment_plan(j);
  EXPECT_EQ(p.repetitions, 10);
  EXPECT_DOUBLE_EQ(p.params.temperature, 0.7);
  std::string prompt = render_prompt(p.prompt_template, p.placeholder_values);
  EXPECT_EQ(prompt.find("[LIST OF"), std::string::npos);
  EXPECT_NE(prompt.find("Keep your response within 4 sentences."), std::string::npos);
}

TEST(Config, ProvidersFile) {
  auto j = json::parse(slam::testing::read_file(std::string(SLAM_SOURCE_DIR) +
                                                "/configs/providers_stub.json"));
  auto c = parse_providers_config(j);
  ASSERT_TRUE(c.hosted_api);
  ASSERT_TRUE(c.hosted_api->rate_limit);
  EXPECT_TRUE(c.simulate);
  EXPECT_FALSE(c.models.empty());
  ASSERT_EQ(c.embedding.size(), 1u);
  EXPECT_EQ(c.embedding[0].dim, 64);
}

TEST(Config, HostedEndpointDefaultLimits) {
  auto c = parse_providers_config(json{{"hosted_api", {{"base_url", "http://x"}}}});
  ASSERT_TRUE(c.hosted_api->rate_limit);
  EXPECT_EQ(c.hosted_api->rate_limit->tokens_per_minute, 1000);
  EXPECT_EQ(c.hosted_api->timeout, std::chrono::seconds(300));
}

TEST(Config, ProvidersErrors) {
  EXPECT_THROW(parse_providers_config(json::array()), Error);
  EXPECT_THROW(parse_providers_config(json{{"models", {{{"model_id", "m"}}}}}), Error);
  EXPECT_THROW(parse_providers_config(
                   json{{"hosted_api", {{"rate_limit", {{"tokens_per_minute", 0}}}}}}),
               Error);
}
