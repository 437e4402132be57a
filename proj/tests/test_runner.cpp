#include <gtest/gtest.h>

#include <json.hpp>

#include "slam/error.h"
#include "slam/runner.h"
#include "slam/store.h"
#include "test_util.h"

using namespace slam;
using namespace slam::testing;

namespace {

ExperimentPlan plan_for(std::vector<std::string> models, int reps = 3) {
  ExperimentPlan p;
  p.experiment_id = "exp";
  p.prompt_template = "Write about [TOPIC].";
  p.placeholder_values = {{"TOPIC", "the sea"}};
  p.model_ids = std::move(models);
  p.repetitions = reps;
  return p;
}

}  // namespace

TEST(RenderPrompt, Substitutes) {
  EXPECT_EQ(render_prompt("Hi [X]", {{"X", "there"}}), "Hi there");
  EXPECT_EQ(render_prompt("[A][A]", {{"A", "x"}}), "xx");
  EXPECT_EQ(render_prompt("no slots", {}), "no slots");
}

TEST(RenderPrompt, SinglePass) {
  EXPECT_EQ(render_prompt("[A] and [B]", {{"A", "[B]"}, {"B", "b"}}), "[B] and b");
}

TEST(RenderPrompt, MissingListsEveryName) {
  try {
    render_prompt("Hi [X] [Y] [X]", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingPlaceholder);
    EXPECT_EQ(std::string(e.what()), "MissingPlaceholder: X, Y");
  }
}

TEST(RenderPrompt, PlaceholdersOf) {
  EXPECT_EQ(placeholders_of("[A] [] [B] [A] [unclosed"), (std::vector<std::string>{"A", "B"}));
}

TEST(Runner, CountsRepetitions) {
  SimulatedGateway g;
  g.add_local("m1");
  Runner runner(g.gateway, nullptr);
  auto plan = plan_for({"m1"}, 3);
  plan.warmup_requests = 0;
  auto res = runner.run_experiment(plan);
  ASSERT_EQ(res.models.size(), 1u);
  EXPECT_EQ(res.for_model("m1").records.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(res.models[0].records[i].repetition, i);
}

TEST(Runner, FailingModelDoesNotAbort) {
  SimulatorConfig cfg;
  cfg.failing_models = {"bad"};
  SimulatedGateway g(cfg);
  g.add_local("good");
  g.add_local("bad");
  TempDir dir;
  Store store(dir.path(), g.clock);
  auto plan = plan_for({"good", "bad"}, 10);
  plan.warmup_requests = 0;
  store.create_experiment(plan);
  Runner runner(g.gateway, &store);
  auto res = runner.run_experiment(plan);
  EXPECT_EQ(res.for_model("good").records.size(), 10u);
  EXPECT_EQ(res.for_model("bad").records.size(), 10u);
  for (const auto& r : res.for_model("good").records) EXPECT_TRUE(r.ok());
  for (const auto& r : res.for_model("bad").records) {
    ASSERT_TRUE(r.error);
    EXPECT_TRUE(r.response_text.empty());
  }
  EXPECT_EQ(store.generations("exp").size(), 20u);
}

TEST(Runner, AllModelsFailed) {
  SimulatorConfig cfg;
  cfg.failing_models = {"bad"};
  SimulatedGateway g(cfg);
  g.add_local("bad");
  Runner runner(g.gateway, nullptr);
  try {
    runner.run_experiment(plan_for({"bad"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllModelsFailed);
  }
}

TEST(Runner, WarmupCallsAreNotRecorded) {
  SimulatedGateway g;
  g.add_local("local");
  g.add_hosted("hosted");
  TempDir dir;
  Store store(dir.path(), g.clock);
  auto plan = plan_for({"local", "hosted"}, 4);
  store.create_experiment(plan);
  Runner runner(g.gateway, &store);
  EXPECT_EQ(runner.warmup_for(plan, "local"), 10);
  EXPECT_EQ(runner.warmup_for(plan, "hosted"), 0);
  runner.run_experiment(plan);
  EXPECT_EQ(g.sim.calls("local"), 14u);
  EXPECT_EQ(g.sim.calls("hosted"), 4u);
  EXPECT_EQ(store.generations("exp", {.model_id = "local"}).size(), 4u);

  plan.warmup_requests = 2;
  EXPECT_EQ(runner.warmup_for(plan, "hosted"), 2);
}

TEST(Runner, UnknownModelRejectedUpFront) {
  SimulatedGateway g;
  Runner runner(g.gateway, nullptr);
  EXPECT_THROW(runner.run_experiment(plan_for({"ghost"})), Error);
}

TEST(Runner, DeterministicUnderSeed) {
  auto run = [] {
    SimulatorConfig cfg;
    cfg.seed = 42;
    SimulatedGateway g(cfg);
    g.add_local("a");
    g.add_hosted("b");
    Runner runner(g.gateway, nullptr);
    nlohmann::json j = runner.run_experiment(plan_for({"a", "b"}, 5));
    return j.dump();
  };
  EXPECT_EQ(run(), run());
}

TEST(Runner, ParallelModelsMatchSequentialCounts) {
  SimulatedGateway g;
  for (auto id : {"a", "b", "c", "d"}) g.add_local(id);
  Runner runner(g.gateway, nullptr, 4);
  auto plan = plan_for({"a", "b", "c", "d"}, 3);
  plan.warmup_requests = 0;
  auto res = runner.run_experiment(plan);
  ASSERT_EQ(res.models.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(res.models[i].model_id, plan.model_ids[i]);
    EXPECT_EQ(res.models[i].records.size(), 3u);
  }
}

TEST(Longitudinal, HourTagsAndCounts) {
  SimulatedGateway g;
  g.add_local("m");
  Runner runner(g.gateway, nullptr);
  auto plan = plan_for({"m"});
  plan.warmup_requests = 0;
  auto res = runner.run_longitudinal(plan, {2, 3, false});
  const auto& recs = res.models[0].records;
  ASSERT_EQ(recs.size(), 6u);
  int h0 = 0, h1 = 0;
  for (const auto& r : recs) (*r.hour == 0 ? h0 : h1)++;
  EXPECT_EQ(h0, 3);
  EXPECT_EQ(h1, 3);
  ASSERT_EQ(res.ticks.size(), 2u);
  EXPECT_EQ(res.ticks[0], t0());
  EXPECT_EQ(res.ticks[1], t0() + std::chrono::hours(1));
}

TEST(Longitudinal, AlignedTicksLandOnHourBoundaries) {
  SimulatedGateway g;
  g.clock.advance(std::chrono::minutes(17));
  g.add_local("m");
  Runner runner(g.gateway, nullptr);
  auto plan = plan_for({"m"}, 1);
  auto res = runner.run_longitudinal(plan, {3, 1, true});
  for (std::size_t h = 0; h < res.ticks.size(); ++h) {
    EXPECT_EQ(res.ticks[h], t0() + std::chrono::hours(1 + h));
  }
}

TEST(Longitudinal, RecordIdsAreUnique) {
  SimulatedGateway g;
  g.add_local("m");
  Runner runner(g.gateway, nullptr);
  auto plan = plan_for({"m"});
  plan.warmup_requests = 0;
  auto res = runner.run_longitudinal(plan, {3, 4, false});
  std::set<std::string> ids;
  for (const auto& r : res.models[0].records) ids.insert(r.record_id);
  EXPECT_EQ(ids.size(), 12u);
}
