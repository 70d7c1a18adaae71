// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "dagorch/error.hpp"
#include "dagorch/executor.hpp"
#include "support.hpp"

using namespace dagorch;
using namespace dagorch::testing;
using namespace std::chrono_literals;

namespace {

SubQuestion sq(std::string id, std::set<std::string> deps = {}, int priority = 5) {
  SubQuestion s;
  s.id = id;
  s.question = "Q" + id;
  s.dependencies = std::move(deps);
  s.priority = priority;
  return s;
}

ExecutionPlan chain_abc() { return ExecutionPlan{{sq("a"), sq("b", {"a"}), sq("c", {"b"})}, ""}; }

std::vector<std::string> ids(const std::vector<const SubQuestion*>& v) {
  std::vector<std::string> out;
  for (const auto* s : v) out.push_back(s->id);
  return out;
}

ExecutorConfig virtual_config(int k = 3) {
  ExecutorConfig c;
  c.max_concurrent = k;
  c.time_mode = TimeMode::Virtual;
  return c;
}

std::set<std::string> all_ids(const ExecutionPlan& p) { return p.ids(); }

}  // namespace

TEST(ReadySet, ChainExamples) {
  auto p = chain_abc();
  EXPECT_EQ(ids(ready_set(p, {})), (std::vector<std::string>{"a"}));
  EXPECT_EQ(ids(ready_set(p, {"a"})), (std::vector<std::string>{"b"}));
  EXPECT_TRUE(ready_set(p, {"a", "b", "c"}).empty());
}

TEST(ReadySet, MatchesPerNodeSubsetCheckOnRandomDags) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 400; ++round) {
    auto p = random_dag(rng, 1 + static_cast<int>(rng() % 30), 0.25);
    // Downward-closed completed set: a random prefix of a topological order.
    auto waves = wave_decomposition(p);
    std::vector<std::string> topo;
    for (const auto& w : waves) topo.insert(topo.end(), w.begin(), w.end());
    std::set<std::string> completed(topo.begin(), topo.begin() + static_cast<long>(rng() % (topo.size() + 1)));

    std::set<std::string> expected;
    for (const auto& s : p.sub_questions) {
      if (completed.contains(s.id)) continue;
      bool all = true;
      for (const auto& d : s.dependencies) all = all && completed.contains(d);
      if (all) expected.insert(s.id);
    }
    auto got = ids(ready_set(p, completed));
    ASSERT_EQ(std::set<std::string>(got.begin(), got.end()), expected);
    ASSERT_EQ(got.size(), expected.size());
  }
}

TEST(SelectBatch, TopKByPriority) {
  auto x = sq("x", {}, 9), y = sq("y", {}, 5), z = sq("z", {}, 7);
  EXPECT_EQ(ids(select_batch({&x, &y, &z}, 2)), (std::vector<std::string>{"x", "z"}));
}

TEST(SelectBatch, DefaultWidthTakesExactlyThree) {
  std::vector<SubQuestion> five;
  for (int i = 0; i < 5; ++i) five.push_back(sq("s" + std::to_string(i), {}, i + 1));
  std::vector<const SubQuestion*> ready;
  for (const auto& s : five) ready.push_back(&s);
  EXPECT_EQ(select_batch(ready, 3).size(), 3u);
}

TEST(SelectBatch, TiesBreakByAscendingId) {
  auto a = sq("a", {}, 5), b = sq("b", {}, 5);
  EXPECT_EQ(ids(select_batch({&b, &a}, 1)), (std::vector<std::string>{"a"}));
}

TEST(SelectBatch, AgreesWithSortOracle) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 500; ++round) {
    std::vector<SubQuestion> items;
    const int n = static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) items.push_back(sq("q" + std::to_string(rng() % 100) + "_" + std::to_string(i), {}, 1 + static_cast<int>(rng() % 10)));
    std::vector<const SubQuestion*> ready;
    for (const auto& s : items) ready.push_back(&s);
    std::shuffle(ready.begin(), ready.end(), rng);
    const int k = 1 + static_cast<int>(rng() % 5);

    std::vector<std::pair<int, std::string>> keyed;
    for (const auto& s : items) keyed.emplace_back(-s.priority, s.id);
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < keyed.size() && i < static_cast<std::size_t>(k); ++i) expected.push_back(keyed[i].second);
    ASSERT_EQ(ids(select_batch(ready, k)), expected);
  }
}

TEST(EnrichWithContext, SingleDependencyBlockThenQuestion) {
  auto s = sq("q", {"d1"});
  s.question = "Q";
  AgentResult d1;
  d1.sub_question_id = "d1";
  d1.content = "C";
  EXPECT_EQ(enrich_with_context(s, {{"d1", d1}}), "--- context from d1 ---\nC\n--- end context from d1 ---\n\nQ");
}

TEST(EnrichWithContext, BlocksAscendByDependencyId) {
  auto s = sq("q", {"d2", "d1"});
  AgentResult r1, r2;
  r1.content = "one";
  r2.content = "two";
  auto text = enrich_with_context(s, {{"d2", r2}, {"d1", r1}});
  EXPECT_LT(text.find("context from d1"), text.find("context from d2"));
  EXPECT_TRUE(text.ends_with(s.question));
}

TEST(EnrichWithContext, MissingDependencyIsAnInternalError) {
  EXPECT_THROW(enrich_with_context(sq("q", {"d1"}), {}), InternalError);
}

TEST(EnrichWithContext, DisabledFlagPassesTheQuestionThrough) {
  auto s = sq("q", {"d1"});
  s.context_from_deps = false;
  AgentResult d1;
  d1.content = "C";
  EXPECT_EQ(agent_prompt(s, {{"d1", d1}}), s.question);
  s.context_from_deps = true;
  EXPECT_NE(agent_prompt(s, {{"d1", d1}}), s.question);
}

TEST(ExecutorConfig, RejectsNonPositiveValues) {
  ExecutorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_concurrent = 0;
  EXPECT_THROW(c.validate(), Error);
  c = ExecutorConfig{};
  c.agent_timeout = 0ms;
  EXPECT_THROW(c.validate(), Error);
  c = ExecutorConfig{};
  c.tool_limits.max_total_tool_calls = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ExecutePlan, ThreeIndependentRunInOneWave) {
  ExecutionPlan p{{sq("a"), sq("b"), sq("c")}, ""};
  EventBus bus(std::make_shared<ManualClock>());
  auto out = execute_plan(p, all_ids(p), {}, registry_with_agent(echo_agent(10ms)), virtual_config(), bus);
  ASSERT_EQ(out.batches.size(), 1u);
  EXPECT_EQ(out.batches[0].size(), 3u);
  auto evs = bus.events();
  for (int i = 0; i < 3; ++i) EXPECT_EQ(evs[static_cast<std::size_t>(i)].kind, EventKind::SubQuestionStarted);
  EXPECT_EQ(out.results.size(), 3u);
}

TEST(ExecutePlan, DependentsSeeDependencyContent) {
  auto b = sq("b", {"a"});
  b.context_from_deps = true;
  ExecutionPlan p{{sq("a"), b}, ""};
  auto seen = std::make_shared<std::string>();
  auto agent = std::make_shared<LambdaAgent>([seen](AgentRequest& r) {
    if (r.sub_question.id == "b") *seen = r.prompt;
    return AgentResponse{"content of " + r.sub_question.id, {}, 1, 5ms};
  });
  EventBus bus(std::make_shared<ManualClock>());
  execute_plan(p, all_ids(p), {}, registry_with_agent(agent), virtual_config(), bus);
  EXPECT_NE(seen->find("content of a"), std::string::npos);
  EXPECT_TRUE(seen->ends_with(b.question));
}

TEST(ExecutePlan, VirtualLatencyPastTimeoutBecomesTimeoutFailure) {
  ExecutionPlan p{{sq("slow")}, ""};
  auto cfg = virtual_config();
  cfg.agent_timeout = 100ms;
  EventBus bus(std::make_shared<ManualClock>());
  auto out = execute_plan(p, all_ids(p), {}, registry_with_agent(echo_agent(250ms)), cfg, bus);
  const auto& r = out.results.at("slow");
  EXPECT_TRUE(r.failed());
  EXPECT_TRUE(r.timed_out());
  EXPECT_TRUE(r.content.empty());
  EXPECT_EQ(r.duration, 100ms);
}

TEST(ExecutePlan, WallClockTimeoutAbandonsTheExecution) {
  ExecutionPlan p{{sq("slow")}, ""};
  ExecutorConfig cfg;
  cfg.agent_timeout = 40ms;
  cfg.time_mode = TimeMode::Wall;
  auto agent = std::make_shared<LambdaAgent>([](AgentRequest& r) {
    for (int i = 0; i < 100 && !r.stop.stop_requested(); ++i) std::this_thread::sleep_for(5ms);
    return AgentResponse{"late", {}, 1, {}};
  });
  EventBus bus;
  const auto started = std::chrono::steady_clock::now();
  auto out = execute_plan(p, all_ids(p), {}, registry_with_agent(agent), cfg, bus);
  EXPECT_LT(std::chrono::steady_clock::now() - started, 400ms);
  EXPECT_TRUE(out.results.at("slow").timed_out());
  // The abandoned thread observes the stop request and exits on its own.
  std::this_thread::sleep_for(30ms);
}

TEST(ExecutePlan, FailuresStillReleaseDependents) {
  ExecutionPlan p{{sq("a"), sq("b", {"a"})}, ""};
  auto agent = std::make_shared<LambdaAgent>([](AgentRequest& r) -> AgentResponse {
    if (r.sub_question.id == "a") throw BackendError("boom", "scripted");
    return {"fine", {}, 1, 1ms};
  });
  EventBus bus(std::make_shared<ManualClock>());
  auto out = execute_plan(p, all_ids(p), {}, registry_with_agent(agent), virtual_config(), bus);
  EXPECT_TRUE(out.results.at("a").failed());
  EXPECT_EQ(out.results.at("b").content, "fine");
}

TEST(ExecutePlan, PendingSubsetUsesPriorResultsAndNextAttempt) {
  ExecutionPlan p{{sq("a"), sq("b", {"a"})}, ""};
  AgentResult prior_a;
  prior_a.sub_question_id = "a";
  prior_a.content = "kept";
  AgentResult prior_b;
  prior_b.sub_question_id = "b";
  prior_b.attempt = 2;
  auto attempts = std::make_shared<std::map<std::string, int>>();
  auto agent = std::make_shared<LambdaAgent>([attempts](AgentRequest& r) {
    (*attempts)[r.sub_question.id] = r.attempt;
    return AgentResponse{"x", {}, 1, 1ms};
  });
  EventBus bus(std::make_shared<ManualClock>());
  auto out = execute_plan(p, {"b"}, {{"a", prior_a}, {"b", prior_b}}, registry_with_agent(agent), virtual_config(), bus);
  EXPECT_EQ(out.results.size(), 1u);
  EXPECT_EQ(attempts->at("b"), 3);
  EXPECT_FALSE(attempts->contains("a"));
}

TEST(ExecutePlan, SlotRefillAdmitsAsSoonAsASlotFrees) {
  ExecutionPlan p{{sq("a", {}, 9), sq("b", {}, 8), sq("c", {}, 7), sq("d", {}, 6)}, ""};
  auto agent = std::make_shared<LambdaAgent>([](AgentRequest& r) {
    const auto latency = r.sub_question.id == "a" ? 10ms : 100ms;
    return AgentResponse{"x", {}, 1, latency};
  });
  EventBus bus(std::make_shared<ManualClock>());
  auto out = execute_plan(p, all_ids(p), {}, registry_with_agent(agent), virtual_config(), bus);
  ASSERT_EQ(out.batches.size(), 2u);
  EXPECT_EQ(out.batches[1], (std::vector<std::string>{"d"}));
  // d starts at the moment a finishes, well before b and c are done.
  auto starts = of_kind(bus.events(), EventKind::SubQuestionStarted);
  EXPECT_EQ(starts.back().payload.at("id"), "d");
  EXPECT_EQ(starts.back().timestamp_ms, 10);
}

TEST(ExecutePlan, StrictBarrierWaitsForTheWholeBatch) {
  ExecutionPlan p{{sq("a", {}, 9), sq("b", {}, 8), sq("c", {}, 7), sq("d", {}, 6)}, ""};
  auto agent = std::make_shared<LambdaAgent>([](AgentRequest& r) {
    const auto latency = r.sub_question.id == "a" ? 10ms : 100ms;
    return AgentResponse{"x", {}, 1, latency};
  });
  auto cfg = virtual_config();
  cfg.batch_mode = BatchMode::StrictBarrier;
  EventBus bus(std::make_shared<ManualClock>());
  execute_plan(p, all_ids(p), {}, registry_with_agent(agent), cfg, bus);
  auto starts = of_kind(bus.events(), EventKind::SubQuestionStarted);
  EXPECT_EQ(starts.back().timestamp_ms, 100);
}

TEST(ExecutePlan, VirtualRunsAreDeterministic) {
  std::mt19937_64 rng(99);
  auto p = random_dag(rng, 15, 0.2);
  auto agent = std::make_shared<LambdaAgent>([](AgentRequest& r) {
    return AgentResponse{"a" + r.sub_question.id, {}, 3,
                         std::chrono::milliseconds(10 + static_cast<int>(std::hash<std::string>{}(r.sub_question.id) % 50))};
  });
  auto run_once = [&] {
    EventBus bus(std::make_shared<ManualClock>());
    auto out = execute_plan(p, all_ids(p), {}, registry_with_agent(agent), virtual_config(), bus);
    return std::make_pair(out.batches, encode_event_log(bus.events()));
  };
  EXPECT_EQ(run_once(), run_once());
}

TEST(ExecutePlan, WallModeNeverExceedsTheConcurrencyBound) {
  std::mt19937_64 rng(4);
  for (int round = 0; round < 5; ++round) {
    auto p = random_dag(rng, 12, 0.15);
    struct Gauge {
      std::atomic<int> now{0};
      std::atomic<int> peak{0};
    };
    auto g = std::make_shared<Gauge>();
    auto agent = std::make_shared<LambdaAgent>([g](AgentRequest&) {
      const int n = ++g->now;
      int peak = g->peak.load();
      while (n > peak && !g->peak.compare_exchange_weak(peak, n)) {
      }
      std::this_thread::sleep_for(2ms);
      --g->now;
      return AgentResponse{"x", {}, 1, {}};
    });
    ExecutorConfig cfg;
    cfg.max_concurrent = 3;
    cfg.time_mode = TimeMode::Wall;
    EventBus bus;
    auto out = execute_plan(p, all_ids(p), {}, registry_with_agent(agent), cfg, bus);
    EXPECT_EQ(out.results.size(), 12u);
    EXPECT_LE(g->peak.load(), 3);
    int in_flight = 0;
    for (const auto& e : bus.events()) {
      in_flight += e.kind == EventKind::SubQuestionStarted ? 1 : -1;
      ASSERT_LE(in_flight, 3);
    }
  }
}

TEST(ExecutePlan, RejectsUnregisteredAgentTypes) {
  auto s = sq("a");
  s.agent_type = AgentType::Visualization;
  ExecutionPlan p{{s}, ""};
  BackendRegistry reg;
  reg.agents[AgentType::Rag] = echo_agent();
  EventBus bus(std::make_shared<ManualClock>());
  EXPECT_THROW(execute_plan(p, all_ids(p), {}, reg, virtual_config(), bus), Error);
}

TEST(ToolCallLimiter, EleventhConsecutiveSameToolIsDenied) {
  ToolCallLimiter l;
  for (int i = 0; i < 10; ++i) ASSERT_TRUE(l.record("search").allowed);
  auto d = l.record("search");
  EXPECT_FALSE(d.allowed);
  EXPECT_EQ(d.reason, DenyReason::Consecutive);
}

TEST(ToolCallLimiter, FiftyFirstTotalCallIsDenied) {
  ToolCallLimiter l;
  for (int i = 0; i < 50; ++i) ASSERT_TRUE(l.record(i % 2 ? "fetch" : "search").allowed);
  auto d = l.record("search");
  EXPECT_FALSE(d.allowed);
  EXPECT_EQ(d.reason, DenyReason::Total);
}

TEST(ToolCallLimiter, ChangingToolResetsTheConsecutiveCount) {
  ToolCallLimiter l;
  for (int i = 0; i < 10; ++i) ASSERT_TRUE(l.record("search").allowed);
  ASSERT_TRUE(l.record("fetch").allowed);
  for (int i = 0; i < 9; ++i) ASSERT_TRUE(l.record("search").allowed);
  EXPECT_EQ(l.consecutive_count(), 9);
  EXPECT_EQ(l.total_count(), 20);
}

TEST(ToolCallLimiter, DenyIsSticky) {
  ToolCallLimiter l(ToolLimits{2, 50});
  l.record("a");
  l.record("a");
  ASSERT_FALSE(l.record("a").allowed);
  EXPECT_FALSE(l.record("b").allowed);
  EXPECT_EQ(l.record("b").reason, DenyReason::Consecutive);
  EXPECT_EQ(l.total_count(), 2);
}

TEST(ToolSession, DeniedCallsNeverReachTheInvokerAndAreTraced) {
  auto local = std::make_shared<LocalToolInvoker>();
  auto calls = std::make_shared<int>(0);
  local->add("search", [calls](const Json& a) {
    ++*calls;
    return a;
  });
  ToolSession session(ToolLimits{10, 50}, local);
  for (int i = 0; i < 11; ++i) session.call("search", Json{{"i", i}});
  EXPECT_EQ(*calls, 10);
  ASSERT_EQ(session.trace().size(), 11u);
  EXPECT_EQ(session.trace().front().outcome, "ok");
  EXPECT_EQ(session.trace().back().outcome, "denied:consecutive");
}
