// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dagorch/error.hpp"
#include "dagorch/plan.hpp"
#include "support.hpp"

using namespace dagorch;
using dagorch::testing::random_dag;

namespace {

SubQuestion sq(std::string id, std::set<std::string> deps = {}, int priority = 5) {
  SubQuestion s;
  s.id = id;
  s.question = "question " + id;
  s.dependencies = std::move(deps);
  s.priority = priority;
  return s;
}

ExecutionPlan plan_of(std::vector<SubQuestion> sqs) { return ExecutionPlan{std::move(sqs), ""}; }

bool has_kind(const ValidationReport& r, PlanViolation::Kind k) {
  return std::any_of(r.violations.begin(), r.violations.end(), [k](const PlanViolation& v) { return v.kind == k; });
}

// Layers by repeatedly removing every node whose remaining in-degree is 0.
std::vector<std::set<std::string>> peel_layers(const ExecutionPlan& plan) {
  std::map<std::string, std::set<std::string>> remaining;
  for (const auto& s : plan.sub_questions) remaining[s.id] = s.dependencies;
  std::vector<std::set<std::string>> layers;
  while (!remaining.empty()) {
    std::set<std::string> layer;
    for (const auto& [id, deps] : remaining) {
      if (deps.empty()) layer.insert(id);
    }
    if (layer.empty()) throw std::runtime_error("oracle: cycle");
    for (const auto& id : layer) remaining.erase(id);
    for (auto& [_, deps] : remaining) {
      for (const auto& id : layer) deps.erase(id);
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

TEST(AgentTaxonomy, EveryTypeHasOneTierMatchingTheTaxonomyTable) {
  EXPECT_EQ(tier_of(AgentType::Rag), Tier::DataGathering);
  EXPECT_EQ(tier_of(AgentType::WebSearch), Tier::DataGathering);
  EXPECT_EQ(tier_of(AgentType::Financial), Tier::DataGathering);
  EXPECT_EQ(tier_of(AgentType::Competitor), Tier::DataGathering);
  EXPECT_EQ(tier_of(AgentType::Analysis), Tier::Analysis);
  EXPECT_EQ(tier_of(AgentType::Reasoning), Tier::Analysis);
  EXPECT_EQ(tier_of(AgentType::RawData), Tier::Analysis);
  EXPECT_EQ(tier_of(AgentType::Document), Tier::Output);
  EXPECT_EQ(tier_of(AgentType::Visualization), Tier::Output);
}

TEST(AgentTaxonomy, WireNamesRoundTrip) {
  for (auto t : kAllAgentTypes) EXPECT_EQ(parse_agent_type(to_string(t)), t);
  EXPECT_EQ(to_string(AgentType::WebSearch), "web_search");
  EXPECT_EQ(to_string(AgentType::RawData), "raw_data");
  EXPECT_FALSE(parse_agent_type("WebSearch").has_value());
}

TEST(ValidatePlan, MinimalChainIsValid) {
  EXPECT_TRUE(validate_plan(plan_of({sq("a"), sq("b", {"a"})})).ok());
}

TEST(ValidatePlan, TwoNodeCycleNamesBothMembers) {
  auto r = validate_plan(plan_of({sq("a", {"b"}), sq("b", {"a"})}));
  ASSERT_FALSE(r.ok());
  auto it = std::find_if(r.violations.begin(), r.violations.end(),
                         [](const PlanViolation& v) { return v.kind == PlanViolation::Kind::Cycle; });
  ASSERT_NE(it, r.violations.end());
  EXPECT_EQ(std::set<std::string>(it->ids.begin(), it->ids.end()), (std::set<std::string>{"a", "b"}));
}

TEST(ValidatePlan, DanglingReferenceNamesSourceAndTarget) {
  auto r = validate_plan(plan_of({sq("a", {"x"})}));
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, PlanViolation::Kind::DanglingDependency);
  EXPECT_EQ(r.violations[0].ids, (std::vector<std::string>{"a", "x"}));
}

TEST(ValidatePlan, EnumeratesEveryViolation) {
  auto bad_priority = sq("p", {}, 11);
  auto low_priority = sq("q", {}, 0);
  auto empty_question = sq("e");
  empty_question.question.clear();
  auto r = validate_plan(plan_of({bad_priority, low_priority, empty_question, sq("d"), sq("d"), sq("s", {"s"}), sq("", {})}));
  EXPECT_TRUE(has_kind(r, PlanViolation::Kind::PriorityOutOfRange));
  EXPECT_TRUE(has_kind(r, PlanViolation::Kind::EmptyQuestion));
  EXPECT_TRUE(has_kind(r, PlanViolation::Kind::DuplicateId));
  EXPECT_TRUE(has_kind(r, PlanViolation::Kind::SelfDependency));
  EXPECT_TRUE(has_kind(r, PlanViolation::Kind::EmptyId));
  EXPECT_EQ(std::count_if(r.violations.begin(), r.violations.end(),
                          [](const PlanViolation& v) { return v.kind == PlanViolation::Kind::PriorityOutOfRange; }),
            2);
}

TEST(ValidatePlan, EmptyPlanIsRejected) {
  auto r = validate_plan(ExecutionPlan{});
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.violations[0].kind, PlanViolation::Kind::EmptyPlan);
}

TEST(ValidatePlan, IdenticalQuestionTextIsAccepted) {
  auto a = sq("a");
  auto b = sq("b");
  b.question = a.question;
  EXPECT_TRUE(validate_plan(plan_of({a, b})).ok());
}

TEST(ValidatePlan, RequireValidThrowsPlanError) {
  EXPECT_THROW(require_valid(plan_of({sq("a", {"a"})})), PlanError);
  EXPECT_NO_THROW(require_valid(plan_of({sq("a")})));
}

TEST(ValidatePlan, PermutingSubQuestionsNeverChangesTheVerdict) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 300; ++round) {
    ExecutionPlan p = random_dag(rng, 1 + static_cast<int>(rng() % 12), 0.3);
    // Corrupt some of them: add a back edge (cycle) or a dangling id.
    if (round % 3 == 1 && p.sub_questions.size() > 1) {
      auto& first = p.sub_questions.front();
      for (const auto& other : p.sub_questions) {
        if (other.dependencies.contains(first.id)) {
          first.dependencies.insert(other.id);
          break;
        }
      }
    } else if (round % 3 == 2) {
      p.sub_questions.back().dependencies.insert("missing");
    }
    const auto base = validate_plan(p);
    std::set<PlanViolation::Kind> kinds;
    for (const auto& v : base.violations) kinds.insert(v.kind);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(p.sub_questions.begin(), p.sub_questions.end(), rng);
      const auto again = validate_plan(p);
      std::set<PlanViolation::Kind> kinds2;
      for (const auto& v : again.violations) kinds2.insert(v.kind);
      ASSERT_EQ(base.ok(), again.ok());
      ASSERT_EQ(kinds, kinds2);
      ASSERT_EQ(base.describe(), again.describe());
    }
  }
}

TEST(WaveDecomposition, IndependentThenDependent) {
  auto waves = wave_decomposition(plan_of({sq("a"), sq("b"), sq("c", {"a", "b"})}));
  EXPECT_EQ(waves, (std::vector<std::set<std::string>>{{"a", "b"}, {"c"}}));
}

TEST(WaveDecomposition, Singleton) {
  EXPECT_EQ(wave_decomposition(plan_of({sq("only")})), (std::vector<std::set<std::string>>{{"only"}}));
}

TEST(WaveDecomposition, RejectsInvalidPlans) {
  EXPECT_THROW(wave_decomposition(plan_of({sq("a", {"b"}), sq("b", {"a"})})), PlanError);
}

TEST(WaveDecomposition, MatchesInDegreePeelingOnRandomDags) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 500; ++round) {
    ExecutionPlan p = random_dag(rng, 1 + static_cast<int>(rng() % 20), 0.3);
    auto waves = wave_decomposition(p);
    ASSERT_EQ(waves, peel_layers(p));
    // Every edge crosses from an earlier wave to a later one.
    std::map<std::string, std::size_t> level;
    for (std::size_t w = 0; w < waves.size(); ++w) {
      for (const auto& id : waves[w]) level[id] = w;
    }
    for (const auto& s : p.sub_questions) {
      for (const auto& d : s.dependencies) ASSERT_LT(level[d], level[s.id]);
    }
  }
}

TEST(PlanJson, RoundTripsAndAppliesDefaults) {
  auto p = parse_plan_text(R"({
    "explanation": "two steps",
    "sub_questions": [
      {"id": "a", "question": "Q1", "agent_type": "financial"},
      {"id": "b", "question": "Q2", "agent_type": "web_search", "dependencies": ["a", "a"],
       "priority": 8, "context_from_deps": true, "verification_criteria": "cites a filing"}
    ]})");
  ASSERT_EQ(p.sub_questions.size(), 2u);
  EXPECT_EQ(p.sub_questions[0].priority, kDefaultPriority);
  EXPECT_EQ(p.sub_questions[1].dependencies, (std::set<std::string>{"a"}));
  EXPECT_TRUE(p.sub_questions[1].context_from_deps);
  EXPECT_EQ(p.explanation, "two steps");
  Json j = p;
  EXPECT_EQ(j.get<ExecutionPlan>(), p);
}

TEST(PlanJson, MalformedDocumentsRaiseParseError) {
  EXPECT_THROW(parse_plan_text("{"), ParseError);
  EXPECT_THROW(parse_plan_text(R"({"sub_questions": [{"id": "a", "question": "q", "agent_type": "oracle"}]})"),
               ParseError);
  EXPECT_THROW(parse_plan_text(R"({"sub_questions": "nope"})"), ParseError);
}

TEST(PlanFixtures, ShippedPlansValidateAsDocumented) {
  auto load = [](const char* rel) { return parse_plan_text(dagorch::testing::read_text(rel)); };
  EXPECT_TRUE(validate_plan(load("plans/demo_plan.json")).ok());
  EXPECT_TRUE(has_kind(validate_plan(load("plans/cyclic.json")), PlanViolation::Kind::Cycle));
  EXPECT_TRUE(has_kind(validate_plan(load("plans/priority_out_of_range.json")), PlanViolation::Kind::PriorityOutOfRange));
}
