// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/plan.hpp"
#include "dagorch/records.hpp"

namespace dagorch {

// One scripted agent reply. An unset latency is drawn deterministically
// from the scenario seed, the sub-question id and the attempt number.
struct ScriptedAttempt {
  std::string content;
  std::vector<Source> sources;
  std::uint64_t tokens = 0;
  std::optional<std::chrono::milliseconds> latency;
  // Non-empty: the backend raises BackendError with this tag.
  std::string fail;
  // Tool calls issued, in order, before answering.
  std::vector<std::string> tools;
};

// Agent script selection, in precedence order: `match` equal to the
// sub-question id, then `match` as a substring of the question text, then
// the "*" default for the agent type.
struct AgentScript {
  AgentType agent_type = AgentType::Rag;
  std::string match;
  std::vector<ScriptedAttempt> attempts;  // attempt n > size repeats the last
};

// First entry whose `match` occurs in the result content wins; "*" matches
// anything.
struct VerifierScript {
  std::string match;
  VerificationStatus status = VerificationStatus::Incomplete;
  double score = 0.0;
  double confidence = 0.0;
  Recommendation recommendation = Recommendation::Retry;
  std::vector<std::string> missing_aspects;
  std::vector<std::string> contradictions;
  std::optional<std::uint64_t> tokens;
  bool fail = false;
};

// Overrides the default replanner reply for one iteration.
struct ReplannerScript {
  int iteration = 0;
  std::vector<std::string> retry;
  std::vector<SubQuestion> new_sub_questions;
  std::string explanation;
  bool done = false;
  bool fail = false;
};

// Token amounts charged per backend call (scenario-declared, not measured).
struct ScenarioCosts {
  std::uint64_t plan = 0;
  std::uint64_t verify = 0;
  std::uint64_t replan = 0;
  std::uint64_t synthesize = 0;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::string query;
  ExecutionPlan plan;
  bool planner_fails = false;
  ScenarioCosts costs;
  std::vector<AgentScript> agents;
  std::vector<AgentScript> fallback_agents;
  std::vector<VerifierScript> verifier;
  std::vector<ReplannerScript> replanner;
  // Group agent types whose group-stage synthesis call fails.
  std::vector<AgentType> synthesizer_failing_groups;
  bool synthesizer_fails = false;
  // Names of in-process echo tools available to scripted agents.
  std::vector<std::string> tools = {"search", "fetch"};
  // Optional http://host:port of a tool service used instead.
  std::string tool_service;
  // Scripted agents really sleep for their latency (wall-clock runs).
  bool realtime = false;
};

// Throws ParseError naming the offending field.
Scenario parse_scenario(const Json& doc);
Scenario parse_scenario_text(std::string_view text);
Scenario load_scenario(const std::string& path);

// Scripted implementations of every backend role, all immutable after
// construction and safe to call concurrently.
BackendRegistry make_scripted_registry(std::shared_ptr<const Scenario> scenario);

// The latency a scripted attempt reports.
std::chrono::milliseconds scripted_latency(const Scenario& scenario, const ScriptedAttempt& attempt,
                                           const std::string& sub_question_id, int attempt_number);

}  // namespace dagorch
