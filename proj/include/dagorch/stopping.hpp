// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/plan.hpp"

namespace dagorch {

struct OrchestrationConfig {
  int max_iterations = 3;
  std::uint64_t token_budget = 1'000'000;
  double ready_threshold = 0.8;
  double high_confidence = 0.75;
  double high_confidence_min_complete = 0.5;
  double diminishing_returns = 0.05;
  int max_concurrent = 3;
  std::chrono::milliseconds agent_timeout = std::chrono::seconds(600);
  int max_consecutive_same_tool = 10;
  int max_total_tool_calls = 50;

  // Throws Error naming the first out-of-range field.
  void validate() const;
  bool operator==(const OrchestrationConfig&) const = default;
};

// Keys mirror the field names; agent_timeout is seconds (number) or a
// string such as "600s" / "250ms". Missing keys keep their defaults;
// unknown keys are rejected.
void to_json(Json& j, const OrchestrationConfig& c);
void from_json(const Json& j, OrchestrationConfig& c);
OrchestrationConfig parse_config_text(std::string_view text);

enum class StopOutcome { Continue, ReadyForSynthesis, HighConfidence, DiminishingReturns, TokenBudget, MaxIterations };

std::string_view to_string(StopOutcome o) noexcept;
std::optional<StopOutcome> parse_stop_outcome(std::string_view s) noexcept;

struct StopDecision {
  StopOutcome outcome = StopOutcome::Continue;
  std::string detail;

  bool stops() const noexcept { return outcome != StopOutcome::Continue; }
  bool operator==(const StopDecision&) const = default;
};

void to_json(Json& j, const StopDecision& d);
void from_json(const Json& j, StopDecision& d);

// The measurements stop conditions look at.
struct StopInputs {
  std::uint64_t total_tokens = 0;
  int iteration = 0;
  double completeness = 0.0;
  double confidence = 0.0;
  std::vector<double> history;
};

struct OrchestrationState;

// Fixed precedence, first match wins: TokenBudget, MaxIterations,
// ReadyForSynthesis, HighConfidence, DiminishingReturns. Quality thresholds
// are inclusive; diminishing returns is a strict "<".
StopDecision evaluate_stop(const StopInputs& inputs, const OrchestrationConfig& config);
StopDecision evaluate_stop(const OrchestrationState& state, const OrchestrationConfig& config);

// TokenBudget decision when the budget is exhausted, else nullopt. Usable
// before any verification has happened.
std::optional<StopDecision> budget_exhausted(std::uint64_t total_tokens, const OrchestrationConfig& config);

}  // namespace dagorch
