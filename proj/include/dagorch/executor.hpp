// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <climits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/events.hpp"
#include "dagorch/plan.hpp"
#include "dagorch/result.hpp"
#include "dagorch/tools.hpp"

namespace dagorch {

// SlotRefill admits the next ready sub-question as soon as a slot frees.
// StrictBarrier runs one top-k batch at a time and waits for all of it.
enum class BatchMode { SlotRefill, StrictBarrier };

// Wall runs agents on threads with real timeouts. Virtual calls agents
// inline and schedules their completions by the latency they report,
// which makes scripted runs exactly reproducible.
enum class TimeMode { Wall, Virtual };

inline constexpr int kUnboundedConcurrency = INT_MAX;

struct ExecutorConfig {
  int max_concurrent = 3;
  std::chrono::milliseconds agent_timeout = std::chrono::seconds(600);
  ToolLimits tool_limits;
  BatchMode batch_mode = BatchMode::SlotRefill;
  TimeMode time_mode = TimeMode::Wall;

  // Throws Error unless every count and duration is strictly positive.
  void validate() const;
};

// Sub-questions not in `completed` whose dependencies all are, in plan order.
std::vector<const SubQuestion*> ready_set(const ExecutionPlan& plan, const std::set<std::string>& completed);

// At most k items by descending priority, ties by ascending id.
std::vector<const SubQuestion*> select_batch(std::vector<const SubQuestion*> ready, int k);

// One delimited block per dependency (ascending id), then the question
// verbatim. Throws InternalError if a dependency result is missing.
std::string enrich_with_context(const SubQuestion& sub_question, const std::map<std::string, AgentResult>& dep_results);

// The prompt an agent receives: enriched when context_from_deps is set,
// otherwise the bare question.
std::string agent_prompt(const SubQuestion& sub_question, const std::map<std::string, AgentResult>& results);

struct ExecutionOutcome {
  std::map<std::string, AgentResult> results;
  // Ids admitted together at each scheduling step, in admission order.
  std::vector<std::vector<std::string>> batches;
};

// Runs every id in `pending` once. Ids outside `pending` must already have
// entries in `prior`; those supply dependency context and the attempt
// number (prior attempt + 1) of retried ids. Agent failures and timeouts
// become failure-marked results and still count as completed for
// scheduling. Emits SubQuestionStarted/SubQuestionFinished on `events`.
ExecutionOutcome execute_plan(const ExecutionPlan& plan, const std::set<std::string>& pending,
                              const std::map<std::string, AgentResult>& prior, const BackendRegistry& registry,
                              const ExecutorConfig& config, EventBus& events, int iteration = 0);

}  // namespace dagorch
