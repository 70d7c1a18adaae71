// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/events.hpp"
#include "dagorch/executor.hpp"
#include "dagorch/state.hpp"
#include "dagorch/stopping.hpp"

namespace dagorch {

// Full runs the adaptive loop. The two baselines are degenerate
// configurations of the same engine: a fixed Rag -> WebSearch -> Financial
// -> Analysis chain, or one Reasoning sub-question. Neither calls the
// planner or replanner; both get one assessment pass from the verifier so
// their completeness is measured the same way.
enum class RunMode { Full, StaticPipeline, SingleAgent };

std::string_view to_string(RunMode mode) noexcept;
// Accepts "full", "static", "single".
std::optional<RunMode> parse_run_mode(std::string_view name) noexcept;

ExecutionPlan static_pipeline_plan(std::string_view query);
ExecutionPlan single_agent_plan(std::string_view query);

struct RunOptions {
  RunMode mode = RunMode::Full;
  TimeMode time_mode = TimeMode::Virtual;
  BatchMode batch_mode = BatchMode::SlotRefill;
};

struct RunReport {
  bool succeeded = false;
  std::string error;
  FinalAnswer answer;
  OrchestrationState state;
  std::vector<RunEvent> events;
  // render_report(events)
  std::string text;
};

// Drives Plan -> Execute -> Verify -> (stop ? Synthesize : Replan -> Execute
// ...). Planner failures, invalid plans, unregistered agent types and a
// failed final synthesis end the run with RunFinished{status: "failed"};
// every other backend fault degrades inside its phase. Virtual time mode
// expects the bus to carry a simulated clock.
RunReport run(std::string_view query, const OrchestrationConfig& config, const BackendRegistry& registry,
              EventBus& events, const RunOptions& options = {});

// Human-readable report derived from the event log alone, so a replayed
// log renders the same bytes as the original run.
std::string render_report(const std::vector<RunEvent>& events);

// plan.json, state.json, events.log and report.txt.
void write_run_dir(const std::filesystem::path& dir, const RunReport& report);

struct Replay {
  std::vector<RunEvent> events;
  std::string report;
};

// Throws NotFoundError when the directory holds no event log and
// EventLogError for a damaged one.
Replay replay_run_dir(const std::filesystem::path& dir);

}  // namespace dagorch
