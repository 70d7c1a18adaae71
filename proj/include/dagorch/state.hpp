// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/plan.hpp"
#include "dagorch/records.hpp"
#include "dagorch/result.hpp"
#include "dagorch/stopping.hpp"

namespace dagorch {

// Everything the coordinator knows about one run. iteration counts
// replan-triggered re-executions (the initial pass is iteration 0).
struct OrchestrationState {
  int iteration = 0;
  ExecutionPlan plan;
  std::map<std::string, AgentResult> results;
  std::map<std::string, VerificationRecord> records;
  std::vector<double> completeness_history;
  TokenLedger ledger;
  std::optional<StopDecision> stop;

  bool operator==(const OrchestrationState&) const = default;
};

void to_json(Json& j, const OrchestrationState& s);
void from_json(const Json& j, OrchestrationState& s);

}  // namespace dagorch
