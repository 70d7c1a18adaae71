// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/records.hpp"
#include "dagorch/result.hpp"
#include "dagorch/state.hpp"
#include "dagorch/stopping.hpp"

namespace dagorch {

struct ReplanOutcome {
  ReplanDecision decision;
  std::uint64_t tokens = 0;
  bool backend_failed = false;
  // Corrections applied to the backend's proposal, for the event log.
  std::vector<std::string> repairs;
};

// Ids that must be retried: status Incomplete, or recommendation Retry on a
// record that is not Complete. Sorted.
std::vector<std::string> mandatory_retries(const std::map<std::string, VerificationRecord>& records);

// Asks the backend for corrective actions and then enforces the decision
// rules on whatever it returned:
//  - iteration >= max_iterations, or completeness > 0.8: done, no actions;
//  - every mandatory retry id is present (added if omitted);
//  - retries of unknown or Complete ids are stripped;
//  - new sub-questions are kept only when completeness is in [0.5, 0.8] or
//    some record reports contradictions; colliding ids get a numeric suffix
//    and missing priorities default to 5;
//  - done is true exactly when no action remains.
// A backend fault yields the deterministic fallback: mandatory retries only.
ReplanOutcome decide_replan(const OrchestrationState& state, const std::map<std::string, VerificationRecord>& records,
                            const OrchestrationConfig& config, ReplannerBackend& backend, std::string_view query = {});

// Folds a retry attempt into the preserved earlier result. Content keeps
// every attempt under "=== attempt N ===" headers; sources are a
// first-seen union; tokens add up; lineage records the earlier attempts.
// Throws InternalError on mismatched ids or a non-increasing attempt.
AgentResult merge_results(const AgentResult& previous, const AgentResult& retry);

// Header line used for attempt n inside merged content.
std::string attempt_header(int attempt);

}  // namespace dagorch
