// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/plan.hpp"
#include "dagorch/records.hpp"
#include "dagorch/result.hpp"

namespace dagorch {

inline constexpr std::size_t kHierarchicalCharThreshold = 15'000;
inline constexpr std::size_t kHierarchicalResultThreshold = 10;

// True when result content exceeds 15,000 characters in total or there are
// at least 10 results. Only content counts toward the character total.
bool needs_hierarchical(const std::map<std::string, AgentResult>& results);

// Partition by the owning sub-question's agent type; groups iterate in
// AgentType order and keep plan order inside. Throws InternalError for a
// result whose id is not in the plan.
std::map<AgentType, std::vector<AgentResult>> group_by_agent_type(const ExecutionPlan& plan,
                                                                  const std::map<std::string, AgentResult>& results);

struct SynthesisOutcome {
  FinalAnswer answer;
  bool hierarchical = false;
  int backend_calls = 0;
  // Groups whose summary had to be machine-built after a backend fault.
  std::vector<AgentType> fallback_groups;
  std::uint64_t tokens = 0;
};

// Single pass over all results, or one call per agent-type group plus an
// integration call. The answer is post-processed so that sources are the
// deduplicated union over every result, citations outside that set are
// removed, findings without citations are dropped, and every id whose
// record is not Complete contributes a gap. Confidence falls back to the
// records' mean confidence when the backend omits it. A backend fault at
// the integration (or single) stage propagates as BackendError.
SynthesisOutcome synthesize(std::string_view query, const ExecutionPlan& plan,
                            const std::map<std::string, AgentResult>& results,
                            const std::map<std::string, VerificationRecord>& records, SynthesizerBackend& backend);

// Canonical text rendering of a final answer (sections, numbered findings
// with citations, sources, gaps).
std::string render_answer(const FinalAnswer& answer);

}  // namespace dagorch
