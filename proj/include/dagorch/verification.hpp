// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dagorch/backends.hpp"
#include "dagorch/plan.hpp"
#include "dagorch/records.hpp"
#include "dagorch/result.hpp"

namespace dagorch {

struct VerificationOutcome {
  std::map<std::string, VerificationRecord> records;
  // Ids whose prior Complete record was carried over without a backend call.
  std::set<std::string> reused;
  std::uint64_t tokens = 0;
  int backend_calls = 0;
};

// Produces one record per result. Prior Complete records are reused as is;
// failure-marked results get a synthetic Incomplete/Retry record without a
// backend call; backend faults degrade to the same synthetic record.
VerificationOutcome verify_results(const ExecutionPlan& plan, const std::map<std::string, AgentResult>& results,
                                   const std::map<std::string, VerificationRecord>& prior, VerifierBackend& backend);

// Fraction of records with status Complete; 0 for an empty map.
double completeness_ratio(const std::map<std::string, VerificationRecord>& records);

// Unweighted mean confidence; 0 for an empty map.
double mean_confidence(const std::map<std::string, VerificationRecord>& records);

// Diagnostic only; stop conditions use completeness_ratio.
double mean_completeness_score(const std::map<std::string, VerificationRecord>& records);

}  // namespace dagorch
