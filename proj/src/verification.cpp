// SPDX-License-Identifier: Apache-2.0
#include "dagorch/verification.hpp"

#include "dagorch/error.hpp"

namespace dagorch {

VerificationOutcome verify_results(const ExecutionPlan& plan, const std::map<std::string, AgentResult>& results,
                                   const std::map<std::string, VerificationRecord>& prior, VerifierBackend& backend) {
  VerificationOutcome out;
  for (const auto& [id, result] : results) {
    if (auto it = prior.find(id); it != prior.end() && it->second.complete()) {
      out.records[id] = it->second;
      out.reused.insert(id);
      continue;
    }
    const SubQuestion* sq = plan.find(id);
    if (!sq) throw InternalError("result for unknown sub-question " + id);
    if (result.failed()) {
      out.records[id] = synthetic_incomplete(id, result.timed_out() ? "execution timed out" : "execution failed");
      continue;
    }

    VerifyRequest request{*sq, result, {}};
    for (const auto& d : sq->dependencies) {
      if (auto dep = results.find(d); dep != results.end()) request.dependency_results[d] = dep->second.content;
    }
    try {
      ++out.backend_calls;
      VerifyResponse response = backend.verify(request);
      VerificationRecord record = normalized(std::move(response.record));
      record.sub_question_id = id;
      out.records[id] = std::move(record);
      out.tokens += response.tokens;
    } catch (const std::exception& e) {
      out.records[id] = synthetic_incomplete(id, std::string("verifier unavailable: ") + e.what());
    }
  }
  return out;
}

double completeness_ratio(const std::map<std::string, VerificationRecord>& records) {
  if (records.empty()) return 0.0;
  std::size_t complete = 0;
  for (const auto& [_, r] : records) complete += r.complete() ? 1 : 0;
  return static_cast<double>(complete) / static_cast<double>(records.size());
}

double mean_confidence(const std::map<std::string, VerificationRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, r] : records) sum += r.confidence;
  return sum / static_cast<double>(records.size());
}

double mean_completeness_score(const std::map<std::string, VerificationRecord>& records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, r] : records) sum += r.completeness_score;
  return sum / static_cast<double>(records.size());
}

}  // namespace dagorch
