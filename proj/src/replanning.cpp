// SPDX-License-Identifier: Apache-2.0
#include "dagorch/replanning.hpp"

#include <algorithm>
#include <set>

#include "dagorch/error.hpp"
#include "dagorch/verification.hpp"

namespace dagorch {

std::vector<std::string> mandatory_retries(const std::map<std::string, VerificationRecord>& records) {
  std::vector<std::string> out;
  for (const auto& [id, r] : records) {
    if (r.status == VerificationStatus::Incomplete ||
        (!r.complete() && r.recommendation == Recommendation::Retry)) {
      out.push_back(id);
    }
  }
  return out;
}

namespace {

// Appendix-style decision bands. The "> 0.8" band is deliberately separate
// from the configurable ready threshold used by stop conditions.
constexpr double kDoneAbove = 0.8;
constexpr double kNewQuestionsFrom = 0.5;

ResultSummary summarize(const SubQuestion& sq, const VerificationRecord& r) {
  return {sq.id, sq.question, r.status, r.completeness_score, r.missing_aspects, r.contradictions};
}

std::string fresh_id(const std::string& wanted, const std::set<std::string>& taken) {
  if (!wanted.empty() && !taken.contains(wanted)) return wanted;
  const std::string stem = wanted.empty() ? "sq_new" : wanted;
  for (int n = 2;; ++n) {
    std::string candidate = stem + "_" + std::to_string(n);
    if (!taken.contains(candidate)) return candidate;
  }
}

// Keeps the new sub-questions that extend `plan` into a valid plan, in order.
std::vector<SubQuestion> admissible(const ExecutionPlan& plan, std::vector<SubQuestion> proposed,
                                    std::vector<std::string>& repairs) {
  ExecutionPlan merged = plan;
  merged.sub_questions.insert(merged.sub_questions.end(), proposed.begin(), proposed.end());
  if (validate_plan(merged).ok()) return proposed;

  std::vector<SubQuestion> kept;
  ExecutionPlan growing = plan;
  for (auto& sq : proposed) {
    growing.sub_questions.push_back(sq);
    if (validate_plan(growing).ok()) {
      kept.push_back(std::move(sq));
    } else {
      growing.sub_questions.pop_back();
      repairs.push_back("dropped new sub-question " + sq.id + " (would make the plan invalid)");
    }
  }
  return kept;
}

}  // namespace

ReplanOutcome decide_replan(const OrchestrationState& state, const std::map<std::string, VerificationRecord>& records,
                            const OrchestrationConfig& config, ReplannerBackend& backend, std::string_view query) {
  ReplanOutcome out;
  const double ratio = completeness_ratio(records);

  if (state.iteration >= config.max_iterations) {
    out.decision.done = true;
    out.decision.explanation = "iteration limit reached";
    return out;
  }
  if (ratio > kDoneAbove) {
    out.decision.done = true;
    out.decision.explanation = "completeness above 0.8; proceed to synthesis";
    return out;
  }

  ReplanRequest request{std::string(query), state.plan, {}, {}, state.iteration, config.max_iterations, ratio};
  for (const auto& [id, r] : records) {
    const SubQuestion* sq = state.plan.find(id);
    if (!sq) continue;
    (r.complete() ? request.complete : request.incomplete).push_back(summarize(*sq, r));
  }

  ReplanDecision proposed;
  try {
    ReplanResponse response = backend.replan(request);
    proposed = std::move(response.decision);
    out.tokens = response.tokens;
  } catch (const std::exception& e) {
    out.backend_failed = true;
    out.repairs.push_back(std::string("replanner unavailable: ") + e.what());
    proposed = ReplanDecision{};
    proposed.explanation = "fallback: retry every incomplete sub-question";
  }

  // Retries: known, not Complete, deduplicated, plus every mandatory id.
  std::set<std::string> retry;
  for (const auto& id : proposed.retry_sub_questions) {
    if (!state.plan.contains(id)) {
      out.repairs.push_back("stripped retry of unknown id " + id);
    } else if (auto it = records.find(id); it != records.end() && it->second.complete()) {
      out.repairs.push_back("stripped retry of complete id " + id);
    } else {
      retry.insert(id);
    }
  }
  for (const auto& id : mandatory_retries(records)) {
    if (retry.insert(id).second && !out.backend_failed) out.repairs.push_back("added omitted retry " + id);
  }

  std::vector<SubQuestion> fresh;
  if (!proposed.new_sub_questions.empty()) {
    const bool contradictions = std::any_of(records.begin(), records.end(),
                                            [](const auto& kv) { return !kv.second.contradictions.empty(); });
    const bool in_band = ratio >= kNewQuestionsFrom && ratio <= kDoneAbove;
    if (!in_band && !contradictions) {
      out.repairs.push_back("dropped new sub-questions (completeness outside [0.5, 0.8], no contradictions)");
    } else {
      std::set<std::string> taken = state.plan.ids();
      for (auto sq : proposed.new_sub_questions) {
        std::string id = fresh_id(sq.id, taken);
        if (id != sq.id) out.repairs.push_back("renamed new sub-question " + sq.id + " to " + id);
        sq.id = id;
        taken.insert(id);
        fresh.push_back(std::move(sq));
      }
      fresh = admissible(state.plan, std::move(fresh), out.repairs);
    }
  }

  out.decision.retry_sub_questions.assign(retry.begin(), retry.end());
  out.decision.new_sub_questions = std::move(fresh);
  out.decision.explanation = proposed.explanation;
  out.decision.done = !out.decision.has_actions();
  return out;
}

std::string attempt_header(int attempt) { return "=== attempt " + std::to_string(attempt) + " ==="; }

namespace {
// Failed attempts contribute no text, so a chain of failures stays
// failure-marked (empty content).
std::string attempt_block(int attempt, const std::string& content) {
  if (content.empty()) return {};
  std::string out = attempt_header(attempt) + "\n" + content;
  if (out.back() != '\n') out += '\n';
  return out;
}
}  // namespace

AgentResult merge_results(const AgentResult& previous, const AgentResult& retry) {
  if (previous.sub_question_id != retry.sub_question_id) {
    throw InternalError("cannot merge results of " + previous.sub_question_id + " and " + retry.sub_question_id);
  }
  if (retry.attempt <= previous.attempt) {
    throw InternalError("retry attempt " + std::to_string(retry.attempt) + " does not follow attempt " +
                        std::to_string(previous.attempt) + " of " + previous.sub_question_id);
  }
  AgentResult merged;
  merged.sub_question_id = previous.sub_question_id;
  merged.content = previous.merged_from_attempts.empty() ? attempt_block(previous.attempt, previous.content)
                                                         : previous.content;
  merged.content += attempt_block(retry.attempt, retry.content);
  merged.sources = previous.sources;
  append_unique(merged.sources, retry.sources);
  merged.tokens_used = previous.tokens_used + retry.tokens_used;
  merged.tool_trace = previous.tool_trace;
  merged.tool_trace.insert(merged.tool_trace.end(), retry.tool_trace.begin(), retry.tool_trace.end());
  merged.duration = previous.duration + retry.duration;
  merged.attempt = retry.attempt;
  merged.merged_from_attempts = previous.merged_from_attempts;
  merged.merged_from_attempts.push_back(previous.attempt);
  return merged;
}

}  // namespace dagorch
