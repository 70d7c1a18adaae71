// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "dagorch/plan.hpp"
#include "dagorch/records.hpp"
#include "dagorch/result.hpp"
#include "dagorch/tools.hpp"

namespace dagorch {

enum class Phase { Plan, Execute, Verify, Replan, Synthesize };

inline constexpr std::array<Phase, 5> kAllPhases = {Phase::Plan, Phase::Execute, Phase::Verify, Phase::Replan,
                                                    Phase::Synthesize};

std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> parse_phase(std::string_view name) noexcept;

// Per-phase token tallies. total() is always the sum of the tallies.
class TokenLedger {
 public:
  void charge(Phase phase, std::uint64_t amount) noexcept {
    tallies_[static_cast<std::size_t>(phase)] += amount;
    total_ += amount;
  }
  std::uint64_t tally(Phase phase) const noexcept { return tallies_[static_cast<std::size_t>(phase)]; }
  std::uint64_t total() const noexcept { return total_; }

  bool operator==(const TokenLedger&) const = default;

 private:
  std::array<std::uint64_t, kAllPhases.size()> tallies_{};
  std::uint64_t total_ = 0;
};

TokenLedger charge_tokens(TokenLedger ledger, Phase phase, std::uint64_t amount);

void to_json(Json& j, const TokenLedger& l);
void from_json(const Json& j, TokenLedger& l);

// ---- Backend contracts. Implementations throw BackendError on failure and
// must tolerate concurrent calls.

struct PlanRequest {
  std::string query;
  std::vector<AgentType> available_agents;
};

struct PlanResponse {
  ExecutionPlan plan;
  std::uint64_t tokens = 0;
};

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  virtual PlanResponse plan(const PlanRequest& request) = 0;
};

struct AgentRequest {
  const SubQuestion& sub_question;
  // Question text, prefixed with dependency context when enabled.
  std::string prompt;
  int attempt = 1;
  ToolSession& tools;
  std::stop_token stop;
};

struct AgentResponse {
  std::string content;
  std::vector<Source> sources;
  std::uint64_t tokens = 0;
  // Latency a scripted backend claims; drives the virtual-time executor.
  std::chrono::milliseconds simulated_latency{0};
};

class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual AgentResponse answer(AgentRequest& request) = 0;
};

struct VerifyRequest {
  const SubQuestion& sub_question;
  const AgentResult& result;
  // Dependency id -> dependency result content.
  std::map<std::string, std::string> dependency_results;
};

struct VerifyResponse {
  VerificationRecord record;
  std::uint64_t tokens = 0;
};

class VerifierBackend {
 public:
  virtual ~VerifierBackend() = default;
  virtual VerifyResponse verify(const VerifyRequest& request) = 0;
};

struct ResultSummary {
  std::string id;
  std::string question;
  VerificationStatus status = VerificationStatus::Incomplete;
  double completeness_score = 0.0;
  std::vector<std::string> missing_aspects;
  std::vector<std::string> contradictions;
};

struct ReplanRequest {
  std::string query;
  const ExecutionPlan& plan;
  std::vector<ResultSummary> complete;
  std::vector<ResultSummary> incomplete;
  int iteration = 0;
  int max_iterations = 0;
  double completeness = 0.0;
};

struct ReplanResponse {
  ReplanDecision decision;
  std::uint64_t tokens = 0;
};

class ReplannerBackend {
 public:
  virtual ~ReplannerBackend() = default;
  virtual ReplanResponse replan(const ReplanRequest& request) = 0;
};

enum class SynthesisStage { Single, Group, Integrate };
std::string_view to_string(SynthesisStage stage) noexcept;

struct SynthesisItem {
  std::string label;
  std::string content;
  std::vector<Source> sources;
};

struct SynthesisRequest {
  SynthesisStage stage = SynthesisStage::Single;
  std::string query;
  std::optional<AgentType> group;
  std::vector<SynthesisItem> items;
  std::string verification_summary;
};

struct SynthesisResponse {
  FinalAnswer answer;
  bool has_confidence = false;
  std::uint64_t tokens = 0;
};

class SynthesizerBackend {
 public:
  virtual ~SynthesizerBackend() = default;
  virtual SynthesisResponse synthesize(const SynthesisRequest& request) = 0;
};

struct BackendRegistry {
  std::shared_ptr<PlannerBackend> planner;
  std::map<AgentType, std::shared_ptr<AgentBackend>> agents;
  std::shared_ptr<VerifierBackend> verifier;
  std::shared_ptr<ReplannerBackend> replanner;
  std::shared_ptr<SynthesizerBackend> synthesizer;
  std::map<AgentType, std::shared_ptr<AgentBackend>> fallback_agents;
  // Tool service reachable from agent executions; may be null.
  std::shared_ptr<ToolInvoker> tools;

  // Agent types used by the plan that have no primary backend.
  std::vector<AgentType> missing_agents(const ExecutionPlan& plan) const;
};

// Calls the primary agent; on failure the fallback (tagging the result
// degraded); on double failure returns a failure-marked result. Never throws
// for backend faults. duration holds the backend-reported simulated latency;
// wall-clock callers overwrite it with the measured time.
AgentResult route_with_fallback(AgentType agent_type, AgentRequest& request, const BackendRegistry& registry);

}  // namespace dagorch
