// SPDX-License-Identifier: Apache-2.0
#include "dagorch/backends.hpp"

#include <algorithm>

#include "dagorch/error.hpp"

namespace dagorch {

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::Plan: return "plan";
    case Phase::Execute: return "execute";
    case Phase::Verify: return "verify";
    case Phase::Replan: return "replan";
    case Phase::Synthesize: return "synthesize";
  }
  return "unknown";
}

std::optional<Phase> parse_phase(std::string_view name) noexcept {
  for (Phase p : kAllPhases) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(SynthesisStage stage) noexcept {
  switch (stage) {
    case SynthesisStage::Single: return "single";
    case SynthesisStage::Group: return "group";
    case SynthesisStage::Integrate: return "integrate";
  }
  return "single";
}

TokenLedger charge_tokens(TokenLedger ledger, Phase phase, std::uint64_t amount) {
  ledger.charge(phase, amount);
  return ledger;
}

void to_json(Json& j, const TokenLedger& l) {
  j = Json::object();
  for (Phase p : kAllPhases) j[std::string(to_string(p))] = l.tally(p);
  j["total"] = l.total();
}

void from_json(const Json& j, TokenLedger& l) {
  l = TokenLedger{};
  for (Phase p : kAllPhases) l.charge(p, j.value(std::string(to_string(p)), std::uint64_t{0}));
  if (j.contains("total") && j.at("total").get<std::uint64_t>() != l.total()) {
    throw CorruptRecordError("token ledger total does not equal the sum of its phases");
  }
}

std::vector<AgentType> BackendRegistry::missing_agents(const ExecutionPlan& plan) const {
  std::vector<AgentType> out;
  for (const auto& sq : plan.sub_questions) {
    auto it = agents.find(sq.agent_type);
    if ((it == agents.end() || !it->second) &&
        std::find(out.begin(), out.end(), sq.agent_type) == out.end()) {
      out.push_back(sq.agent_type);
    }
  }
  return out;
}

namespace {

std::shared_ptr<AgentBackend> lookup(const std::map<AgentType, std::shared_ptr<AgentBackend>>& m, AgentType t) {
  auto it = m.find(t);
  return it == m.end() ? nullptr : it->second;
}

AgentResult to_result(const AgentRequest& request, AgentResponse&& response) {
  AgentResult r;
  r.sub_question_id = request.sub_question.id;
  r.content = std::move(response.content);
  r.sources = std::move(response.sources);
  r.tokens_used = response.tokens;
  r.attempt = request.attempt;
  r.duration = response.simulated_latency;
  return r;
}

// Runs one backend; returns the failure tag instead of throwing.
std::optional<std::string> try_answer(AgentBackend& backend, AgentRequest& request, AgentResponse& out) {
  try {
    out = backend.answer(request);
    return std::nullopt;
  } catch (const BackendError& e) {
    return e.tag();
  } catch (const std::exception&) {
    return std::string("exception");
  }
}

}  // namespace

AgentResult route_with_fallback(AgentType agent_type, AgentRequest& request, const BackendRegistry& registry) {
  auto primary = lookup(registry.agents, agent_type);
  if (!primary) {
    throw InternalError("no agent registered for " + std::string(to_string(agent_type)));
  }
  AgentResponse response;
  auto failure = try_answer(*primary, request, response);
  if (!failure) {
    AgentResult r = to_result(request, std::move(response));
    r.tool_trace = request.tools.take_trace();
    return r;
  }

  request.tools.note(trace::kFallback, "primary:" + *failure);
  if (auto fallback = lookup(registry.fallback_agents, agent_type); fallback && !request.stop.stop_requested()) {
    response = AgentResponse{};
    auto second = try_answer(*fallback, request, response);
    if (!second) {
      AgentResult r = to_result(request, std::move(response));
      request.tools.note(trace::kFallback, trace::kDegraded);
      r.tool_trace = request.tools.take_trace();
      return r;
    }
    failure = *second;
  }
  return failure_result(request.sub_question.id, request.attempt, std::string(trace::kFailed) + ":" + *failure,
                        request.tools.take_trace());
}

}  // namespace dagorch
