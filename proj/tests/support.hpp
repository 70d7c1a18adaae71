// SPDX-License-Identifier: Apache-2.0
// Helpers shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dagorch/backends.hpp"
#include "dagorch/events.hpp"
#include "dagorch/plan.hpp"

namespace dagorch::testing {

#ifndef DAGORCH_DATA_DIR
#error "DAGORCH_DATA_DIR must point at the repository data directory"
#endif

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(DAGORCH_DATA_DIR) / rel; }

inline std::string read_text(const std::string& rel) {
  std::ifstream in(data_path(rel));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class LambdaPlanner final : public PlannerBackend {
 public:
  using Fn = std::function<PlanResponse(const PlanRequest&)>;
  explicit LambdaPlanner(Fn f) : f_(std::move(f)) {}
  PlanResponse plan(const PlanRequest& r) override { return f_(r); }

 private:
  Fn f_;
};

class LambdaAgent final : public AgentBackend {
 public:
  using Fn = std::function<AgentResponse(AgentRequest&)>;
  explicit LambdaAgent(Fn f) : f_(std::move(f)) {}
  AgentResponse answer(AgentRequest& r) override { return f_(r); }

 private:
  Fn f_;
};

class LambdaVerifier final : public VerifierBackend {
 public:
  using Fn = std::function<VerifyResponse(const VerifyRequest&)>;
  explicit LambdaVerifier(Fn f) : f_(std::move(f)) {}
  VerifyResponse verify(const VerifyRequest& r) override { return f_(r); }

 private:
  Fn f_;
};

class LambdaReplanner final : public ReplannerBackend {
 public:
  using Fn = std::function<ReplanResponse(const ReplanRequest&)>;
  explicit LambdaReplanner(Fn f) : f_(std::move(f)) {}
  ReplanResponse replan(const ReplanRequest& r) override { return f_(r); }

 private:
  Fn f_;
};

class LambdaSynthesizer final : public SynthesizerBackend {
 public:
  using Fn = std::function<SynthesisResponse(const SynthesisRequest&)>;
  explicit LambdaSynthesizer(Fn f) : f_(std::move(f)) {}
  SynthesisResponse synthesize(const SynthesisRequest& r) override { return f_(r); }

 private:
  Fn f_;
};

// Agent answering "answer <id>" with the given latency and token count.
inline std::shared_ptr<AgentBackend> echo_agent(std::chrono::milliseconds latency = {}, std::uint64_t tokens = 10) {
  return std::make_shared<LambdaAgent>([latency, tokens](AgentRequest& r) {
    return AgentResponse{"answer " + r.sub_question.id, {{"src", r.sub_question.id, std::nullopt}}, tokens, latency};
  });
}

inline BackendRegistry registry_with_agent(std::shared_ptr<AgentBackend> agent) {
  BackendRegistry reg;
  for (auto t : kAllAgentTypes) reg.agents[t] = agent;
  return reg;
}

inline std::string node_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "n%02d", i);
  return buf;
}

// n nodes; every pair (i < j) becomes an edge j -> i with probability
// `density`, which keeps the graph acyclic. Plan order and priorities are
// shuffled so neither hints at a valid order.
inline ExecutionPlan random_dag(std::mt19937_64& rng, int n, double density) {
  std::bernoulli_distribution edge(density);
  std::uniform_int_distribution<int> prio(kMinPriority, kMaxPriority);
  std::uniform_int_distribution<int> type(0, static_cast<int>(kAllAgentTypes.size()) - 1);
  ExecutionPlan plan;
  for (int j = 0; j < n; ++j) {
    SubQuestion sq;
    sq.id = node_id(j);
    sq.question = "question " + sq.id;
    sq.agent_type = kAllAgentTypes[static_cast<std::size_t>(type(rng))];
    sq.priority = prio(rng);
    for (int i = 0; i < j; ++i) {
      if (edge(rng)) sq.dependencies.insert(node_id(i));
    }
    plan.sub_questions.push_back(std::move(sq));
  }
  std::shuffle(plan.sub_questions.begin(), plan.sub_questions.end(), rng);
  return plan;
}

inline std::vector<RunEvent> of_kind(const std::vector<RunEvent>& events, EventKind kind) {
  std::vector<RunEvent> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out), [kind](const RunEvent& e) { return e.kind == kind; });
  return out;
}

inline std::vector<std::string> phase_sequence(const std::vector<RunEvent>& events) {
  std::vector<std::string> out;
  for (const auto& e : of_kind(events, EventKind::PhaseStarted)) out.push_back(e.payload.at("phase").get<std::string>());
  return out;
}

}  // namespace dagorch::testing
