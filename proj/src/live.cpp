// SPDX-License-Identifier: Apache-2.0
#include "dagorch/live.hpp"

#include "dagorch/error.hpp"
#include "httplib.h"

namespace dagorch {

namespace {

class Endpoint {
 public:
  Endpoint(HostPort target, std::chrono::milliseconds timeout) : target_(std::move(target)), timeout_(timeout) {}

  Json post(const std::string& path, const Json& body, const char* role) const {
    httplib::Client cli(target_.host, target_.port);
    cli.set_connection_timeout(timeout_);
    cli.set_read_timeout(timeout_);
    cli.set_write_timeout(timeout_);
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) {
      const bool slow = res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout;
      throw BackendError(slow ? "timeout" : "transport", std::string(role) + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError("remote", std::string(role) + ": HTTP " + std::to_string(res->status));
    }
    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object()) throw BackendError("malformed", std::string(role) + ": bad JSON reply");
    return reply;
  }

 private:
  HostPort target_;
  std::chrono::milliseconds timeout_;
};

template <typename F>
auto decoded(const char* role, F&& f) {
  try {
    return f();
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("malformed", std::string(role) + ": " + e.what());
  }
}

class LivePlanner final : public PlannerBackend {
 public:
  explicit LivePlanner(Endpoint ep) : ep_(std::move(ep)) {}
  PlanResponse plan(const PlanRequest& request) override {
    std::vector<std::string> agents;
    for (auto t : request.available_agents) agents.emplace_back(to_string(t));
    Json reply = ep_.post("/plan", Json{{"query", request.query}, {"available_agents", agents}}, "planner");
    return decoded("planner", [&] {
      const Json& p = reply.contains("plan") ? reply.at("plan") : reply;
      return PlanResponse{parse_plan(p), reply.value("tokens", std::uint64_t{0})};
    });
  }

 private:
  Endpoint ep_;
};

class LiveAgent final : public AgentBackend {
 public:
  explicit LiveAgent(Endpoint ep) : ep_(std::move(ep)) {}
  AgentResponse answer(AgentRequest& request) override {
    Json reply = ep_.post("/agent",
                          Json{{"sub_question", request.sub_question},
                               {"prompt", request.prompt},
                               {"attempt", request.attempt}},
                          "agent");
    return decoded("agent", [&] {
      return AgentResponse{reply.at("content").get<std::string>(), reply.value("sources", std::vector<Source>{}),
                           reply.value("tokens", std::uint64_t{0}), std::chrono::milliseconds(0)};
    });
  }

 private:
  Endpoint ep_;
};

class LiveVerifier final : public VerifierBackend {
 public:
  explicit LiveVerifier(Endpoint ep) : ep_(std::move(ep)) {}
  VerifyResponse verify(const VerifyRequest& request) override {
    Json reply = ep_.post("/verify",
                          Json{{"sub_question", request.sub_question},
                               {"result", request.result},
                               {"dependency_results", request.dependency_results}},
                          "verifier");
    return decoded("verifier", [&] {
      return VerifyResponse{reply.get<VerificationRecord>(), reply.value("tokens", std::uint64_t{0})};
    });
  }

 private:
  Endpoint ep_;
};

Json summaries(const std::vector<ResultSummary>& list) {
  Json out = Json::array();
  for (const auto& s : list) {
    out.push_back(Json{{"id", s.id},
                       {"question", s.question},
                       {"status", std::string(to_string(s.status))},
                       {"completeness_score", s.completeness_score},
                       {"missing_aspects", s.missing_aspects},
                       {"contradictions", s.contradictions}});
  }
  return out;
}

class LiveReplanner final : public ReplannerBackend {
 public:
  explicit LiveReplanner(Endpoint ep) : ep_(std::move(ep)) {}
  ReplanResponse replan(const ReplanRequest& request) override {
    Json reply = ep_.post("/replan",
                          Json{{"query", request.query},
                               {"plan", request.plan},
                               {"complete", summaries(request.complete)},
                               {"incomplete", summaries(request.incomplete)},
                               {"iteration", request.iteration},
                               {"max_iterations", request.max_iterations},
                               {"completeness", request.completeness}},
                          "replanner");
    return decoded("replanner", [&] {
      return ReplanResponse{reply.get<ReplanDecision>(), reply.value("tokens", std::uint64_t{0})};
    });
  }

 private:
  Endpoint ep_;
};

class LiveSynthesizer final : public SynthesizerBackend {
 public:
  explicit LiveSynthesizer(Endpoint ep) : ep_(std::move(ep)) {}
  SynthesisResponse synthesize(const SynthesisRequest& request) override {
    Json items = Json::array();
    for (const auto& it : request.items) {
      items.push_back(Json{{"label", it.label}, {"content", it.content}, {"sources", it.sources}});
    }
    Json body{{"stage", std::string(to_string(request.stage))},
              {"query", request.query},
              {"group", request.group ? Json(std::string(to_string(*request.group))) : Json(nullptr)},
              {"items", std::move(items)},
              {"verification_summary", request.verification_summary}};
    Json reply = ep_.post("/synthesize", body, "synthesizer");
    return decoded("synthesizer", [&] {
      return SynthesisResponse{reply.get<FinalAnswer>(), reply.contains("confidence"),
                               reply.value("tokens", std::uint64_t{0})};
    });
  }

 private:
  Endpoint ep_;
};

}  // namespace

BackendRegistry make_live_registry(const LiveOptions& options) {
  const Endpoint ep(parse_http_url(options.base_url), options.timeout);
  BackendRegistry reg;
  reg.planner = std::make_shared<LivePlanner>(ep);
  reg.verifier = std::make_shared<LiveVerifier>(ep);
  reg.replanner = std::make_shared<LiveReplanner>(ep);
  reg.synthesizer = std::make_shared<LiveSynthesizer>(ep);
  auto agent = std::make_shared<LiveAgent>(ep);
  for (auto t : kAllAgentTypes) reg.agents[t] = agent;
  if (!options.tool_service_url.empty()) reg.tools = HttpToolInvoker::from_url(options.tool_service_url, options.timeout);
  return reg;
}

}  // namespace dagorch
