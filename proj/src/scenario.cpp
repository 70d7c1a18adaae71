// SPDX-License-Identifier: Apache-2.0
#include "dagorch/scenario.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>

#include "dagorch/error.hpp"
#include "dagorch/tools.hpp"

namespace dagorch {

namespace {

constexpr std::int64_t kMinDrawnLatencyMs = 50;
constexpr std::int64_t kDrawnLatencySpanMs = 200;

AgentType agent_type_field(const Json& j, const char* where) {
  auto name = j.at("agent_type").get<std::string>();
  auto t = parse_agent_type(name);
  if (!t) throw ParseError(std::string(where) + ": unknown agent_type '" + name + "'");
  return *t;
}

ScriptedAttempt parse_attempt(const Json& j) {
  ScriptedAttempt a;
  a.content = j.value("content", std::string{});
  a.sources = j.value("sources", std::vector<Source>{});
  a.tokens = j.value("tokens", std::uint64_t{0});
  if (j.contains("latency_ms")) a.latency = std::chrono::milliseconds(j.at("latency_ms").get<std::int64_t>());
  if (j.contains("fail")) {
    const Json& f = j.at("fail");
    if (f.is_boolean()) {
      a.fail = f.get<bool>() ? "scripted_failure" : "";
    } else {
      a.fail = f.get<std::string>();
    }
  }
  a.tools = j.value("tools", std::vector<std::string>{});
  return a;
}

std::vector<AgentScript> parse_agents(const Json& list, const char* where) {
  std::vector<AgentScript> out;
  for (const auto& j : list) {
    AgentScript s;
    s.agent_type = agent_type_field(j, where);
    s.match = j.value("match", std::string("*"));
    for (const auto& a : j.at("attempts")) s.attempts.push_back(parse_attempt(a));
    if (s.attempts.empty()) throw ParseError(std::string(where) + ": entry '" + s.match + "' has no attempts");
    out.push_back(std::move(s));
  }
  return out;
}

VerifierScript parse_verifier(const Json& j) {
  VerifierScript v;
  v.match = j.value("match", std::string("*"));
  auto status = parse_status(j.value("status", std::string("incomplete")));
  if (!status) throw ParseError("verifier entry '" + v.match + "': bad status");
  v.status = *status;
  v.score = j.value("score", 0.0);
  v.confidence = j.value("confidence", 0.0);
  auto rec = parse_recommendation(j.value("recommendation", std::string(v.status == VerificationStatus::Complete ? "accept" : "retry")));
  if (!rec) throw ParseError("verifier entry '" + v.match + "': bad recommendation");
  v.recommendation = *rec;
  v.missing_aspects = j.value("missing_aspects", std::vector<std::string>{});
  v.contradictions = j.value("contradictions", std::vector<std::string>{});
  if (j.contains("tokens")) v.tokens = j.at("tokens").get<std::uint64_t>();
  v.fail = j.value("fail", false);
  return v;
}

ReplannerScript parse_replanner(const Json& j) {
  ReplannerScript r;
  r.iteration = j.at("iteration").get<int>();
  r.retry = j.value("retry_sub_questions", std::vector<std::string>{});
  if (j.contains("new_sub_questions")) {
    for (const auto& sq : j.at("new_sub_questions")) r.new_sub_questions.push_back(sq.get<SubQuestion>());
  }
  r.explanation = j.value("explanation", std::string{});
  r.done = j.value("done", false);
  r.fail = j.value("fail", false);
  return r;
}

std::uint64_t mix(std::uint64_t seed, std::string_view id, int attempt) {
  std::uint64_t h = 14695981039346656037ULL ^ seed;
  for (unsigned char c : id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  h ^= static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL;
  // splitmix64 finalizer
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
  return h ^ (h >> 31);
}

}  // namespace

Scenario parse_scenario(const Json& doc) {
  if (!doc.is_object()) throw ParseError("scenario must be a JSON object");
  Scenario s;
  try {
    s.seed = doc.value("seed", std::uint64_t{0});
    s.query = doc.value("query", std::string{});
    if (doc.contains("plan")) s.plan = parse_plan(doc.at("plan"));
    s.planner_fails = doc.value("planner_fails", false);
    if (doc.contains("costs")) {
      const Json& c = doc.at("costs");
      s.costs.plan = c.value("plan", std::uint64_t{0});
      s.costs.verify = c.value("verify", std::uint64_t{0});
      s.costs.replan = c.value("replan", std::uint64_t{0});
      s.costs.synthesize = c.value("synthesize", std::uint64_t{0});
    }
    if (doc.contains("agents")) s.agents = parse_agents(doc.at("agents"), "agents");
    if (doc.contains("fallback_agents")) s.fallback_agents = parse_agents(doc.at("fallback_agents"), "fallback_agents");
    if (doc.contains("verifier")) {
      for (const auto& v : doc.at("verifier")) s.verifier.push_back(parse_verifier(v));
    }
    if (doc.contains("replanner")) {
      for (const auto& r : doc.at("replanner")) s.replanner.push_back(parse_replanner(r));
    }
    if (doc.contains("synthesizer")) {
      const Json& syn = doc.at("synthesizer");
      s.synthesizer_fails = syn.value("fail", false);
      for (const auto& g : syn.value("fail_groups", std::vector<std::string>{})) {
        auto t = parse_agent_type(g);
        if (!t) throw ParseError("synthesizer.fail_groups: unknown agent type '" + g + "'");
        s.synthesizer_failing_groups.push_back(*t);
      }
    }
    if (doc.contains("tools")) s.tools = doc.at("tools").get<std::vector<std::string>>();
    s.tool_service = doc.value("tool_service", std::string{});
    s.realtime = doc.value("realtime", false);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario parse_scenario_text(std::string_view text) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("scenario is not valid JSON");
  return parse_scenario(doc);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

std::chrono::milliseconds scripted_latency(const Scenario& scenario, const ScriptedAttempt& attempt,
                                           const std::string& sub_question_id, int attempt_number) {
  if (attempt.latency) return *attempt.latency;
  auto r = mix(scenario.seed, sub_question_id, attempt_number);
  return std::chrono::milliseconds(kMinDrawnLatencyMs + static_cast<std::int64_t>(r % (kDrawnLatencySpanMs + 1)));
}

namespace {

class ScriptedPlanner final : public PlannerBackend {
 public:
  explicit ScriptedPlanner(std::shared_ptr<const Scenario> s) : s_(std::move(s)) {}
  PlanResponse plan(const PlanRequest&) override {
    if (s_->planner_fails) throw BackendError("planner", "scripted planner failure");
    return {s_->plan, s_->costs.plan};
  }

 private:
  std::shared_ptr<const Scenario> s_;
};

class ScriptedAgent final : public AgentBackend {
 public:
  ScriptedAgent(std::shared_ptr<const Scenario> s, AgentType type, const std::vector<AgentScript>* scripts)
      : s_(std::move(s)), type_(type), scripts_(scripts) {}

  AgentResponse answer(AgentRequest& request) override {
    const AgentScript* script = select(request.sub_question);
    if (!script) {
      throw BackendError("unscripted", "no script for " + request.sub_question.id + " (" +
                                           std::string(to_string(type_)) + ")");
    }
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(request.attempt, 1)) - 1,
                                           script->attempts.size() - 1);
    const ScriptedAttempt& a = script->attempts[idx];
    for (const auto& tool : a.tools) request.tools.call(tool, Json{{"query", request.sub_question.question}});

    auto latency = scripted_latency(*s_, a, request.sub_question.id, request.attempt);
    if (s_->realtime) wait(latency, request.stop);
    if (!a.fail.empty()) throw BackendError(a.fail, "scripted failure for " + request.sub_question.id);
    return {a.content, a.sources, a.tokens, latency};
  }

 private:
  const AgentScript* select(const SubQuestion& sq) const {
    const AgentScript* by_text = nullptr;
    const AgentScript* fallback = nullptr;
    for (const auto& s : *scripts_) {
      if (s.agent_type != type_) continue;
      if (s.match == sq.id) return &s;
      if (s.match == "*") {
        if (!fallback) fallback = &s;
      } else if (!by_text && !s.match.empty() && sq.question.find(s.match) != std::string::npos) {
        by_text = &s;
      }
    }
    return by_text ? by_text : fallback;
  }

  static void wait(std::chrono::milliseconds d, std::stop_token stop) {
    std::mutex mu;
    std::condition_variable_any cv;
    std::unique_lock lock(mu);
    if (cv.wait_for(lock, stop, d, [] { return false; }) || stop.stop_requested()) {
      throw BackendError("cancelled", "execution cancelled");
    }
  }

  std::shared_ptr<const Scenario> s_;
  AgentType type_;
  const std::vector<AgentScript>* scripts_;
};

class ScriptedVerifier final : public VerifierBackend {
 public:
  explicit ScriptedVerifier(std::shared_ptr<const Scenario> s) : s_(std::move(s)) {}

  VerifyResponse verify(const VerifyRequest& request) override {
    for (const auto& v : s_->verifier) {
      if (v.match != "*" && request.result.content.find(v.match) == std::string::npos) continue;
      if (v.fail) throw BackendError("verifier", "scripted verifier failure");
      VerificationRecord r;
      r.sub_question_id = request.sub_question.id;
      r.status = v.status;
      r.completeness_score = v.score;
      r.confidence = v.confidence;
      r.recommendation = v.recommendation;
      r.missing_aspects = v.missing_aspects;
      r.contradictions = v.contradictions;
      return {r, v.tokens.value_or(s_->costs.verify)};
    }
    throw BackendError("unscripted", "no verifier script matches " + request.sub_question.id);
  }

 private:
  std::shared_ptr<const Scenario> s_;
};

class ScriptedReplanner final : public ReplannerBackend {
 public:
  explicit ScriptedReplanner(std::shared_ptr<const Scenario> s) : s_(std::move(s)) {}

  ReplanResponse replan(const ReplanRequest& request) override {
    for (const auto& r : s_->replanner) {
      if (r.iteration != request.iteration) continue;
      if (r.fail) throw BackendError("replanner", "scripted replanner failure");
      return {ReplanDecision{r.retry, r.new_sub_questions, r.explanation, r.done}, s_->costs.replan};
    }
    ReplanDecision d;
    for (const auto& s : request.incomplete) {
      if (s.status == VerificationStatus::Incomplete) d.retry_sub_questions.push_back(s.id);
    }
    d.explanation = d.retry_sub_questions.empty() ? "no incomplete sub-questions"
                                                  : "retry incomplete sub-questions";
    return {d, s_->costs.replan};
  }

 private:
  std::shared_ptr<const Scenario> s_;
};

// Last non-blank content line, without attempt headers or the [[status]]
// markers scenarios use to steer the scripted verifier.
std::string headline(const std::string& content) {
  static const std::regex marker(R"(\s*\[\[[a-z_]+\]\])");
  std::istringstream in(content);
  std::string line, last;
  while (std::getline(in, line)) {
    line = std::regex_replace(line, marker, "");
    if (line.empty() || line.starts_with("=== attempt ")) continue;
    last = line;
  }
  constexpr std::size_t kMax = 160;
  if (last.size() > kMax) last = last.substr(0, kMax) + "...";
  return last;
}

class ScriptedSynthesizer final : public SynthesizerBackend {
 public:
  explicit ScriptedSynthesizer(std::shared_ptr<const Scenario> s) : s_(std::move(s)) {}

  SynthesisResponse synthesize(const SynthesisRequest& request) override {
    if (request.stage == SynthesisStage::Group && request.group &&
        std::find(s_->synthesizer_failing_groups.begin(), s_->synthesizer_failing_groups.end(), *request.group) !=
            s_->synthesizer_failing_groups.end()) {
      throw BackendError("synthesis", "scripted group failure");
    }
    if (request.stage != SynthesisStage::Group && s_->synthesizer_fails) {
      throw BackendError("synthesis", "scripted synthesis failure");
    }
    constexpr std::size_t kMaxFindings = 8;
    FinalAnswer a;
    a.executive_summary = "Answer to \"" + request.query + "\" drawn from " + std::to_string(request.items.size()) +
                          " " + (request.stage == SynthesisStage::Integrate ? "group summaries" : "results") + ".";
    std::string labels;
    for (const auto& item : request.items) {
      append_unique(a.sources, item.sources);
      if (!labels.empty()) labels += ", ";
      labels += item.label;
      if (a.key_findings.size() < kMaxFindings && !item.sources.empty()) {
        a.key_findings.push_back({item.label + ": " + headline(item.content), item.sources});
      }
    }
    a.analysis = "Inputs considered: " + labels + ".";
    a.conclusions = "Conclusions are limited to the verified sub-question results.";
    return {a, false, s_->costs.synthesize};
  }

 private:
  std::shared_ptr<const Scenario> s_;
};

}  // namespace

BackendRegistry make_scripted_registry(std::shared_ptr<const Scenario> scenario) {
  BackendRegistry reg;
  reg.planner = std::make_shared<ScriptedPlanner>(scenario);
  reg.verifier = std::make_shared<ScriptedVerifier>(scenario);
  reg.replanner = std::make_shared<ScriptedReplanner>(scenario);
  reg.synthesizer = std::make_shared<ScriptedSynthesizer>(scenario);
  for (const auto& a : scenario->agents) {
    if (!reg.agents.contains(a.agent_type)) {
      reg.agents[a.agent_type] = std::make_shared<ScriptedAgent>(scenario, a.agent_type, &scenario->agents);
    }
  }
  for (const auto& a : scenario->fallback_agents) {
    if (!reg.fallback_agents.contains(a.agent_type)) {
      reg.fallback_agents[a.agent_type] =
          std::make_shared<ScriptedAgent>(scenario, a.agent_type, &scenario->fallback_agents);
    }
  }
  if (!scenario->tool_service.empty()) {
    reg.tools = HttpToolInvoker::from_url(scenario->tool_service);
  } else {
    auto local = std::make_shared<LocalToolInvoker>();
    for (const auto& t : scenario->tools) local->add_echo(t);
    reg.tools = local;
  }
  return reg;
}

}  // namespace dagorch
