// SPDX-License-Identifier: Apache-2.0
#include "dagorch/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "dagorch/error.hpp"
#include "dagorch/replanning.hpp"
#include "dagorch/store.hpp"
#include "dagorch/synthesis.hpp"
#include "dagorch/verification.hpp"

namespace dagorch {

std::string_view to_string(RunMode mode) noexcept {
  switch (mode) {
    case RunMode::Full: return "full";
    case RunMode::StaticPipeline: return "static";
    case RunMode::SingleAgent: return "single";
  }
  return "?";
}

std::optional<RunMode> parse_run_mode(std::string_view name) noexcept {
  for (auto m : {RunMode::Full, RunMode::StaticPipeline, RunMode::SingleAgent}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

ExecutionPlan static_pipeline_plan(std::string_view query) {
  ExecutionPlan plan;
  const std::pair<const char*, AgentType> chain[] = {{"pipeline_rag", AgentType::Rag},
                                                     {"pipeline_web_search", AgentType::WebSearch},
                                                     {"pipeline_financial", AgentType::Financial},
                                                     {"pipeline_analysis", AgentType::Analysis}};
  std::string previous;
  for (const auto& [id, type] : chain) {
    SubQuestion sq;
    sq.id = id;
    sq.question = std::string(query);
    sq.agent_type = type;
    if (!previous.empty()) {
      sq.dependencies = {previous};
      sq.context_from_deps = true;
    }
    plan.sub_questions.push_back(std::move(sq));
    previous = id;
  }
  return plan;
}

ExecutionPlan single_agent_plan(std::string_view query) {
  SubQuestion sq;
  sq.id = "single_agent";
  sq.question = std::string(query);
  sq.agent_type = AgentType::Reasoning;
  sq.priority = 10;
  ExecutionPlan plan;
  plan.sub_questions.push_back(std::move(sq));
  return plan;
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

struct RunFailure {
  std::string message;
};

class Coordinator {
 public:
  Coordinator(std::string_view query, const OrchestrationConfig& config, const BackendRegistry& registry,
              EventBus& events, const RunOptions& options)
      : query_(query), config_(config), registry_(registry), events_(events), options_(options) {
    // Baselines never replan: one execute and one assessment, then stop.
    if (options_.mode != RunMode::Full) config_.max_iterations = 0;
  }

  RunReport run() {
    RunReport report;
    Json config_json = config_;
    events_.emit(EventKind::RunStarted, Json{{"query", query_},
                                             {"mode", std::string(to_string(options_.mode))},
                                             {"time_mode", options_.time_mode == TimeMode::Virtual ? "virtual" : "wall"},
                                             {"config", std::move(config_json)}});
    try {
      plan_phase();
      StopDecision stop = loop();
      state_.stop = stop;
      events_.emit(EventKind::StopTriggered, Json{{"outcome", std::string(to_string(stop.outcome))},
                                                  {"detail", stop.detail},
                                                  {"iteration", state_.iteration},
                                                  {"completeness", completeness_ratio(state_.records)},
                                                  {"confidence", mean_confidence(state_.records)}});
      report.answer = synthesize_phase();
      report.succeeded = true;
      finish("completed", {});
    } catch (const RunFailure& f) {
      report.error = f.message;
      finish("failed", f.message);
    }
    report.state = state_;
    report.events = events_.events();
    report.text = render_report(report.events);
    return report;
  }

 private:
  void finish(const std::string& status, const std::string& error) {
    Json payload{{"status", status},
                 {"total_tokens", state_.ledger.total()},
                 {"ledger", state_.ledger},
                 {"iterations", state_.iteration},
                 {"verify_phases", state_.completeness_history.size()}};
    if (!error.empty()) payload["error"] = error;
    events_.emit(EventKind::RunFinished, std::move(payload));
  }

  void phase_started(Phase p) {
    events_.emit(EventKind::PhaseStarted, Json{{"phase", std::string(to_string(p))}, {"iteration", state_.iteration}});
  }

  void phase_finished(Phase p, std::uint64_t tokens, Json extra = Json::object()) {
    state_.ledger.charge(p, tokens);
    Json payload{{"phase", std::string(to_string(p))},
                 {"iteration", state_.iteration},
                 {"tokens", tokens},
                 {"total_tokens", state_.ledger.total()}};
    payload.update(extra);
    events_.emit(EventKind::PhaseFinished, std::move(payload));
  }

  void plan_phase() {
    phase_started(Phase::Plan);
    std::uint64_t tokens = 0;
    switch (options_.mode) {
      case RunMode::Full: {
        if (!registry_.planner) throw RunFailure{"no planner backend registered"};
        PlanRequest request{query_, {}};
        for (auto t : kAllAgentTypes) {
          if (registry_.agents.contains(t)) request.available_agents.push_back(t);
        }
        try {
          PlanResponse response = registry_.planner->plan(request);
          state_.plan = std::move(response.plan);
          tokens = response.tokens;
        } catch (const std::exception& e) {
          throw RunFailure{std::string("planner failed: ") + e.what()};
        }
        break;
      }
      case RunMode::StaticPipeline: state_.plan = static_pipeline_plan(query_); break;
      case RunMode::SingleAgent: state_.plan = single_agent_plan(query_); break;
    }
    if (auto report = validate_plan(state_.plan); !report.ok()) {
      state_.ledger.charge(Phase::Plan, tokens);
      throw RunFailure{"invalid plan: " + report.describe()};
    }
    if (auto missing = registry_.missing_agents(state_.plan); !missing.empty()) {
      state_.ledger.charge(Phase::Plan, tokens);
      std::vector<std::string> names;
      for (auto t : missing) names.emplace_back(to_string(t));
      throw RunFailure{"no agent registered for " + join(names)};
    }
    phase_finished(Phase::Plan, tokens, Json{{"sub_questions", state_.plan.sub_questions.size()}});
  }

  StopDecision loop() {
    std::set<std::string> pending = state_.plan.ids();
    while (true) {
      if (auto s = budget_exhausted(state_.ledger.total(), config_)) return *s;
      const std::set<std::string> executed = execute_phase(pending);
      if (auto s = budget_exhausted(state_.ledger.total(), config_)) return *s;
      verify_phase(executed);
      StopDecision stop = evaluate_stop(state_, config_);
      if (stop.stops()) return stop;
      pending = replan_phase();
      ++state_.iteration;
    }
  }

  std::set<std::string> execute_phase(const std::set<std::string>& pending) {
    phase_started(Phase::Execute);
    ExecutorConfig ec;
    ec.max_concurrent = config_.max_concurrent;
    ec.agent_timeout = config_.agent_timeout;
    ec.tool_limits = {config_.max_consecutive_same_tool, config_.max_total_tool_calls};
    ec.batch_mode = options_.batch_mode;
    ec.time_mode = options_.time_mode;
    ExecutionOutcome outcome = execute_plan(state_.plan, pending, state_.results, registry_, ec, events_, state_.iteration);

    std::uint64_t tokens = 0;
    std::set<std::string> executed;
    for (auto& [id, r] : outcome.results) {
      tokens += r.tokens_used;
      executed.insert(id);
      if (auto it = state_.results.find(id); it != state_.results.end()) {
        it->second = merge_results(it->second, r);
      } else {
        state_.results.emplace(id, std::move(r));
      }
    }
    phase_finished(Phase::Execute, tokens, Json{{"executed", executed.size()}});
    return executed;
  }

  void verify_phase(const std::set<std::string>& executed) {
    phase_started(Phase::Verify);
    std::map<std::string, AgentResult> fresh;
    for (const auto& id : executed) fresh.emplace(id, state_.results.at(id));
    VerificationOutcome outcome;
    if (registry_.verifier) {
      outcome = verify_results(state_.plan, fresh, state_.records, *registry_.verifier);
    } else {
      for (const auto& id : executed) outcome.records[id] = synthetic_incomplete(id, "no verifier backend registered");
    }

    std::set<std::string> checked;
    for (auto& [id, record] : outcome.records) {
      if (!outcome.reused.contains(id)) checked.insert(id);
      state_.records[id] = std::move(record);
    }
    for (const auto& [id, r] : state_.records) {
      events_.emit(EventKind::VerificationRecorded,
                   Json{{"id", id},
                        {"status", std::string(to_string(r.status))},
                        {"score", r.completeness_score},
                        {"confidence", r.confidence},
                        {"recommendation", std::string(to_string(r.recommendation))},
                        {"missing_aspects", r.missing_aspects},
                        {"contradictions", r.contradictions},
                        {"reused", !checked.contains(id)},
                        {"escalated", r.recommendation == Recommendation::Escalate}});
    }
    const double ratio = completeness_ratio(state_.records);
    state_.completeness_history.push_back(ratio);
    std::size_t complete = 0;
    for (const auto& [_, r] : state_.records) complete += r.complete() ? 1 : 0;
    phase_finished(Phase::Verify, outcome.tokens,
                   Json{{"completeness", ratio},
                        {"complete", complete},
                        {"records", state_.records.size()},
                        {"confidence", mean_confidence(state_.records)},
                        {"backend_calls", outcome.backend_calls}});
  }

  std::set<std::string> replan_phase() {
    phase_started(Phase::Replan);
    ReplanOutcome outcome;
    if (registry_.replanner) {
      outcome = decide_replan(state_, state_.records, config_, *registry_.replanner, query_);
    } else {
      NullReplanner none;
      outcome = decide_replan(state_, state_.records, config_, none, query_);
    }
    drop_unroutable(outcome);

    std::set<std::string> pending(outcome.decision.retry_sub_questions.begin(),
                                  outcome.decision.retry_sub_questions.end());
    std::vector<std::string> new_ids;
    for (const auto& sq : outcome.decision.new_sub_questions) {
      new_ids.push_back(sq.id);
      pending.insert(sq.id);
      state_.plan.sub_questions.push_back(sq);
    }
    require_valid(state_.plan);

    events_.emit(EventKind::ReplanDecided, Json{{"iteration", state_.iteration},
                                                {"retry", outcome.decision.retry_sub_questions},
                                                {"new", new_ids},
                                                {"done", outcome.decision.done},
                                                {"explanation", outcome.decision.explanation},
                                                {"repairs", outcome.repairs},
                                                {"backend_failed", outcome.backend_failed}});
    phase_finished(Phase::Replan, outcome.tokens);
    return pending;
  }

  // New sub-questions for agent types nobody serves cannot run; drop them
  // and anything that depends on them.
  void drop_unroutable(ReplanOutcome& outcome) const {
    auto& fresh = outcome.decision.new_sub_questions;
    std::set<std::string> dropped;
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto it = fresh.begin(); it != fresh.end();) {
        const bool unserved = !registry_.agents.contains(it->agent_type);
        const bool orphaned = std::any_of(it->dependencies.begin(), it->dependencies.end(),
                                          [&](const std::string& d) { return dropped.contains(d); });
        if (unserved || orphaned) {
          outcome.repairs.push_back("dropped new sub-question " + it->id +
                                    (unserved ? " (no agent for " + std::string(to_string(it->agent_type)) + ")"
                                              : " (depends on a dropped sub-question)"));
          dropped.insert(it->id);
          it = fresh.erase(it);
          changed = true;
        } else {
          ++it;
        }
      }
    }
    outcome.decision.done = !outcome.decision.has_actions();
  }

  FinalAnswer synthesize_phase() {
    phase_started(Phase::Synthesize);
    FinalAnswer answer;
    SynthesisOutcome outcome;
    if (state_.results.empty()) {
      answer.executive_summary = "No sub-question produced a result, so no answer could be synthesized.";
      for (const auto& sq : state_.plan.sub_questions) answer.gaps.push_back(sq.id + ": not executed");
    } else {
      if (!registry_.synthesizer) throw RunFailure{"no synthesizer backend registered"};
      try {
        outcome = synthesize(query_, state_.plan, state_.results, state_.records, *registry_.synthesizer);
      } catch (const std::exception& e) {
        state_.ledger.charge(Phase::Synthesize, outcome.tokens);
        throw RunFailure{std::string("synthesis failed: ") + e.what()};
      }
      answer = outcome.answer;
    }
    std::vector<std::string> fallback_groups;
    for (auto t : outcome.fallback_groups) fallback_groups.emplace_back(to_string(t));
    events_.emit(EventKind::SynthesisProduced, Json{{"answer", answer},
                                                    {"hierarchical", outcome.hierarchical},
                                                    {"backend_calls", outcome.backend_calls},
                                                    {"fallback_groups", fallback_groups}});
    phase_finished(Phase::Synthesize, outcome.tokens);
    return answer;
  }

  class NullReplanner final : public ReplannerBackend {
   public:
    ReplanResponse replan(const ReplanRequest&) override { throw BackendError("replanner", "no replanner registered"); }
  };

  std::string query_;
  OrchestrationConfig config_;
  const BackendRegistry& registry_;
  EventBus& events_;
  RunOptions options_;
  OrchestrationState state_;
};

}  // namespace

RunReport run(std::string_view query, const OrchestrationConfig& config, const BackendRegistry& registry,
              EventBus& events, const RunOptions& options) {
  config.validate();
  if (options.time_mode == TimeMode::Virtual && !events.clock().simulated()) {
    throw Error("virtual time mode needs an event bus with a simulated clock");
  }
  return Coordinator(query, config, registry, events, options).run();
}

// ---- report rendering

namespace {

struct ReportBuilder {
  std::ostringstream head;
  std::ostringstream trace;
  std::ostringstream tail;
  std::map<std::string, std::string> agent_of;
  std::string stop_line = "Stop condition: (none)";
  Json ledger;
  std::string status = "unfinished";
  std::string error;
  std::uint64_t verify_phases = 0;
  int iterations = 0;
  std::string answer_text;

  void on(const RunEvent& e) {
    const Json& p = e.payload;
    switch (e.kind) {
      case EventKind::RunStarted:
        head << "Query: " << p.value("query", "") << "\n";
        head << "Mode: " << p.value("mode", "") << "\n";
        break;
      case EventKind::PhaseStarted: {
        const std::string phase = p.value("phase", "");
        if (phase == "execute") trace << "iteration " << p.value("iteration", 0) << "\n";
        break;
      }
      case EventKind::PhaseFinished: {
        const std::string phase = p.value("phase", "");
        if (phase == "plan") {
          trace << "plan: " << p.value("sub_questions", 0) << " sub-questions, " << p.value("tokens", 0)
                << " tokens\n";
        } else if (phase == "execute") {
          trace << "  execute: " << p.value("executed", 0) << " run, " << p.value("tokens", 0) << " tokens\n";
        } else if (phase == "verify") {
          trace << "  verify: " << p.value("complete", 0) << "/" << p.value("records", 0)
                << " complete (ratio " << fmt2(p.value("completeness", 0.0)) << "), mean confidence "
                << fmt2(p.value("confidence", 0.0)) << ", " << p.value("tokens", 0) << " tokens\n";
        } else if (phase == "replan") {
          trace << "  replan tokens: " << p.value("tokens", 0) << "\n";
        } else if (phase == "synthesize") {
          trace << "synthesize: " << p.value("tokens", 0) << " tokens\n";
        }
        break;
      }
      case EventKind::SubQuestionStarted:
        agent_of[p.value("id", "")] = p.value("agent_type", "");
        break;
      case EventKind::SubQuestionFinished: {
        const std::string id = p.value("id", "");
        trace << "    " << id << " (" << agent_of[id] << ") attempt " << p.value("attempt", 0) << ": "
              << p.value("status", "") << ", " << p.value("tokens", 0) << " tokens, " << p.value("duration_ms", 0)
              << " ms\n";
        break;
      }
      case EventKind::VerificationRecorded:
        trace << "    " << p.value("id", "") << ": " << p.value("status", "") << ", score "
              << fmt2(p.value("score", 0.0)) << ", confidence " << fmt2(p.value("confidence", 0.0)) << ", "
              << p.value("recommendation", "") << (p.value("reused", false) ? " (carried over)" : "")
              << (p.value("escalated", false) ? " (escalated)" : "") << "\n";
        break;
      case EventKind::ReplanDecided: {
        auto retry = p.value("retry", std::vector<std::string>{});
        auto fresh = p.value("new", std::vector<std::string>{});
        trace << "  replan: retry [" << join(retry) << "], new [" << join(fresh) << "]"
              << (p.value("done", false) ? ", done" : "") << "\n";
        if (auto x = p.value("explanation", std::string{}); !x.empty()) trace << "    why: " << x << "\n";
        for (const auto& r : p.value("repairs", std::vector<std::string>{})) trace << "    repair: " << r << "\n";
        break;
      }
      case EventKind::StopTriggered: {
        stop_line = "Stop condition: " + p.value("outcome", std::string{});
        if (auto d = p.value("detail", std::string{}); !d.empty()) stop_line += " (" + d + ")";
        trace << "stop: " << p.value("outcome", "") << " at iteration " << p.value("iteration", 0) << "\n";
        break;
      }
      case EventKind::SynthesisProduced: {
        FinalAnswer a = p.at("answer").get<FinalAnswer>();
        answer_text = render_answer(a);
        trace << "synthesis: " << (p.value("hierarchical", false) ? "hierarchical" : "single pass") << ", "
              << p.value("backend_calls", 0) << " backend call(s)";
        auto fb = p.value("fallback_groups", std::vector<std::string>{});
        if (!fb.empty()) trace << ", fallback summaries for [" << join(fb) << "]";
        trace << "\n";
        break;
      }
      case EventKind::RunFinished:
        status = p.value("status", "");
        error = p.value("error", "");
        ledger = p.value("ledger", Json::object());
        verify_phases = p.value("verify_phases", std::uint64_t{0});
        iterations = p.value("iterations", 0);
        break;
    }
  }

  std::string token_table() const {
    std::ostringstream os;
    const std::uint64_t total = ledger.value("total", std::uint64_t{0});
    char line[96];
    std::snprintf(line, sizeof line, "  %-12s %12s %7s\n", "phase", "tokens", "share");
    os << line;
    for (auto phase : kAllPhases) {
      const std::string name(to_string(phase));
      const std::uint64_t t = ledger.value(name, std::uint64_t{0});
      const double share = total ? 100.0 * static_cast<double>(t) / static_cast<double>(total) : 0.0;
      std::snprintf(line, sizeof line, "  %-12s %12llu %6.1f%%\n", name.c_str(), static_cast<unsigned long long>(t),
                    share);
      os << line;
    }
    std::snprintf(line, sizeof line, "  %-12s %12llu\n", "total", static_cast<unsigned long long>(total));
    os << line;
    return os.str();
  }
};

}  // namespace

std::string render_report(const std::vector<RunEvent>& events) {
  ReportBuilder b;
  for (const auto& e : events) b.on(e);

  std::ostringstream os;
  os << b.head.str();
  os << "Status: " << b.status << "\n";
  if (!b.error.empty()) os << "Error: " << b.error << "\n";
  os << b.stop_line << "\n";
  os << "Verify phases: " << b.verify_phases << "; replan cycles: " << b.iterations
     << " (the first execute pass is iteration 0)\n";
  os << "\nIteration trace:\n" << b.trace.str();
  os << "\nTokens by phase:\n" << b.token_table();
  if (!b.answer_text.empty()) os << "\nFinal answer:\n" << b.answer_text;
  os << "\nEvents: " << events.size() << ", log hash " << hex64(event_log_hash(events)) << "\n";
  return os.str();
}

void write_run_dir(const std::filesystem::path& dir, const RunReport& report) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / kPlanFile, Json(report.state.plan).dump(2) + "\n");
  write_file_atomic(dir / kStateFile, Json(report.state).dump(2) + "\n");
  write_file_atomic(dir / kEventsFile, encode_event_log(report.events));
  write_file_atomic(dir / kReportFile, report.text);
}

Replay replay_run_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw NotFoundError("no run directory " + dir.string());
  const auto log = dir / kEventsFile;
  if (!std::filesystem::exists(log)) throw NotFoundError("no event log in " + dir.string());
  Replay r;
  r.events = decode_event_log(read_file(log));
  r.report = render_report(r.events);
  return r;
}

}  // namespace dagorch
