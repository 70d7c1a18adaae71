// SPDX-License-Identifier: Apache-2.0
#include "dagorch/executor.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <queue>
#include <thread>

#include "dagorch/error.hpp"

namespace dagorch {

void ExecutorConfig::validate() const {
  if (max_concurrent <= 0) throw Error("max_concurrent must be positive");
  if (agent_timeout.count() <= 0) throw Error("agent_timeout must be positive");
  if (tool_limits.max_consecutive_same_tool <= 0 || tool_limits.max_total_tool_calls <= 0) {
    throw Error("tool-call limits must be positive");
  }
}

std::vector<const SubQuestion*> ready_set(const ExecutionPlan& plan, const std::set<std::string>& completed) {
  std::vector<const SubQuestion*> out;
  for (const auto& sq : plan.sub_questions) {
    if (completed.contains(sq.id)) continue;
    if (std::includes(completed.begin(), completed.end(), sq.dependencies.begin(), sq.dependencies.end())) {
      out.push_back(&sq);
    }
  }
  return out;
}

std::vector<const SubQuestion*> select_batch(std::vector<const SubQuestion*> ready, int k) {
  std::sort(ready.begin(), ready.end(), [](const SubQuestion* a, const SubQuestion* b) {
    if (a->priority != b->priority) return a->priority > b->priority;
    return a->id < b->id;
  });
  if (k >= 0 && ready.size() > static_cast<std::size_t>(k)) ready.resize(static_cast<std::size_t>(k));
  return ready;
}

std::string enrich_with_context(const SubQuestion& sub_question, const std::map<std::string, AgentResult>& dep_results) {
  std::string out;
  for (const auto& dep : sub_question.dependencies) {  // std::set: ascending
    auto it = dep_results.find(dep);
    if (it == dep_results.end()) {
      throw InternalError("missing result for dependency " + dep + " of " + sub_question.id);
    }
    out += "--- context from " + dep + " ---\n";
    out += it->second.content;
    if (!it->second.content.empty() && it->second.content.back() != '\n') out += '\n';
    out += "--- end context from " + dep + " ---\n";
  }
  if (!out.empty()) out += '\n';
  out += sub_question.question;
  return out;
}

std::string agent_prompt(const SubQuestion& sub_question, const std::map<std::string, AgentResult>& results) {
  return sub_question.context_from_deps ? enrich_with_context(sub_question, results) : sub_question.question;
}

namespace {

Json start_payload(const SubQuestion& sq, int attempt, int iteration) {
  return Json{{"id", sq.id},
              {"agent_type", std::string(to_string(sq.agent_type))},
              {"attempt", attempt},
              {"iteration", iteration}};
}

Json finish_payload(const AgentResult& r) {
  std::string status = r.timed_out() ? "timeout" : r.failed() ? "failed" : r.degraded() ? "degraded" : "ok";
  return Json{{"id", r.sub_question_id},
              {"attempt", r.attempt},
              {"status", status},
              {"tokens", r.tokens_used},
              {"duration_ms", r.duration.count()}};
}

// Shared bookkeeping for both time modes. Only the coordinator thread
// touches it.
struct Schedule {
  const ExecutionPlan& plan;
  const std::map<std::string, AgentResult>& prior;
  const ExecutorConfig& config;
  std::set<std::string> completed;
  std::set<std::string> in_flight;
  std::size_t remaining;
  ExecutionOutcome outcome;

  Schedule(const ExecutionPlan& p, const std::set<std::string>& pending, const std::map<std::string, AgentResult>& pr,
           const ExecutorConfig& c)
      : plan(p), prior(pr), config(c), remaining(pending.size()) {
    for (const auto& sq : plan.sub_questions) {
      if (!pending.contains(sq.id)) completed.insert(sq.id);
    }
  }

  int attempt_for(const std::string& id) const {
    auto it = prior.find(id);
    return it == prior.end() ? 1 : it->second.attempt + 1;
  }

  // Results visible as dependency context: this run's, else prior ones.
  std::map<std::string, AgentResult> context_for(const SubQuestion& sq) const {
    std::map<std::string, AgentResult> ctx;
    for (const auto& d : sq.dependencies) {
      if (auto it = outcome.results.find(d); it != outcome.results.end()) {
        ctx.emplace(d, it->second);
      } else if (auto p = prior.find(d); p != prior.end()) {
        ctx.emplace(d, p->second);
      }
    }
    return ctx;
  }

  std::vector<const SubQuestion*> admit() {
    const int cap = config.max_concurrent;
    const int busy = static_cast<int>(in_flight.size());
    if (config.batch_mode == BatchMode::StrictBarrier ? busy > 0 : busy >= cap) return {};
    auto ready = ready_set(plan, completed);
    std::erase_if(ready, [&](const SubQuestion* sq) { return in_flight.contains(sq->id); });
    auto batch = select_batch(std::move(ready), cap - busy);
    if (!batch.empty()) {
      auto& ids = outcome.batches.emplace_back();
      for (const auto* sq : batch) {
        ids.push_back(sq->id);
        in_flight.insert(sq->id);
      }
    }
    return batch;
  }

  void finish(AgentResult r) {
    in_flight.erase(r.sub_question_id);
    completed.insert(r.sub_question_id);
    outcome.results[r.sub_question_id] = std::move(r);
    --remaining;
  }
};

ExecutionOutcome run_virtual(Schedule& s, const BackendRegistry& registry, EventBus& events, int iteration) {
  using Entry = std::pair<std::int64_t, std::string>;  // (finish time, id)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> finishing;
  std::map<std::string, AgentResult> pending_results;
  const std::int64_t base = events.clock().now_ms();
  std::int64_t now = 0;

  while (s.remaining > 0) {
    for (const SubQuestion* sq : s.admit()) {
      const int attempt = s.attempt_for(sq->id);
      events.emit_at(EventKind::SubQuestionStarted, start_payload(*sq, attempt, iteration), base + now);
      ToolSession session(s.config.tool_limits, registry.tools);
      AgentRequest request{*sq, agent_prompt(*sq, s.context_for(*sq)), attempt, session, {}};
      AgentResult r = route_with_fallback(sq->agent_type, request, registry);
      if (r.duration > s.config.agent_timeout) {
        r = failure_result(sq->id, attempt, trace::kTimeout, std::move(r.tool_trace));
        r.duration = s.config.agent_timeout;
      }
      finishing.emplace(now + r.duration.count(), sq->id);
      pending_results[sq->id] = std::move(r);
    }
    if (finishing.empty()) throw InternalError("scheduler stalled with " + std::to_string(s.remaining) + " pending");
    auto [t, id] = finishing.top();
    finishing.pop();
    now = t;
    auto node = pending_results.extract(id);
    events.emit_at(EventKind::SubQuestionFinished, finish_payload(node.mapped()), base + now);
    s.finish(std::move(node.mapped()));
  }
  events.clock().advance(std::chrono::milliseconds(now));
  return std::move(s.outcome);
}

struct Completion {
  std::string id;
  AgentResult result;
};

struct Mailbox {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Completion> done;
};

struct Flight {
  std::chrono::steady_clock::time_point deadline;
  std::stop_source stop;
  int attempt;
};

ExecutionOutcome run_wall(Schedule& s, const BackendRegistry& registry, EventBus& events, int iteration) {
  auto mailbox = std::make_shared<Mailbox>();
  auto shared_registry = std::make_shared<const BackendRegistry>(registry);
  std::map<std::string, Flight> flights;

  while (s.remaining > 0) {
    for (const SubQuestion* sq : s.admit()) {
      const int attempt = s.attempt_for(sq->id);
      events.emit(EventKind::SubQuestionStarted, start_payload(*sq, attempt, iteration));
      Flight& f = flights[sq->id];
      f.deadline = std::chrono::steady_clock::now() + s.config.agent_timeout;
      f.attempt = attempt;
      // Executions that outlive their deadline are abandoned, so the thread
      // owns everything it touches.
      std::thread([mailbox, shared_registry, sub_question = *sq, prompt = agent_prompt(*sq, s.context_for(*sq)),
                   attempt, limits = s.config.tool_limits, token = f.stop.get_token()]() mutable {
        const auto started = std::chrono::steady_clock::now();
        ToolSession session(limits, shared_registry->tools);
        AgentRequest request{sub_question, std::move(prompt), attempt, session, token};
        AgentResult r;
        try {
          r = route_with_fallback(sub_question.agent_type, request, *shared_registry);
        } catch (const std::exception& e) {
          r = failure_result(sub_question.id, attempt, std::string(trace::kFailed) + ":internal");
        }
        r.duration = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
        std::lock_guard lock(mailbox->mu);
        mailbox->done.push_back({sub_question.id, std::move(r)});
        mailbox->cv.notify_one();
      }).detach();
    }
    if (flights.empty()) throw InternalError("scheduler stalled with " + std::to_string(s.remaining) + " pending");

    auto earliest = std::min_element(flights.begin(), flights.end(), [](const auto& a, const auto& b) {
      return a.second.deadline < b.second.deadline;
    });
    std::optional<Completion> next;
    {
      std::unique_lock lock(mailbox->mu);
      mailbox->cv.wait_until(lock, earliest->second.deadline, [&] { return !mailbox->done.empty(); });
      // Late completions of abandoned executions are dropped here.
      while (!mailbox->done.empty() && !next) {
        Completion c = std::move(mailbox->done.front());
        mailbox->done.pop_front();
        if (flights.contains(c.id)) next = std::move(c);
      }
    }
    if (next) {
      flights.erase(next->id);
      events.emit(EventKind::SubQuestionFinished, finish_payload(next->result));
      s.finish(std::move(next->result));
    } else if (std::chrono::steady_clock::now() >= earliest->second.deadline) {
      const std::string id = earliest->first;
      earliest->second.stop.request_stop();
      AgentResult r = failure_result(id, earliest->second.attempt, trace::kTimeout);
      r.duration = s.config.agent_timeout;
      flights.erase(earliest);
      events.emit(EventKind::SubQuestionFinished, finish_payload(r));
      s.finish(std::move(r));
    }
  }
  return std::move(s.outcome);
}

}  // namespace

ExecutionOutcome execute_plan(const ExecutionPlan& plan, const std::set<std::string>& pending,
                              const std::map<std::string, AgentResult>& prior, const BackendRegistry& registry,
                              const ExecutorConfig& config, EventBus& events, int iteration) {
  config.validate();
  require_valid(plan);
  for (const auto& id : pending) {
    if (!plan.contains(id)) throw InternalError("pending id " + id + " is not in the plan");
  }
  for (const auto& sq : plan.sub_questions) {
    if (!pending.contains(sq.id) && !prior.contains(sq.id)) {
      throw InternalError("sub-question " + sq.id + " is neither pending nor previously answered");
    }
  }
  if (auto missing = registry.missing_agents(plan); !missing.empty()) {
    throw Error("no agent backend registered for " + std::string(to_string(missing.front())));
  }

  Schedule schedule(plan, pending, prior, config);
  return config.time_mode == TimeMode::Virtual ? run_virtual(schedule, registry, events, iteration)
                                               : run_wall(schedule, registry, events, iteration);
}

}  // namespace dagorch
