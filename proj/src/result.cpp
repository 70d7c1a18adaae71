// SPDX-License-Identifier: Apache-2.0
#include "dagorch/result.hpp"

#include <algorithm>

namespace dagorch {

std::string Source::citation() const {
  std::string out = "[" + label + " - " + locator;
  if (metadata && !metadata->empty()) out += ", " + *metadata;
  out += "]";
  return out;
}

void append_unique(std::vector<Source>& into, const std::vector<Source>& from) {
  for (const auto& s : from) {
    bool seen = std::any_of(into.begin(), into.end(), [&](const Source& e) { return e.same_target(s); });
    if (!seen) into.push_back(s);
  }
}

namespace {
bool has_agent_tag(const std::vector<ToolTraceEntry>& trace, std::string_view tag) {
  return std::any_of(trace.begin(), trace.end(), [&](const ToolTraceEntry& e) {
    return e.tool == trace::kAgent && e.outcome.starts_with(tag);
  });
}
}  // namespace

bool AgentResult::failed() const noexcept {
  return content.empty() && (has_agent_tag(tool_trace, trace::kFailed) || has_agent_tag(tool_trace, trace::kTimeout));
}

bool AgentResult::timed_out() const noexcept { return failed() && has_agent_tag(tool_trace, trace::kTimeout); }

bool AgentResult::degraded() const noexcept {
  return std::any_of(tool_trace.begin(), tool_trace.end(), [](const ToolTraceEntry& e) {
    return e.tool == trace::kFallback && e.outcome == trace::kDegraded;
  });
}

AgentResult failure_result(std::string sub_question_id, int attempt, std::string_view tag,
                           std::vector<ToolTraceEntry> trace) {
  AgentResult r;
  r.sub_question_id = std::move(sub_question_id);
  r.attempt = attempt;
  r.tool_trace = std::move(trace);
  r.tool_trace.push_back({trace::kAgent, std::string(tag)});
  return r;
}

void to_json(Json& j, const Source& s) {
  j = Json{{"label", s.label}, {"locator", s.locator}};
  if (s.metadata) j["metadata"] = *s.metadata;
}

void from_json(const Json& j, Source& s) {
  s.label = j.at("label").get<std::string>();
  s.locator = j.value("locator", std::string{});
  if (j.contains("metadata") && !j.at("metadata").is_null()) {
    s.metadata = j.at("metadata").get<std::string>();
  } else {
    s.metadata.reset();
  }
}

void to_json(Json& j, const ToolTraceEntry& t) { j = Json::array({t.tool, t.outcome}); }

void from_json(const Json& j, ToolTraceEntry& t) {
  t.tool = j.at(0).get<std::string>();
  t.outcome = j.at(1).get<std::string>();
}

void to_json(Json& j, const AgentResult& r) {
  j = Json{{"sub_question_id", r.sub_question_id},
           {"content", r.content},
           {"sources", r.sources},
           {"tokens_used", r.tokens_used},
           {"tool_trace", r.tool_trace},
           {"duration_ms", r.duration.count()},
           {"attempt", r.attempt},
           {"merged_from_attempts", r.merged_from_attempts}};
}

void from_json(const Json& j, AgentResult& r) {
  r.sub_question_id = j.at("sub_question_id").get<std::string>();
  r.content = j.at("content").get<std::string>();
  r.sources = j.value("sources", std::vector<Source>{});
  r.tokens_used = j.value("tokens_used", std::uint64_t{0});
  r.tool_trace = j.value("tool_trace", std::vector<ToolTraceEntry>{});
  r.duration = std::chrono::milliseconds(j.value("duration_ms", std::int64_t{0}));
  r.attempt = j.value("attempt", 1);
  r.merged_from_attempts = j.value("merged_from_attempts", std::vector<int>{});
}

}  // namespace dagorch
