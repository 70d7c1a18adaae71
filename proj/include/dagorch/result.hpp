// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dagorch/plan.hpp"

namespace dagorch {

// A citation target. Identity for deduplication is (label, locator).
struct Source {
  std::string label;
  std::string locator;
  std::optional<std::string> metadata;

  bool same_target(const Source& other) const noexcept {
    return label == other.label && locator == other.locator;
  }
  // "[label - locator, metadata]"
  std::string citation() const;

  bool operator==(const Source&) const = default;
};

// Appends each source whose (label, locator) is not yet present.
void append_unique(std::vector<Source>& into, const std::vector<Source>& from);

struct ToolTraceEntry {
  std::string tool;
  std::string outcome;

  bool operator==(const ToolTraceEntry&) const = default;
};

// Trace tags written by the engine itself (not by tool calls).
namespace trace {
inline constexpr const char* kAgent = "agent";
inline constexpr const char* kFailed = "failed";
inline constexpr const char* kTimeout = "timeout";
inline constexpr const char* kFallback = "fallback";
inline constexpr const char* kDegraded = "degraded";
}  // namespace trace

struct AgentResult {
  std::string sub_question_id;
  std::string content;
  std::vector<Source> sources;
  std::uint64_t tokens_used = 0;
  std::vector<ToolTraceEntry> tool_trace;
  std::chrono::milliseconds duration{0};
  int attempt = 1;
  std::vector<int> merged_from_attempts;

  // Empty content with an engine failure tag (timeout or agent failure).
  bool failed() const noexcept;
  bool timed_out() const noexcept;
  bool degraded() const noexcept;

  bool operator==(const AgentResult&) const = default;
};

AgentResult failure_result(std::string sub_question_id, int attempt, std::string_view tag,
                           std::vector<ToolTraceEntry> trace = {});

void to_json(Json& j, const Source& s);
void from_json(const Json& j, Source& s);
void to_json(Json& j, const ToolTraceEntry& t);
void from_json(const Json& j, ToolTraceEntry& t);
void to_json(Json& j, const AgentResult& r);
void from_json(const Json& j, AgentResult& r);

}  // namespace dagorch
