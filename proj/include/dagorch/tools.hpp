// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dagorch/result.hpp"

namespace dagorch {

struct ToolLimits {
  int max_consecutive_same_tool = 10;
  int max_total_tool_calls = 50;
};

enum class DenyReason { Consecutive, Total };

struct ToolDecision {
  bool allowed = true;
  DenyReason reason = DenyReason::Consecutive;

  static ToolDecision allow() { return {}; }
  static ToolDecision deny(DenyReason r) { return {false, r}; }
  bool operator==(const ToolDecision&) const = default;
};

std::string_view to_string(DenyReason reason) noexcept;

// Per-execution guard against tool-call loops. A denied call is not
// counted, and after the first deny every further call returns that same
// deny.
class ToolCallLimiter {
 public:
  explicit ToolCallLimiter(ToolLimits limits = {}) : limits_(limits) {}

  ToolDecision record(std::string_view tool);

  const std::optional<std::string>& last_tool() const noexcept { return last_tool_; }
  int consecutive_count() const noexcept { return consecutive_; }
  int total_count() const noexcept { return total_; }
  bool denied() const noexcept { return deny_.has_value(); }
  const ToolLimits& limits() const noexcept { return limits_; }

 private:
  ToolLimits limits_;
  std::optional<std::string> last_tool_;
  int consecutive_ = 0;
  int total_ = 0;
  std::optional<ToolDecision> deny_;
};

struct ToolOutcome {
  enum class Status { Ok, Denied, Transport, Timeout, Malformed, Remote };

  Status status = Status::Ok;
  Json result;
  std::string error;

  bool ok() const noexcept { return status == Status::Ok; }
  // Trace tag: "ok", "denied:consecutive", "error:timeout", ...
  std::string tag() const;
};

// Something that can carry out a tool call: an HTTP tool service, an
// in-process table of functions, or a test double.
class ToolInvoker {
 public:
  virtual ~ToolInvoker() = default;
  virtual ToolOutcome invoke(const std::string& tool, const Json& arguments) = 0;
  virtual std::vector<std::string> list_tools() = 0;
};

// The tool-calling surface handed to one agent execution. Owns the
// execution's limiter and trace; not shared across executions.
class ToolSession {
 public:
  ToolSession(ToolLimits limits, std::shared_ptr<ToolInvoker> invoker)
      : limiter_(limits), invoker_(std::move(invoker)) {}

  // Checks the limiter first; a denied call never reaches the invoker.
  ToolOutcome call(const std::string& tool, const Json& arguments);

  const ToolCallLimiter& limiter() const noexcept { return limiter_; }
  std::vector<ToolTraceEntry> take_trace() { return std::move(trace_); }
  const std::vector<ToolTraceEntry>& trace() const noexcept { return trace_; }
  void note(std::string tool, std::string outcome) { trace_.push_back({std::move(tool), std::move(outcome)}); }

 private:
  ToolCallLimiter limiter_;
  std::shared_ptr<ToolInvoker> invoker_;
  std::vector<ToolTraceEntry> trace_;
};

struct HostPort {
  std::string host;
  int port = 0;
};

// Parses "http://host:port" (trailing slash allowed); throws ParseError.
HostPort parse_http_url(const std::string& url);

// Client for the tool-service wire protocol:
//   POST /call  {"tool": name, "arguments": {...}}
//     -> {"ok": true, "result": ...} | {"ok": false, "error": "..."}
//   GET  /tools -> {"tools": [name, ...]}
class HttpToolInvoker final : public ToolInvoker {
 public:
  HttpToolInvoker(std::string host, int port, std::chrono::milliseconds timeout = std::chrono::seconds(30));
  // Accepts "http://host:port".
  static std::shared_ptr<HttpToolInvoker> from_url(const std::string& url,
                                                   std::chrono::milliseconds timeout = std::chrono::seconds(30));

  ToolOutcome invoke(const std::string& tool, const Json& arguments) override;
  std::vector<std::string> list_tools() override;

 private:
  std::string host_;
  int port_;
  std::chrono::milliseconds timeout_;
};

// Calls registered functions directly; used by scripted scenarios.
class LocalToolInvoker final : public ToolInvoker {
 public:
  using Handler = std::function<Json(const Json&)>;

  void add(std::string name, Handler handler);
  // A tool that returns its arguments unchanged.
  void add_echo(std::string name);

  ToolOutcome invoke(const std::string& tool, const Json& arguments) override;
  std::vector<std::string> list_tools() override;

 private:
  std::mutex mu_;
  std::map<std::string, Handler> handlers_;
};

// Minimal in-process tool service speaking the same protocol as
// HttpToolInvoker. Listens on 127.0.0.1 on an ephemeral port.
class ToolServer {
 public:
  using Handler = std::function<Json(const Json&)>;

  ToolServer();
  ~ToolServer();
  ToolServer(const ToolServer&) = delete;
  ToolServer& operator=(const ToolServer&) = delete;

  // Handlers may throw; the exception message becomes {"ok": false}.
  void add(std::string name, Handler handler);
  void start();
  void stop();
  int port() const noexcept { return port_; }
  std::string url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace dagorch
