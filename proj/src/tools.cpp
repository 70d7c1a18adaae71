// SPDX-License-Identifier: Apache-2.0
#include "dagorch/tools.hpp"

#include <regex>

#include "dagorch/error.hpp"
#include "httplib.h"

namespace dagorch {

std::string_view to_string(DenyReason reason) noexcept {
  return reason == DenyReason::Consecutive ? "consecutive" : "total";
}

ToolDecision ToolCallLimiter::record(std::string_view tool) {
  if (deny_) return *deny_;
  const bool same = last_tool_ && *last_tool_ == tool;
  const int next_consecutive = same ? consecutive_ + 1 : 1;
  const int next_total = total_ + 1;
  if (next_consecutive > limits_.max_consecutive_same_tool) {
    deny_ = ToolDecision::deny(DenyReason::Consecutive);
    return *deny_;
  }
  if (next_total > limits_.max_total_tool_calls) {
    deny_ = ToolDecision::deny(DenyReason::Total);
    return *deny_;
  }
  consecutive_ = next_consecutive;
  total_ = next_total;
  last_tool_ = std::string(tool);
  return ToolDecision::allow();
}

std::string ToolOutcome::tag() const {
  switch (status) {
    case Status::Ok: return "ok";
    case Status::Denied: return "denied:" + error;
    case Status::Transport: return "error:transport";
    case Status::Timeout: return "error:timeout";
    case Status::Malformed: return "error:malformed";
    case Status::Remote: return "error:remote";
  }
  return "error";
}

ToolOutcome ToolSession::call(const std::string& tool, const Json& arguments) {
  ToolOutcome outcome;
  if (auto d = limiter_.record(tool); !d.allowed) {
    outcome.status = ToolOutcome::Status::Denied;
    outcome.error = std::string(to_string(d.reason));
  } else if (!invoker_) {
    outcome.status = ToolOutcome::Status::Transport;
    outcome.error = "no tool service configured";
  } else {
    outcome = invoker_->invoke(tool, arguments);
  }
  trace_.push_back({tool, outcome.tag()});
  return outcome;
}

HttpToolInvoker::HttpToolInvoker(std::string host, int port, std::chrono::milliseconds timeout)
    : host_(std::move(host)), port_(port), timeout_(timeout) {}

HostPort parse_http_url(const std::string& url) {
  static const std::regex re(R"(^(?:http://)?([^:/]+):(\d{1,5})/?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ParseError("url must look like http://host:port, got " + url);
  return {m[1].str(), std::stoi(m[2].str())};
}

std::shared_ptr<HttpToolInvoker> HttpToolInvoker::from_url(const std::string& url,
                                                           std::chrono::milliseconds timeout) {
  auto hp = parse_http_url(url);
  return std::make_shared<HttpToolInvoker>(hp.host, hp.port, timeout);
}

namespace {

void configure(httplib::Client& cli, std::chrono::milliseconds timeout) {
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
}

ToolOutcome transport_failure(const httplib::Result& res) {
  ToolOutcome out;
  out.status = res.error() == httplib::Error::Read || res.error() == httplib::Error::ConnectionTimeout
                   ? ToolOutcome::Status::Timeout
                   : ToolOutcome::Status::Transport;
  out.error = httplib::to_string(res.error());
  return out;
}

}  // namespace

ToolOutcome HttpToolInvoker::invoke(const std::string& tool, const Json& arguments) {
  httplib::Client cli(host_, port_);
  configure(cli, timeout_);
  Json body{{"tool", tool}, {"arguments", arguments}};
  auto res = cli.Post("/call", body.dump(), "application/json");
  if (!res) return transport_failure(res);

  ToolOutcome out;
  Json doc = Json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("ok") || !doc["ok"].is_boolean()) {
    out.status = ToolOutcome::Status::Malformed;
    out.error = "response is not a tool-service document (HTTP " + std::to_string(res->status) + ")";
    return out;
  }
  if (doc["ok"].get<bool>()) {
    out.result = doc.value("result", Json());
  } else {
    out.status = ToolOutcome::Status::Remote;
    out.error = doc.value("error", std::string("unspecified tool error"));
  }
  return out;
}

std::vector<std::string> HttpToolInvoker::list_tools() {
  httplib::Client cli(host_, port_);
  configure(cli, timeout_);
  auto res = cli.Get("/tools");
  if (!res) throw BackendError("transport", "tool listing failed: " + httplib::to_string(res.error()));
  Json doc = Json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.contains("tools")) throw ParseError("malformed /tools response");
  return doc["tools"].get<std::vector<std::string>>();
}

void LocalToolInvoker::add(std::string name, Handler handler) {
  std::lock_guard lock(mu_);
  handlers_[std::move(name)] = std::move(handler);
}

void LocalToolInvoker::add_echo(std::string name) {
  add(std::move(name), [](const Json& args) { return args; });
}

ToolOutcome LocalToolInvoker::invoke(const std::string& tool, const Json& arguments) {
  Handler h;
  {
    std::lock_guard lock(mu_);
    auto it = handlers_.find(tool);
    if (it == handlers_.end()) return {ToolOutcome::Status::Remote, {}, "unknown tool " + tool};
    h = it->second;
  }
  try {
    return {ToolOutcome::Status::Ok, h(arguments), {}};
  } catch (const std::exception& e) {
    return {ToolOutcome::Status::Remote, {}, e.what()};
  }
}

std::vector<std::string> LocalToolInvoker::list_tools() {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, _] : handlers_) out.push_back(name);
  return out;
}

struct ToolServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::mutex mu;
  std::map<std::string, Handler> handlers;
};

ToolServer::ToolServer() : impl_(std::make_unique<Impl>()) {
  impl_->server.Get("/tools", [this](const httplib::Request&, httplib::Response& res) {
    Json names = Json::array();
    {
      std::lock_guard lock(impl_->mu);
      for (const auto& [name, _] : impl_->handlers) names.push_back(name);
    }
    res.set_content(Json{{"tools", names}}.dump(), "application/json");
  });
  impl_->server.Post("/call", [this](const httplib::Request& req, httplib::Response& res) {
    Json reply;
    Json body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("tool") || !body["tool"].is_string()) {
      reply = {{"ok", false}, {"error", "request must be {tool, arguments}"}};
    } else {
      Handler h;
      {
        std::lock_guard lock(impl_->mu);
        auto it = impl_->handlers.find(body["tool"].get<std::string>());
        if (it != impl_->handlers.end()) h = it->second;
      }
      if (!h) {
        reply = {{"ok", false}, {"error", "unknown tool " + body["tool"].get<std::string>()}};
      } else {
        try {
          reply = {{"ok", true}, {"result", h(body.value("arguments", Json::object()))}};
        } catch (const std::exception& e) {
          reply = {{"ok", false}, {"error", e.what()}};
        }
      }
    }
    res.set_content(reply.dump(), "application/json");
  });
}

ToolServer::~ToolServer() { stop(); }

void ToolServer::add(std::string name, Handler handler) {
  std::lock_guard lock(impl_->mu);
  impl_->handlers[std::move(name)] = std::move(handler);
}

void ToolServer::start() {
  port_ = impl_->server.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw Error("tool server could not bind a port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void ToolServer::stop() {
  if (impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

std::string ToolServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

}  // namespace dagorch
