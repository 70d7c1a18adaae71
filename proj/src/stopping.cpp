// SPDX-License-Identifier: Apache-2.0
#include "dagorch/stopping.hpp"

#include <cstdio>
#include <regex>

#include "dagorch/error.hpp"
#include "dagorch/state.hpp"
#include "dagorch/verification.hpp"

namespace dagorch {

void OrchestrationConfig::validate() const {
  auto unit = [](const char* name, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(name) + " must lie in [0, 1]");
  };
  if (max_iterations <= 0) throw Error("max_iterations must be positive");
  if (token_budget == 0) throw Error("token_budget must be positive");
  unit("ready_threshold", ready_threshold);
  unit("high_confidence", high_confidence);
  unit("high_confidence_min_complete", high_confidence_min_complete);
  unit("diminishing_returns", diminishing_returns);
  if (max_concurrent <= 0) throw Error("max_concurrent must be positive");
  if (agent_timeout.count() <= 0) throw Error("agent_timeout must be positive");
  if (max_consecutive_same_tool <= 0) throw Error("max_consecutive_same_tool must be positive");
  if (max_total_tool_calls <= 0) throw Error("max_total_tool_calls must be positive");
}

namespace {

std::chrono::milliseconds parse_timeout(const Json& v) {
  if (v.is_number()) return std::chrono::milliseconds(static_cast<std::int64_t>(v.get<double>() * 1000.0));
  if (!v.is_string()) throw ParseError("agent_timeout must be a number of seconds or a string like \"600s\"");
  static const std::regex re(R"(^\s*(\d+(?:\.\d+)?)\s*(ms|s|m)?\s*$)");
  std::smatch m;
  const std::string s = v.get<std::string>();
  if (!std::regex_match(s, m, re)) throw ParseError("unreadable agent_timeout '" + s + "'");
  double amount = std::stod(m[1].str());
  const std::string unit = m[2].matched ? m[2].str() : "s";
  double ms = unit == "ms" ? amount : unit == "m" ? amount * 60000.0 : amount * 1000.0;
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

// Ratios are small rationals computed in floating point; differences such
// as 0.15 - 0.10 land a few ulps off the threshold. Comparisons absorb that.
constexpr double kTolerance = 1e-9;

bool at_least(double value, double threshold) { return value >= threshold - kTolerance; }
bool below(double value, double threshold) { return value < threshold - kTolerance; }

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

void to_json(Json& j, const OrchestrationConfig& c) {
  j = Json{{"max_iterations", c.max_iterations},
           {"token_budget", c.token_budget},
           {"ready_threshold", c.ready_threshold},
           {"high_confidence", c.high_confidence},
           {"high_confidence_min_complete", c.high_confidence_min_complete},
           {"diminishing_returns", c.diminishing_returns},
           {"max_concurrent", c.max_concurrent},
           {"agent_timeout", std::to_string(c.agent_timeout.count()) + "ms"},
           {"max_consecutive_same_tool", c.max_consecutive_same_tool},
           {"max_total_tool_calls", c.max_total_tool_calls}};
}

void from_json(const Json& j, OrchestrationConfig& c) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  static const std::set<std::string> known = {
      "max_iterations",      "token_budget",   "ready_threshold", "high_confidence",
      "high_confidence_min_complete", "diminishing_returns", "max_concurrent", "agent_timeout",
      "max_consecutive_same_tool",    "max_total_tool_calls"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ParseError("unknown config key '" + key + "'");
  }
  c = OrchestrationConfig{};
  try {
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.token_budget = j.value("token_budget", c.token_budget);
    c.ready_threshold = j.value("ready_threshold", c.ready_threshold);
    c.high_confidence = j.value("high_confidence", c.high_confidence);
    c.high_confidence_min_complete = j.value("high_confidence_min_complete", c.high_confidence_min_complete);
    c.diminishing_returns = j.value("diminishing_returns", c.diminishing_returns);
    c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
    if (j.contains("agent_timeout")) c.agent_timeout = parse_timeout(j.at("agent_timeout"));
    c.max_consecutive_same_tool = j.value("max_consecutive_same_tool", c.max_consecutive_same_tool);
    c.max_total_tool_calls = j.value("max_total_tool_calls", c.max_total_tool_calls);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

OrchestrationConfig parse_config_text(std::string_view text) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ParseError("config is not valid JSON");
  return doc.get<OrchestrationConfig>();
}

std::string_view to_string(StopOutcome o) noexcept {
  switch (o) {
    case StopOutcome::Continue: return "Continue";
    case StopOutcome::ReadyForSynthesis: return "ReadyForSynthesis";
    case StopOutcome::HighConfidence: return "HighConfidence";
    case StopOutcome::DiminishingReturns: return "DiminishingReturns";
    case StopOutcome::TokenBudget: return "TokenBudget";
    case StopOutcome::MaxIterations: return "MaxIterations";
  }
  return "Continue";
}

std::optional<StopOutcome> parse_stop_outcome(std::string_view s) noexcept {
  for (auto o : {StopOutcome::Continue, StopOutcome::ReadyForSynthesis, StopOutcome::HighConfidence,
                 StopOutcome::DiminishingReturns, StopOutcome::TokenBudget, StopOutcome::MaxIterations}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

void to_json(Json& j, const StopDecision& d) {
  j = Json{{"outcome", std::string(to_string(d.outcome))}, {"detail", d.detail}};
}

void from_json(const Json& j, StopDecision& d) {
  auto o = parse_stop_outcome(j.at("outcome").get<std::string>());
  if (!o) throw ParseError("unknown stop outcome " + j.at("outcome").dump());
  d.outcome = *o;
  d.detail = j.value("detail", std::string{});
}

std::optional<StopDecision> budget_exhausted(std::uint64_t total_tokens, const OrchestrationConfig& config) {
  if (total_tokens < config.token_budget) return std::nullopt;
  return StopDecision{StopOutcome::TokenBudget, "tokens " + std::to_string(total_tokens) + " >= token_budget " +
                                                    std::to_string(config.token_budget)};
}

StopDecision evaluate_stop(const StopInputs& in, const OrchestrationConfig& config) {
  if (auto budget = budget_exhausted(in.total_tokens, config)) return *budget;
  if (in.iteration >= config.max_iterations) {
    return {StopOutcome::MaxIterations, "iteration " + std::to_string(in.iteration) + " >= max_iterations " +
                                            std::to_string(config.max_iterations)};
  }
  if (at_least(in.completeness, config.ready_threshold)) {
    return {StopOutcome::ReadyForSynthesis,
            "completeness " + fmt3(in.completeness) + " >= ready_threshold " + fmt3(config.ready_threshold)};
  }
  if (at_least(in.confidence, config.high_confidence) &&
      at_least(in.completeness, config.high_confidence_min_complete)) {
    return {StopOutcome::HighConfidence, "confidence " + fmt3(in.confidence) + " >= high_confidence " +
                                             fmt3(config.high_confidence) + " and completeness " +
                                             fmt3(in.completeness) + " >= " +
                                             fmt3(config.high_confidence_min_complete)};
  }
  if (in.history.size() >= 2) {
    const double improvement = in.history.back() - in.history[in.history.size() - 2];
    if (below(improvement, config.diminishing_returns)) {
      return {StopOutcome::DiminishingReturns,
              "improvement " + fmt3(improvement) + " < diminishing_returns " + fmt3(config.diminishing_returns)};
    }
  }
  return {StopOutcome::Continue, {}};
}

StopDecision evaluate_stop(const OrchestrationState& state, const OrchestrationConfig& config) {
  StopInputs in;
  in.total_tokens = state.ledger.total();
  in.iteration = state.iteration;
  in.completeness = completeness_ratio(state.records);
  in.confidence = mean_confidence(state.records);
  in.history = state.completeness_history;
  return evaluate_stop(in, config);
}

}  // namespace dagorch
