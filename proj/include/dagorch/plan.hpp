// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dagorch {

using Json = nlohmann::json;

enum class Tier { DataGathering, Analysis, Output };

// Declaration order is the canonical enumeration order (used for group
// synthesis and any other per-type iteration).
enum class AgentType {
  Rag,
  WebSearch,
  Financial,
  Competitor,
  Analysis,
  Reasoning,
  RawData,
  Document,
  Visualization,
};

inline constexpr std::array<AgentType, 9> kAllAgentTypes = {
    AgentType::Rag,      AgentType::WebSearch, AgentType::Financial,
    AgentType::Competitor, AgentType::Analysis, AgentType::Reasoning,
    AgentType::RawData,  AgentType::Document,  AgentType::Visualization,
};

Tier tier_of(AgentType type) noexcept;

// lower_snake_case wire names ("rag", "web_search", ...).
std::string_view to_string(AgentType type) noexcept;
std::string_view to_string(Tier tier) noexcept;
std::optional<AgentType> parse_agent_type(std::string_view name) noexcept;

inline constexpr int kMinPriority = 1;
inline constexpr int kMaxPriority = 10;
inline constexpr int kDefaultPriority = 5;

struct SubQuestion {
  std::string id;
  std::string question;
  AgentType agent_type = AgentType::Rag;
  std::set<std::string> dependencies;
  int priority = kDefaultPriority;
  bool context_from_deps = false;
  std::string verification_criteria;

  bool operator==(const SubQuestion&) const = default;
};

struct ExecutionPlan {
  std::vector<SubQuestion> sub_questions;
  std::string explanation;

  const SubQuestion* find(std::string_view id) const noexcept;
  std::set<std::string> ids() const;
  bool contains(std::string_view id) const noexcept { return find(id) != nullptr; }

  bool operator==(const ExecutionPlan&) const = default;
};

struct PlanViolation {
  enum class Kind { EmptyPlan, EmptyId, DuplicateId, EmptyQuestion, PriorityOutOfRange, SelfDependency, DanglingDependency, Cycle };

  Kind kind;
  // Offending ids: the sub-question (and the missing target for dangling
  // references, or every member for a cycle).
  std::vector<std::string> ids;
  std::string message;
};

std::string_view to_string(PlanViolation::Kind kind) noexcept;

struct ValidationReport {
  std::vector<PlanViolation> violations;

  bool ok() const noexcept { return violations.empty(); }
  // One violation per line; "ok" when there are none.
  std::string describe() const;
};

// Collects every violation; never throws.
ValidationReport validate_plan(const ExecutionPlan& plan);

// Throws PlanError listing the violations if the plan is invalid.
void require_valid(const ExecutionPlan& plan);

// Layered decomposition: wave 0 holds the dependency-free sub-questions,
// wave n those whose deepest dependency sits in wave n-1. Ids inside a wave
// are sorted. Throws PlanError on an invalid plan.
std::vector<std::set<std::string>> wave_decomposition(const ExecutionPlan& plan);

// JSON encoding. Field names follow the planner output schema; agent types
// are lower_snake_case; a missing priority defaults to 5; duplicate
// dependency entries collapse.
void to_json(Json& j, const SubQuestion& sq);
void from_json(const Json& j, SubQuestion& sq);
void to_json(Json& j, const ExecutionPlan& plan);
void from_json(const Json& j, ExecutionPlan& plan);

// Throws ParseError with the offending field in the message.
ExecutionPlan parse_plan(const Json& doc);
ExecutionPlan parse_plan_text(std::string_view text);

}  // namespace dagorch
