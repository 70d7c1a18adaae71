// SPDX-License-Identifier: Apache-2.0
#include "dagorch/plan.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "dagorch/error.hpp"

namespace dagorch {

Tier tier_of(AgentType type) noexcept {
  switch (type) {
    case AgentType::Rag:
    case AgentType::WebSearch:
    case AgentType::Financial:
    case AgentType::Competitor:
      return Tier::DataGathering;
    case AgentType::Analysis:
    case AgentType::Reasoning:
    case AgentType::RawData:
      return Tier::Analysis;
    case AgentType::Document:
    case AgentType::Visualization:
      return Tier::Output;
  }
  return Tier::Output;
}

std::string_view to_string(AgentType type) noexcept {
  switch (type) {
    case AgentType::Rag: return "rag";
    case AgentType::WebSearch: return "web_search";
    case AgentType::Financial: return "financial";
    case AgentType::Competitor: return "competitor";
    case AgentType::Analysis: return "analysis";
    case AgentType::Reasoning: return "reasoning";
    case AgentType::RawData: return "raw_data";
    case AgentType::Document: return "document";
    case AgentType::Visualization: return "visualization";
  }
  return "unknown";
}

std::string_view to_string(Tier tier) noexcept {
  switch (tier) {
    case Tier::DataGathering: return "data_gathering";
    case Tier::Analysis: return "analysis";
    case Tier::Output: return "output";
  }
  return "unknown";
}

std::optional<AgentType> parse_agent_type(std::string_view name) noexcept {
  for (AgentType t : kAllAgentTypes) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

const SubQuestion* ExecutionPlan::find(std::string_view id) const noexcept {
  for (const auto& sq : sub_questions) {
    if (sq.id == id) return &sq;
  }
  return nullptr;
}

std::set<std::string> ExecutionPlan::ids() const {
  std::set<std::string> out;
  for (const auto& sq : sub_questions) out.insert(sq.id);
  return out;
}

std::string_view to_string(PlanViolation::Kind kind) noexcept {
  using K = PlanViolation::Kind;
  switch (kind) {
    case K::EmptyPlan: return "empty_plan";
    case K::EmptyId: return "empty_id";
    case K::DuplicateId: return "duplicate_id";
    case K::EmptyQuestion: return "empty_question";
    case K::PriorityOutOfRange: return "priority_out_of_range";
    case K::SelfDependency: return "self_dependency";
    case K::DanglingDependency: return "dangling_dependency";
    case K::Cycle: return "cycle";
  }
  return "unknown";
}

std::string ValidationReport::describe() const {
  if (ok()) return "ok\n";
  std::ostringstream os;
  for (const auto& v : violations) {
    os << to_string(v.kind) << ": " << v.message << '\n';
  }
  return os.str();
}

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// Strongly connected components with more than one member (Tarjan).
std::vector<std::vector<std::string>> find_cycles(
    const std::map<std::string, std::vector<std::string>>& edges) {
  std::map<std::string, int> index;
  std::map<std::string, int> low;
  std::set<std::string> on_stack;
  std::vector<std::string> stack;
  std::vector<std::vector<std::string>> cycles;
  int counter = 0;

  std::function<void(const std::string&)> connect = [&](const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& w : edges.at(v)) {
      if (!index.contains(w)) {
        connect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.contains(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::string> component;
      std::string w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        component.push_back(w);
      } while (w != v);
      if (component.size() > 1) {
        std::sort(component.begin(), component.end());
        cycles.push_back(std::move(component));
      }
    }
  };

  for (const auto& [v, _] : edges) {
    if (!index.contains(v)) connect(v);
  }
  std::sort(cycles.begin(), cycles.end());
  return cycles;
}

}  // namespace

ValidationReport validate_plan(const ExecutionPlan& plan) {
  using K = PlanViolation::Kind;
  ValidationReport report;
  auto& out = report.violations;

  if (plan.sub_questions.empty()) {
    out.push_back({K::EmptyPlan, {}, "plan contains no sub-questions"});
    return report;
  }

  // Iterate in id order so the report does not depend on input order.
  std::vector<const SubQuestion*> sorted;
  for (const auto& sq : plan.sub_questions) sorted.push_back(&sq);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SubQuestion* a, const SubQuestion* b) { return a->id < b->id; });

  std::map<std::string, int> counts;
  for (const auto* sq : sorted) ++counts[sq->id];

  for (const auto& [id, n] : counts) {
    if (id.empty()) {
      out.push_back({K::EmptyId, {}, "sub-question with empty id"});
    } else if (n > 1) {
      out.push_back({K::DuplicateId, {id}, "id " + id + " appears " + std::to_string(n) + " times"});
    }
  }

  std::map<std::string, std::vector<std::string>> edges;
  for (const auto* sq : sorted) {
    if (sq->id.empty()) continue;
    auto& deps = edges[sq->id];
    if (sq->question.empty()) {
      out.push_back({K::EmptyQuestion, {sq->id}, sq->id + " has empty question text"});
    }
    if (sq->priority < kMinPriority || sq->priority > kMaxPriority) {
      out.push_back({K::PriorityOutOfRange, {sq->id},
                     sq->id + " priority " + std::to_string(sq->priority) + " outside [1, 10]"});
    }
    for (const auto& d : sq->dependencies) {
      if (d == sq->id) {
        out.push_back({K::SelfDependency, {sq->id}, sq->id + " depends on itself"});
      } else if (!counts.contains(d)) {
        out.push_back({K::DanglingDependency, {sq->id, d}, sq->id + " -> " + d + " (no such sub-question)"});
      } else {
        deps.push_back(d);
      }
    }
  }

  for (auto& cycle : find_cycles(edges)) {
    std::string msg = "cycle among {" + join(cycle, ", ") + "}";
    out.push_back({K::Cycle, std::move(cycle), std::move(msg)});
  }
  return report;
}

void require_valid(const ExecutionPlan& plan) {
  auto report = validate_plan(plan);
  if (!report.ok()) throw PlanError("invalid plan:\n" + report.describe());
}

std::vector<std::set<std::string>> wave_decomposition(const ExecutionPlan& plan) {
  require_valid(plan);
  std::map<std::string, int> level;
  std::function<int(const SubQuestion&)> depth = [&](const SubQuestion& sq) -> int {
    if (auto it = level.find(sq.id); it != level.end()) return it->second;
    int d = 0;
    for (const auto& dep : sq.dependencies) d = std::max(d, depth(*plan.find(dep)) + 1);
    level[sq.id] = d;
    return d;
  };
  std::vector<std::set<std::string>> waves;
  for (const auto& sq : plan.sub_questions) {
    auto d = static_cast<std::size_t>(depth(sq));
    if (waves.size() <= d) waves.resize(d + 1);
    waves[d].insert(sq.id);
  }
  return waves;
}

void to_json(Json& j, const SubQuestion& sq) {
  j = Json{{"id", sq.id},
           {"question", sq.question},
           {"agent_type", std::string(to_string(sq.agent_type))},
           {"dependencies", sq.dependencies},
           {"priority", sq.priority},
           {"context_from_deps", sq.context_from_deps},
           {"verification_criteria", sq.verification_criteria}};
}

void from_json(const Json& j, SubQuestion& sq) {
  if (!j.is_object()) throw ParseError("sub-question must be an object");
  try {
    sq.id = j.at("id").get<std::string>();
    sq.question = j.at("question").get<std::string>();
    auto type_name = j.at("agent_type").get<std::string>();
    auto type = parse_agent_type(type_name);
    if (!type) throw ParseError("sub-question " + sq.id + ": unknown agent_type '" + type_name + "'");
    sq.agent_type = *type;
    sq.dependencies.clear();
    if (j.contains("dependencies")) {
      for (const auto& d : j.at("dependencies")) sq.dependencies.insert(d.get<std::string>());
    }
    sq.priority = j.value("priority", kDefaultPriority);
    sq.context_from_deps = j.value("context_from_deps", false);
    sq.verification_criteria = j.value("verification_criteria", std::string{});
  } catch (const Json::exception& e) {
    throw ParseError(std::string("sub-question: ") + e.what());
  }
}

void to_json(Json& j, const ExecutionPlan& plan) {
  j = Json{{"sub_questions", plan.sub_questions}, {"explanation", plan.explanation}};
}

void from_json(const Json& j, ExecutionPlan& plan) {
  if (!j.is_object() || !j.contains("sub_questions") || !j.at("sub_questions").is_array()) {
    throw ParseError("plan document needs a 'sub_questions' array");
  }
  plan.sub_questions.clear();
  for (const auto& item : j.at("sub_questions")) plan.sub_questions.push_back(item.get<SubQuestion>());
  plan.explanation = j.value("explanation", std::string{});
}

ExecutionPlan parse_plan(const Json& doc) { return doc.get<ExecutionPlan>(); }

ExecutionPlan parse_plan_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("plan is not valid JSON: ") + e.what());
  }
  return parse_plan(doc);
}

}  // namespace dagorch
