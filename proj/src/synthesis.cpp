// SPDX-License-Identifier: Apache-2.0
#include "dagorch/synthesis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "dagorch/error.hpp"
#include "dagorch/verification.hpp"

namespace dagorch {

bool needs_hierarchical(const std::map<std::string, AgentResult>& results) {
  if (results.size() >= kHierarchicalResultThreshold) return true;
  std::size_t chars = 0;
  for (const auto& [_, r] : results) chars += r.content.size();
  return chars > kHierarchicalCharThreshold;
}

std::map<AgentType, std::vector<AgentResult>> group_by_agent_type(const ExecutionPlan& plan,
                                                                  const std::map<std::string, AgentResult>& results) {
  for (const auto& [id, _] : results) {
    if (!plan.contains(id)) throw InternalError("result for unknown sub-question " + id);
  }
  std::map<AgentType, std::vector<AgentResult>> groups;
  for (const auto& sq : plan.sub_questions) {
    if (auto it = results.find(sq.id); it != results.end()) groups[sq.agent_type].push_back(it->second);
  }
  return groups;
}

namespace {

constexpr std::size_t kExcerptChars = 400;

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

SynthesisItem item_for(const AgentResult& r, AgentType type) {
  return {r.sub_question_id + " (" + std::string(to_string(type)) + ")", r.content, r.sources};
}

std::string verification_summary(const ExecutionPlan& plan, const std::map<std::string, VerificationRecord>& records) {
  std::string out;
  for (const auto& sq : plan.sub_questions) {
    auto it = records.find(sq.id);
    if (it == records.end()) continue;
    out += sq.id + ": " + std::string(to_string(it->second.status)) + " (score " +
           fmt2(it->second.completeness_score) + ", confidence " + fmt2(it->second.confidence) + ")\n";
  }
  return out;
}

SynthesisItem condensed(AgentType type, const FinalAnswer& summary, const std::vector<AgentResult>& group) {
  SynthesisItem item{"group " + std::string(to_string(type)), summary.executive_summary, {}};
  for (const auto& f : summary.key_findings) item.content += "\n- " + f.text;
  if (!summary.analysis.empty()) item.content += "\n" + summary.analysis;
  for (const auto& r : group) append_unique(item.sources, r.sources);
  return item;
}

SynthesisItem fallback_summary(AgentType type, const std::vector<AgentResult>& group) {
  SynthesisItem item{"group " + std::string(to_string(type)), {}, {}};
  for (const auto& r : group) {
    item.content += "[" + r.sub_question_id + "] " + r.content.substr(0, kExcerptChars) + "\n";
    append_unique(item.sources, r.sources);
  }
  return item;
}

bool contains_source(const std::vector<Source>& sources, const Source& s) {
  return std::any_of(sources.begin(), sources.end(), [&](const Source& e) { return e.same_target(s); });
}

void enforce_attribution(FinalAnswer& answer, const std::vector<Source>& run_sources) {
  answer.sources = run_sources;
  for (auto& f : answer.key_findings) {
    std::vector<Source> kept;
    for (const auto& c : f.citations) {
      if (contains_source(run_sources, c) && !contains_source(kept, c)) kept.push_back(c);
    }
    f.citations = std::move(kept);
  }
  std::erase_if(answer.key_findings, [](const KeyFinding& f) { return f.citations.empty(); });
}

std::vector<std::string> gaps_for(const ExecutionPlan& plan, const std::map<std::string, VerificationRecord>& records) {
  std::vector<std::string> gaps;
  for (const auto& sq : plan.sub_questions) {
    auto it = records.find(sq.id);
    if (it == records.end()) {
      gaps.push_back(sq.id + ": not verified");
    } else if (!it->second.complete()) {
      std::string g = sq.id + ": " + std::string(to_string(it->second.status));
      if (!it->second.missing_aspects.empty()) {
        g += "; missing ";
        for (std::size_t i = 0; i < it->second.missing_aspects.size(); ++i) {
          if (i) g += ", ";
          g += it->second.missing_aspects[i];
        }
      }
      gaps.push_back(std::move(g));
    }
  }
  return gaps;
}

}  // namespace

SynthesisOutcome synthesize(std::string_view query, const ExecutionPlan& plan,
                            const std::map<std::string, AgentResult>& results,
                            const std::map<std::string, VerificationRecord>& records, SynthesizerBackend& backend) {
  if (results.empty()) throw InternalError("synthesis needs at least one result");
  SynthesisOutcome out;
  const auto groups = group_by_agent_type(plan, results);
  const std::string summary = verification_summary(plan, records);

  std::vector<Source> run_sources;
  for (const auto& [_, group] : groups) {
    for (const auto& r : group) append_unique(run_sources, r.sources);
  }

  SynthesisRequest final_request;
  final_request.query = std::string(query);
  final_request.verification_summary = summary;

  out.hierarchical = needs_hierarchical(results);
  if (out.hierarchical) {
    final_request.stage = SynthesisStage::Integrate;
    for (const auto& [type, group] : groups) {
      SynthesisRequest request{SynthesisStage::Group, std::string(query), type, {}, summary};
      for (const auto& r : group) request.items.push_back(item_for(r, type));
      try {
        ++out.backend_calls;
        SynthesisResponse response = backend.synthesize(request);
        out.tokens += response.tokens;
        final_request.items.push_back(condensed(type, response.answer, group));
      } catch (const std::exception&) {
        out.fallback_groups.push_back(type);
        final_request.items.push_back(fallback_summary(type, group));
      }
    }
  } else {
    final_request.stage = SynthesisStage::Single;
    for (const auto& [type, group] : groups) {
      for (const auto& r : group) final_request.items.push_back(item_for(r, type));
    }
  }

  ++out.backend_calls;
  SynthesisResponse response;
  try {
    response = backend.synthesize(final_request);
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError("synthesis", e.what());
  }
  out.tokens += response.tokens;
  out.answer = std::move(response.answer);
  if (!response.has_confidence) out.answer.confidence = mean_confidence(records);
  out.answer.confidence = std::clamp(out.answer.confidence, 0.0, 1.0);
  enforce_attribution(out.answer, run_sources);

  std::vector<std::string> gaps = gaps_for(plan, records);
  for (auto& g : out.answer.gaps) {
    if (std::find(gaps.begin(), gaps.end(), g) == gaps.end()) gaps.push_back(std::move(g));
  }
  out.answer.gaps = std::move(gaps);
  return out;
}

std::string render_answer(const FinalAnswer& answer) {
  std::ostringstream os;
  os << "Executive summary:\n  " << answer.executive_summary << "\n";
  os << "Key findings:\n";
  for (std::size_t i = 0; i < answer.key_findings.size(); ++i) {
    const auto& f = answer.key_findings[i];
    os << "  " << (i + 1) << ". " << f.text;
    for (const auto& c : f.citations) os << " " << c.citation();
    os << "\n";
  }
  if (!answer.analysis.empty()) os << "Analysis:\n  " << answer.analysis << "\n";
  if (!answer.conclusions.empty()) os << "Conclusions:\n  " << answer.conclusions << "\n";
  os << "Confidence: " << fmt2(answer.confidence) << "\n";
  os << "Sources:\n";
  for (const auto& s : answer.sources) os << "  - " << s.citation() << "\n";
  os << "Gaps:\n";
  if (answer.gaps.empty()) os << "  (none)\n";
  for (const auto& g : answer.gaps) os << "  - " << g << "\n";
  return os.str();
}

}  // namespace dagorch
