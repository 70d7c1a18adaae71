// SPDX-License-Identifier: Apache-2.0
#include "dagorch/records.hpp"

#include <algorithm>

#include "dagorch/error.hpp"

namespace dagorch {

std::string_view to_string(VerificationStatus s) noexcept {
  switch (s) {
    case VerificationStatus::Complete: return "complete";
    case VerificationStatus::Partial: return "partial";
    case VerificationStatus::Incomplete: return "incomplete";
  }
  return "incomplete";
}

std::string_view to_string(Recommendation r) noexcept {
  switch (r) {
    case Recommendation::Accept: return "accept";
    case Recommendation::Retry: return "retry";
    case Recommendation::Escalate: return "escalate";
  }
  return "retry";
}

std::optional<VerificationStatus> parse_status(std::string_view s) noexcept {
  for (auto v : {VerificationStatus::Complete, VerificationStatus::Partial, VerificationStatus::Incomplete}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<Recommendation> parse_recommendation(std::string_view s) noexcept {
  for (auto v : {Recommendation::Accept, Recommendation::Retry, Recommendation::Escalate}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

VerificationRecord normalized(VerificationRecord record) {
  record.completeness_score = std::clamp(record.completeness_score, 0.0, 1.0);
  record.confidence = std::clamp(record.confidence, 0.0, 1.0);
  if (record.complete()) record.recommendation = Recommendation::Accept;
  return record;
}

VerificationRecord synthetic_incomplete(std::string sub_question_id, std::string reason) {
  VerificationRecord r;
  r.sub_question_id = std::move(sub_question_id);
  r.status = VerificationStatus::Incomplete;
  r.completeness_score = 0.0;
  r.confidence = 0.0;
  r.recommendation = Recommendation::Retry;
  r.missing_aspects.push_back(std::move(reason));
  return r;
}

void to_json(Json& j, const VerificationRecord& r) {
  j = Json{{"sub_question_id", r.sub_question_id},
           {"verification_status", std::string(to_string(r.status))},
           {"completeness_score", r.completeness_score},
           {"missing_aspects", r.missing_aspects},
           {"contradictions", r.contradictions},
           {"confidence", r.confidence},
           {"recommendation", std::string(to_string(r.recommendation))}};
}

void from_json(const Json& j, VerificationRecord& r) {
  try {
    r.sub_question_id = j.value("sub_question_id", std::string{});
    auto status = parse_status(j.at("verification_status").get<std::string>());
    if (!status) throw ParseError("unknown verification_status " + j.at("verification_status").dump());
    r.status = *status;
    r.completeness_score = j.value("completeness_score", 0.0);
    r.missing_aspects = j.value("missing_aspects", std::vector<std::string>{});
    r.contradictions = j.value("contradictions", std::vector<std::string>{});
    r.confidence = j.value("confidence", 0.0);
    auto rec = parse_recommendation(j.value("recommendation", std::string("retry")));
    if (!rec) throw ParseError("unknown recommendation " + j.at("recommendation").dump());
    r.recommendation = *rec;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("verification record: ") + e.what());
  }
}

void to_json(Json& j, const ReplanDecision& d) {
  j = Json{{"retry_sub_questions", d.retry_sub_questions},
           {"new_sub_questions", d.new_sub_questions},
           {"explanation", d.explanation},
           {"done", d.done}};
}

void from_json(const Json& j, ReplanDecision& d) {
  try {
    d.retry_sub_questions = j.value("retry_sub_questions", std::vector<std::string>{});
    d.new_sub_questions.clear();
    if (j.contains("new_sub_questions")) {
      for (const auto& item : j.at("new_sub_questions")) d.new_sub_questions.push_back(item.get<SubQuestion>());
    }
    d.explanation = j.value("explanation", std::string{});
    d.done = j.value("done", false);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("replan decision: ") + e.what());
  }
}

void to_json(Json& j, const KeyFinding& f) { j = Json{{"finding", f.text}, {"citations", f.citations}}; }

void from_json(const Json& j, KeyFinding& f) {
  f.text = j.at("finding").get<std::string>();
  f.citations = j.value("citations", std::vector<Source>{});
}

void to_json(Json& j, const FinalAnswer& a) {
  j = Json{{"answer",
            {{"executive_summary", a.executive_summary},
             {"analysis", a.analysis},
             {"conclusions", a.conclusions}}},
           {"key_findings", a.key_findings},
           {"confidence", a.confidence},
           {"sources", a.sources},
           {"gaps", a.gaps}};
}

void from_json(const Json& j, FinalAnswer& a) {
  try {
    const Json& answer = j.at("answer");
    if (answer.is_string()) {
      a.executive_summary = answer.get<std::string>();
      a.analysis.clear();
      a.conclusions.clear();
    } else {
      a.executive_summary = answer.value("executive_summary", std::string{});
      a.analysis = answer.value("analysis", std::string{});
      a.conclusions = answer.value("conclusions", std::string{});
    }
    a.key_findings = j.value("key_findings", std::vector<KeyFinding>{});
    a.confidence = j.value("confidence", 0.0);
    a.sources = j.value("sources", std::vector<Source>{});
    a.gaps = j.value("gaps", std::vector<std::string>{});
  } catch (const Json::exception& e) {
    throw ParseError(std::string("final answer: ") + e.what());
  }
}

}  // namespace dagorch
