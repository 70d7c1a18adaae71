// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dagorch/plan.hpp"
#include "dagorch/result.hpp"

namespace dagorch {

enum class VerificationStatus { Complete, Partial, Incomplete };
enum class Recommendation { Accept, Retry, Escalate };

std::string_view to_string(VerificationStatus s) noexcept;
std::string_view to_string(Recommendation r) noexcept;
std::optional<VerificationStatus> parse_status(std::string_view s) noexcept;
std::optional<Recommendation> parse_recommendation(std::string_view s) noexcept;

struct VerificationRecord {
  std::string sub_question_id;
  VerificationStatus status = VerificationStatus::Incomplete;
  double completeness_score = 0.0;
  std::vector<std::string> missing_aspects;
  std::vector<std::string> contradictions;
  double confidence = 0.0;
  Recommendation recommendation = Recommendation::Retry;

  bool complete() const noexcept { return status == VerificationStatus::Complete; }
  bool operator==(const VerificationRecord&) const = default;
};

// Scores and confidence clamped into [0, 1]; a Complete status forces
// recommendation Accept.
VerificationRecord normalized(VerificationRecord record);

// Stand-in for a verification that could not be obtained.
VerificationRecord synthetic_incomplete(std::string sub_question_id, std::string reason);

struct ReplanDecision {
  std::vector<std::string> retry_sub_questions;
  std::vector<SubQuestion> new_sub_questions;
  std::string explanation;
  bool done = false;

  bool has_actions() const noexcept { return !retry_sub_questions.empty() || !new_sub_questions.empty(); }
  bool operator==(const ReplanDecision&) const = default;
};

struct KeyFinding {
  std::string text;
  std::vector<Source> citations;

  bool operator==(const KeyFinding&) const = default;
};

struct FinalAnswer {
  std::string executive_summary;
  std::vector<KeyFinding> key_findings;
  std::string analysis;
  std::string conclusions;
  double confidence = 0.0;
  std::vector<Source> sources;
  std::vector<std::string> gaps;

  bool operator==(const FinalAnswer&) const = default;
};

// Wire field names: verification_status, completeness_score,
// missing_aspects, contradictions, confidence, recommendation (enums in
// lower case).
void to_json(Json& j, const VerificationRecord& r);
void from_json(const Json& j, VerificationRecord& r);

// retry_sub_questions, new_sub_questions, explanation, done.
void to_json(Json& j, const ReplanDecision& d);
void from_json(const Json& j, ReplanDecision& d);

// answer{executive_summary, key_findings, analysis, conclusions},
// key_findings[{finding, citations}], confidence, sources, gaps.
void to_json(Json& j, const KeyFinding& f);
void from_json(const Json& j, KeyFinding& f);
void to_json(Json& j, const FinalAnswer& a);
void from_json(const Json& j, FinalAnswer& a);

}  // namespace dagorch
