// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "dagorch/error.hpp"
#include "dagorch/verification.hpp"
#include "support.hpp"

using namespace dagorch;
using namespace dagorch::testing;
using Rational = boost::multiprecision::cpp_rational;

namespace {

ExecutionPlan plan_ab() {
  SubQuestion a{"a", "QA", AgentType::Rag, {}, 5, false, "names two drivers"};
  SubQuestion b{"b", "QB", AgentType::WebSearch, {"a"}, 5, false, ""};
  return ExecutionPlan{{a, b}, ""};
}

AgentResult result(const std::string& id, const std::string& content) {
  AgentResult r;
  r.sub_question_id = id;
  r.content = content;
  return r;
}

VerificationRecord record(const std::string& id, VerificationStatus s, double confidence = 0.5) {
  VerificationRecord r;
  r.sub_question_id = id;
  r.status = s;
  r.confidence = confidence;
  r.recommendation = s == VerificationStatus::Complete ? Recommendation::Accept : Recommendation::Retry;
  return r;
}

// Maps "FULL" to score 1.0 and "HALF" to 0.5; counts calls per id.
std::shared_ptr<LambdaVerifier> scripted(std::shared_ptr<std::map<std::string, int>> calls) {
  return std::make_shared<LambdaVerifier>([calls](const VerifyRequest& req) {
    ++(*calls)[req.sub_question.id];
    VerificationRecord r;
    if (req.result.content.find("FULL") != std::string::npos) {
      r.status = VerificationStatus::Complete;
      r.completeness_score = 1.0;
      r.confidence = 0.9;
      r.recommendation = Recommendation::Accept;
    } else {
      r.status = VerificationStatus::Partial;
      r.completeness_score = 0.5;
      r.confidence = 0.4;
      r.recommendation = Recommendation::Retry;
      r.missing_aspects = {"second half"};
    }
    return VerifyResponse{r, 7};
  });
}

}  // namespace

TEST(VerifyResults, CompletePriorRecordsAreReusedWithoutABackendCall) {
  auto calls = std::make_shared<std::map<std::string, int>>();
  auto v = scripted(calls);
  auto out = verify_results(plan_ab(), {{"a", result("a", "HALF")}, {"b", result("b", "HALF")}},
                            {{"a", record("a", VerificationStatus::Complete)}}, *v);
  EXPECT_EQ(calls->count("a"), 0u);
  EXPECT_EQ(calls->at("b"), 1);
  EXPECT_TRUE(out.records.at("a").complete());
  EXPECT_EQ(out.reused, (std::set<std::string>{"a"}));
  EXPECT_EQ(out.backend_calls, 1);
  EXPECT_EQ(out.tokens, 7u);
}

TEST(VerifyResults, TimedOutResultGetsSyntheticIncompleteWithoutBackend) {
  auto calls = std::make_shared<std::map<std::string, int>>();
  auto v = scripted(calls);
  auto out = verify_results(plan_ab(), {{"a", failure_result("a", 1, trace::kTimeout)}}, {}, *v);
  const auto& r = out.records.at("a");
  EXPECT_EQ(r.status, VerificationStatus::Incomplete);
  EXPECT_EQ(r.recommendation, Recommendation::Retry);
  EXPECT_EQ(r.completeness_score, 0.0);
  EXPECT_EQ(r.confidence, 0.0);
  EXPECT_TRUE(calls->empty());
}

TEST(VerifyResults, RecordsEchoTheScript) {
  auto calls = std::make_shared<std::map<std::string, int>>();
  auto v = scripted(calls);
  auto out = verify_results(plan_ab(), {{"a", result("a", "FULL")}, {"b", result("b", "HALF")}}, {}, *v);
  EXPECT_EQ(out.records.at("a").completeness_score, 1.0);
  EXPECT_EQ(out.records.at("a").status, VerificationStatus::Complete);
  EXPECT_EQ(out.records.at("b").completeness_score, 0.5);
  EXPECT_EQ(out.records.at("b").missing_aspects, std::vector<std::string>{"second half"});
  EXPECT_EQ(out.records.at("b").sub_question_id, "b");
}

TEST(VerifyResults, BackendSeesCriteriaAndDependencyContent) {
  std::string criteria, dep;
  LambdaVerifier v([&](const VerifyRequest& req) {
    if (req.sub_question.id == "a") criteria = req.sub_question.verification_criteria;
    if (req.sub_question.id == "b") dep = req.dependency_results.at("a");
    return VerifyResponse{record(req.sub_question.id, VerificationStatus::Complete), 0};
  });
  verify_results(plan_ab(), {{"a", result("a", "alpha")}, {"b", result("b", "beta")}}, {}, v);
  EXPECT_EQ(criteria, "names two drivers");
  EXPECT_EQ(dep, "alpha");
}

TEST(VerifyResults, BackendFaultDegradesToSyntheticRecord) {
  LambdaVerifier v([](const VerifyRequest&) -> VerifyResponse { throw BackendError("verifier", "down"); });
  auto out = verify_results(plan_ab(), {{"a", result("a", "x")}}, {}, v);
  EXPECT_EQ(out.records.at("a").status, VerificationStatus::Incomplete);
  EXPECT_EQ(out.records.at("a").recommendation, Recommendation::Retry);
}

TEST(VerifyResults, OutOfRangeScoresAreClampedAndCompleteForcesAccept) {
  LambdaVerifier v([](const VerifyRequest& req) {
    VerificationRecord r = record(req.sub_question.id, VerificationStatus::Complete);
    r.completeness_score = 1.7;
    r.confidence = -0.2;
    r.recommendation = Recommendation::Retry;
    return VerifyResponse{r, 0};
  });
  auto out = verify_results(plan_ab(), {{"a", result("a", "x")}}, {}, v);
  EXPECT_EQ(out.records.at("a").completeness_score, 1.0);
  EXPECT_EQ(out.records.at("a").confidence, 0.0);
  EXPECT_EQ(out.records.at("a").recommendation, Recommendation::Accept);
}

TEST(VerifyResults, CoverageAndIdempotenceOnCompleteRecords) {
  std::mt19937_64 rng(8);
  auto calls = std::make_shared<std::map<std::string, int>>();
  auto v = scripted(calls);
  for (int round = 0; round < 200; ++round) {
    auto p = random_dag(rng, 1 + static_cast<int>(rng() % 12), 0.2);
    std::map<std::string, AgentResult> results;
    for (const auto& s : p.sub_questions) {
      if (rng() % 4 == 0) continue;
      results[s.id] = result(s.id, rng() % 2 ? "FULL" : "HALF");
    }
    auto first = verify_results(p, results, {}, *v);
    ASSERT_EQ(first.records.size(), results.size());
    auto second = verify_results(p, results, first.records, *v);
    for (const auto& [id, r] : first.records) {
      if (r.complete()) ASSERT_EQ(second.records.at(id), r);
    }
    const double ratio = completeness_ratio(second.records);
    ASSERT_GE(ratio, 0.0);
    ASSERT_LE(ratio, 1.0);
  }
}

TEST(CompletenessRatio, CountsCompleteRecords) {
  std::map<std::string, VerificationRecord> m;
  for (int i = 0; i < 5; ++i) {
    auto id = "s" + std::to_string(i);
    m[id] = record(id, i < 4 ? VerificationStatus::Complete : VerificationStatus::Partial);
  }
  EXPECT_DOUBLE_EQ(completeness_ratio(m), 0.8);
  m["s4"].status = VerificationStatus::Complete;
  EXPECT_EQ(completeness_ratio(m), 1.0);
  EXPECT_EQ(completeness_ratio({}), 0.0);
}

TEST(CompletenessRatio, OneOfThreeMatchesExactRational) {
  std::map<std::string, VerificationRecord> m{{"a", record("a", VerificationStatus::Complete)},
                                              {"b", record("b", VerificationStatus::Incomplete)},
                                              {"c", record("c", VerificationStatus::Partial)}};
  const Rational exact(1, 3);
  EXPECT_NEAR(completeness_ratio(m), exact.convert_to<double>(), 1e-9);
}

TEST(CompletenessRatio, EscalatedRecordsAreNotComplete) {
  auto r = record("a", VerificationStatus::Partial);
  r.recommendation = Recommendation::Escalate;
  EXPECT_EQ(completeness_ratio({{"a", r}}), 0.0);
}

TEST(MeanConfidence, ArithmeticMean) {
  EXPECT_DOUBLE_EQ(mean_confidence({{"a", record("a", VerificationStatus::Partial, 0.5)},
                                    {"b", record("b", VerificationStatus::Partial, 1.0)}}),
                   0.75);
  EXPECT_DOUBLE_EQ(mean_confidence({{"a", record("a", VerificationStatus::Partial, 0.75)},
                                    {"b", record("b", VerificationStatus::Partial, 0.75)},
                                    {"c", record("c", VerificationStatus::Partial, 0.75)}}),
                   0.75);
  EXPECT_EQ(mean_confidence({}), 0.0);
}

TEST(MeanConfidence, MatchesRationalSummationOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (int round = 0; round < 1000; ++round) {
    const int n = 1 + static_cast<int>(rng() % 100);
    std::map<std::string, VerificationRecord> m;
    Rational sum = 0;
    for (int i = 0; i < n; ++i) {
      auto id = node_id(i);
      m[id] = record(id, VerificationStatus::Partial, conf(rng));
      sum += Rational(m[id].confidence);  // exact binary value
    }
    const double oracle = Rational(sum / n).convert_to<double>();
    const double got = mean_confidence(m);
    ASSERT_NEAR(got, oracle, 1e-12);
    ASSERT_GE(got, 0.0);
    ASSERT_LE(got, 1.0);
  }
}

TEST(VerificationRecordJson, UsesTheWireFieldNames) {
  auto r = record("a", VerificationStatus::Partial, 0.4);
  r.completeness_score = 0.6;
  r.missing_aspects = {"x"};
  Json j = r;
  EXPECT_EQ(j.at("verification_status"), "partial");
  EXPECT_EQ(j.at("completeness_score"), 0.6);
  EXPECT_EQ(j.at("recommendation"), "retry");
  EXPECT_EQ(j.get<VerificationRecord>(), r);
}
