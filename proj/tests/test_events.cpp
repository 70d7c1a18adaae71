// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <thread>

#include "dagorch/events.hpp"
#include "support.hpp"

using namespace dagorch;

namespace {

std::vector<RunEvent> small_log() {
  EventBus bus(std::make_shared<ManualClock>(100));
  bus.emit(EventKind::RunStarted, {{"query", "q"}});
  bus.emit_at(EventKind::PhaseStarted, {{"phase", "Plan"}, {"iteration", 0}}, 150);
  bus.emit(EventKind::RunFinished, {{"status", "succeeded"}});
  return bus.events();
}

}  // namespace

TEST(EventBus, SequenceNumbersAreGapFreeFromOne) {
  auto events = small_log();
  ASSERT_EQ(events.size(), 3u);
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].sequence, i + 1);
  EXPECT_EQ(events[0].timestamp_ms, 100);
  EXPECT_EQ(events[1].timestamp_ms, 150);
}

TEST(EventBus, ConcurrentProducersStayOrderedForListeners) {
  EventBus bus;
  std::vector<std::uint64_t> seen;
  bus.subscribe([&](const RunEvent& e) { seen.push_back(e.sequence); });
  std::vector<std::thread> producers;
  for (int t = 0; t < 4; ++t) {
    producers.emplace_back([&bus, t] {
      for (int i = 0; i < 250; ++i) bus.emit(EventKind::SubQuestionStarted, {{"producer", t}, {"i", i}});
    });
  }
  for (auto& p : producers) p.join();
  ASSERT_EQ(seen.size(), 1000u);
  for (std::size_t i = 0; i < seen.size(); ++i) ASSERT_EQ(seen[i], i + 1);
  EXPECT_EQ(bus.size(), 1000u);
}

TEST(EventKinds, NamesRoundTrip) {
  for (int k = 0; k <= static_cast<int>(EventKind::RunFinished); ++k) {
    auto kind = static_cast<EventKind>(k);
    EXPECT_EQ(parse_event_kind(to_string(kind)), kind);
  }
  EXPECT_FALSE(parse_event_kind("Nope").has_value());
}

TEST(EventLog, EncodesSseRecords) {
  auto text = encode_event(small_log()[0]);
  EXPECT_EQ(text.rfind("id: 1\nevent: RunStarted\ndata: ", 0), 0u);
  EXPECT_EQ(text.substr(text.size() - 2), "\n\n");
}

TEST(EventLog, DecodeInvertsEncode) {
  auto events = small_log();
  EXPECT_EQ(decode_event_log(encode_event_log(events)), events);
}

TEST(EventLog, TruncationNamesTheFirstBadSequence) {
  auto text = encode_event_log(small_log());
  try {
    decode_event_log(text.substr(0, text.size() - 10));
    FAIL() << "expected EventLogError";
  } catch (const EventLogError& e) {
    EXPECT_EQ(e.bad_sequence(), 3u);
  }
}

TEST(EventLog, RejectsGapsUnknownKindsAndMissingTerminator) {
  auto events = small_log();
  auto gap = events;
  gap.erase(gap.begin() + 1);
  EXPECT_THROW(decode_event_log(encode_event_log(gap)), EventLogError);

  auto text = encode_event_log(events);
  auto pos = text.find("PhaseStarted");
  auto unknown = text;
  unknown.replace(pos, 12, "PhaseSkipped");
  EXPECT_THROW(decode_event_log(unknown), EventLogError);

  events.pop_back();
  try {
    decode_event_log(encode_event_log(events));
    FAIL() << "expected EventLogError";
  } catch (const EventLogError& e) {
    EXPECT_EQ(e.bad_sequence(), 3u);
  }
  EXPECT_THROW(decode_event_log(""), CorruptRecordError);
}

TEST(EventLog, HashIsStableAndSensitive) {
  auto a = small_log();
  auto b = small_log();
  EXPECT_EQ(event_log_hash(a), event_log_hash(b));
  b[1].payload["iteration"] = 1;
  EXPECT_NE(event_log_hash(a), event_log_hash(b));
  EXPECT_EQ(hex64(0xabc), "0000000000000abc");
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}
