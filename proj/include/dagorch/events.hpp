// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dagorch/error.hpp"
#include "dagorch/plan.hpp"

namespace dagorch {

// Millisecond clock injected into everything that timestamps. Simulated
// runs use ManualClock so logs are reproducible.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
  // Moves virtual time forward; a wall clock ignores this.
  virtual void advance(std::chrono::milliseconds) {}
  virtual bool simulated() const noexcept = 0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}
  std::int64_t now_ms() const override;
  bool simulated() const noexcept override { return false; }

 private:
  std::chrono::steady_clock::time_point origin_;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() const override { return now_.load(); }
  void advance(std::chrono::milliseconds d) override { now_ += d.count(); }
  bool simulated() const noexcept override { return true; }

 private:
  std::atomic<std::int64_t> now_;
};

enum class EventKind {
  RunStarted,
  PhaseStarted,
  PhaseFinished,
  SubQuestionStarted,
  SubQuestionFinished,
  VerificationRecorded,
  ReplanDecided,
  StopTriggered,
  SynthesisProduced,
  RunFinished,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view name) noexcept;

struct RunEvent {
  std::uint64_t sequence = 0;
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::RunStarted;
  Json payload = Json::object();

  bool operator==(const RunEvent&) const = default;
};

// Serializes events from concurrent producers, assigns gap-free sequence
// numbers starting at 1, and forwards each event to listeners in sequence
// order.
class EventBus {
 public:
  using Listener = std::function<void(const RunEvent&)>;

  explicit EventBus(std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());

  RunEvent emit(EventKind kind, Json payload);
  // For virtual-time producers that know the event's logical time.
  RunEvent emit_at(EventKind kind, Json payload, std::int64_t timestamp_ms);

  void subscribe(Listener listener);
  std::vector<RunEvent> events() const;
  std::size_t size() const;

  Clock& clock() const noexcept { return *clock_; }
  const std::shared_ptr<Clock>& clock_ptr() const noexcept { return clock_; }

 private:
  std::shared_ptr<Clock> clock_;
  mutable std::mutex mu_;
  std::vector<RunEvent> log_;
  std::vector<Listener> listeners_;
};

// Server-Sent-Events framing, one record per event:
//   id: <sequence>
//   event: <Kind>
//   data: {"seq":..,"ts":..,"payload":{..}}
//   <blank line>
std::string encode_event(const RunEvent& event);
std::string encode_event_log(const std::vector<RunEvent>& events);

class EventLogError : public CorruptRecordError {
 public:
  EventLogError(std::uint64_t bad_sequence, const std::string& what)
      : CorruptRecordError("event log corrupt at sequence " + std::to_string(bad_sequence) + ": " + what),
        bad_sequence_(bad_sequence) {}
  std::uint64_t bad_sequence() const noexcept { return bad_sequence_; }

 private:
  std::uint64_t bad_sequence_;
};

// Parses and checks a full log: well-formed records, gap-free sequence
// numbers from 1, and a terminating RunFinished event. Throws EventLogError
// naming the first sequence number that cannot be accepted.
std::vector<RunEvent> decode_event_log(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

// FNV-1a over the encoded log; stable across runs and platforms.
std::uint64_t event_log_hash(const std::vector<RunEvent>& events);
std::string hex64(std::uint64_t value);

}  // namespace dagorch
