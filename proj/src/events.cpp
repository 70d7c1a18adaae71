// SPDX-License-Identifier: Apache-2.0
#include "dagorch/events.hpp"

#include <array>
#include <cstdio>

namespace dagorch {

std::int64_t SteadyClock::now_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - origin_).count();
}

namespace {
constexpr std::array<std::pair<EventKind, std::string_view>, 10> kKindNames = {{
    {EventKind::RunStarted, "RunStarted"},
    {EventKind::PhaseStarted, "PhaseStarted"},
    {EventKind::PhaseFinished, "PhaseFinished"},
    {EventKind::SubQuestionStarted, "SubQuestionStarted"},
    {EventKind::SubQuestionFinished, "SubQuestionFinished"},
    {EventKind::VerificationRecorded, "VerificationRecorded"},
    {EventKind::ReplanDecided, "ReplanDecided"},
    {EventKind::StopTriggered, "StopTriggered"},
    {EventKind::SynthesisProduced, "SynthesisProduced"},
    {EventKind::RunFinished, "RunFinished"},
}};
}  // namespace

std::string_view to_string(EventKind kind) noexcept {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "Unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view name) noexcept {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

EventBus::EventBus(std::shared_ptr<Clock> clock) : clock_(std::move(clock)) {}

RunEvent EventBus::emit(EventKind kind, Json payload) {
  std::lock_guard lock(mu_);
  RunEvent ev{log_.size() + 1, clock_->now_ms(), kind, std::move(payload)};
  log_.push_back(ev);
  for (const auto& l : listeners_) l(ev);
  return ev;
}

RunEvent EventBus::emit_at(EventKind kind, Json payload, std::int64_t timestamp_ms) {
  std::lock_guard lock(mu_);
  RunEvent ev{log_.size() + 1, timestamp_ms, kind, std::move(payload)};
  log_.push_back(ev);
  for (const auto& l : listeners_) l(ev);
  return ev;
}

void EventBus::subscribe(Listener listener) {
  std::lock_guard lock(mu_);
  listeners_.push_back(std::move(listener));
}

std::vector<RunEvent> EventBus::events() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t EventBus::size() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::string encode_event(const RunEvent& event) {
  Json data{{"seq", event.sequence}, {"ts", event.timestamp_ms}, {"payload", event.payload}};
  std::string out;
  out += "id: " + std::to_string(event.sequence) + "\n";
  out += "event: ";
  out += to_string(event.kind);
  out += "\ndata: " + data.dump() + "\n\n";
  return out;
}

std::string encode_event_log(const std::vector<RunEvent>& events) {
  std::string out;
  for (const auto& e : events) out += encode_event(e);
  return out;
}

namespace {

// Splits off the next line (without '\n'); false when no complete line is left.
bool next_line(std::string_view& text, std::string_view& line) {
  auto pos = text.find('\n');
  if (pos == std::string_view::npos) return false;
  line = text.substr(0, pos);
  text.remove_prefix(pos + 1);
  return true;
}

bool take_field(std::string_view line, std::string_view name, std::string_view& value) {
  if (!line.starts_with(name) || line.size() < name.size() + 2 || line.substr(name.size(), 2) != ": ") return false;
  value = line.substr(name.size() + 2);
  return true;
}

}  // namespace

std::vector<RunEvent> decode_event_log(std::string_view text) {
  std::vector<RunEvent> events;
  while (!text.empty()) {
    const std::uint64_t expected = events.size() + 1;
    std::string_view id_line, event_line, data_line, blank;
    std::string_view id_value, kind_value, data_value;
    if (!next_line(text, id_line) || !next_line(text, event_line) || !next_line(text, data_line) ||
        !next_line(text, blank)) {
      throw EventLogError(expected, "truncated record");
    }
    if (!take_field(id_line, "id", id_value) || !take_field(event_line, "event", kind_value) ||
        !take_field(data_line, "data", data_value) || !blank.empty()) {
      throw EventLogError(expected, "malformed record framing");
    }
    if (id_value != std::to_string(expected)) {
      throw EventLogError(expected, "expected id " + std::to_string(expected) + ", found '" + std::string(id_value) + "'");
    }
    auto kind = parse_event_kind(kind_value);
    if (!kind) throw EventLogError(expected, "unknown event kind '" + std::string(kind_value) + "'");
    Json data = Json::parse(data_value, nullptr, false);
    if (data.is_discarded() || !data.is_object() || !data.contains("seq") || !data.contains("ts") ||
        !data.contains("payload") || !data["seq"].is_number_unsigned() || !data["ts"].is_number_integer()) {
      throw EventLogError(expected, "malformed data document");
    }
    if (data["seq"].get<std::uint64_t>() != expected) throw EventLogError(expected, "data sequence mismatch");
    events.push_back(RunEvent{expected, data["ts"].get<std::int64_t>(), *kind, data["payload"]});
  }
  if (events.empty()) throw EventLogError(1, "empty event log");
  if (events.back().kind != EventKind::RunFinished) {
    throw EventLogError(events.size() + 1, "log ends without RunFinished");
  }
  return events;
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t event_log_hash(const std::vector<RunEvent>& events) { return fnv1a(encode_event_log(events)); }

std::string hex64(std::uint64_t value) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace dagorch
