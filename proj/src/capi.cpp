// SPDX-License-Identifier: Apache-2.0
#include "dagorch/dagorch.h"

#include <cstring>
#include <filesystem>
#include <thread>

#include "dagorch/error.hpp"
#include "dagorch/live.hpp"
#include "dagorch/orchestrator.hpp"
#include "dagorch/scenario.hpp"
#include "dagorch/store.hpp"
#include "dagorch/verification.hpp"

struct dagorch_config {
  dagorch::OrchestrationConfig value;
};

struct dagorch_report {
  dagorch::RunReport value;
  std::string stop_outcome;
  std::string hash;
};

namespace {

using namespace dagorch;

thread_local std::string g_last_error;

dagorch_status fail(dagorch_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the exception in flight to a status code.
dagorch_status translate() {
  try {
    throw;
  } catch (const ParseError& e) {
    return fail(DAGORCH_E_PARSE, e.what());
  } catch (const PlanError& e) {
    return fail(DAGORCH_E_INVALID_PLAN, e.what());
  } catch (const NotFoundError& e) {
    return fail(DAGORCH_E_NOT_FOUND, e.what());
  } catch (const CorruptRecordError& e) {
    return fail(DAGORCH_E_CORRUPT, e.what());
  } catch (const Json::exception& e) {
    return fail(DAGORCH_E_PARSE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DAGORCH_E_IO, e.what());
  } catch (const InternalError& e) {
    return fail(DAGORCH_E_INTERNAL, e.what());
  } catch (const Error& e) {
    return fail(DAGORCH_E_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(DAGORCH_E_INTERNAL, e.what());
  } catch (...) {
    return fail(DAGORCH_E_INTERNAL, "unknown exception");
  }
}

template <typename F>
dagorch_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (...) {
    return translate();
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

RunMode to_mode(dagorch_mode m) {
  switch (m) {
    case DAGORCH_MODE_FULL: return RunMode::Full;
    case DAGORCH_MODE_STATIC_PIPELINE: return RunMode::StaticPipeline;
    case DAGORCH_MODE_SINGLE_AGENT: return RunMode::SingleAgent;
  }
  throw Error("unknown run mode " + std::to_string(static_cast<int>(m)));
}

void forward_to(EventBus& bus, dagorch_event_fn fn, void* user) {
  if (!fn) return;
  bus.subscribe([fn, user](const RunEvent& e) { fn(encode_event(e).c_str(), user); });
}

dagorch_report* wrap(RunReport r) {
  auto* out = new dagorch_report{std::move(r), {}, {}};
  if (out->value.state.stop) out->stop_outcome = std::string(to_string(out->value.state.stop->outcome));
  out->hash = hex64(event_log_hash(out->value.events));
  return out;
}

}  // namespace

extern "C" {

const char* dagorch_version(void) { return "0.1.0"; }

const char* dagorch_last_error(void) { return g_last_error.c_str(); }

void dagorch_string_free(char* s) { std::free(s); }

dagorch_status dagorch_config_default(dagorch_config** out) {
  return guarded([&] {
    if (!out) return fail(DAGORCH_E_INVALID_ARGUMENT, "out is null");
    *out = new dagorch_config{};
    return DAGORCH_OK;
  });
}

dagorch_status dagorch_config_parse(const char* json_text, dagorch_config** out) {
  return guarded([&] {
    if (!json_text || !out) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    auto cfg = parse_config_text(json_text);
    *out = new dagorch_config{cfg};
    return DAGORCH_OK;
  });
}

dagorch_status dagorch_config_load(const char* path, dagorch_config** out) {
  return guarded([&] {
    if (!path || !out) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    std::string text;
    try {
      text = read_file(path);
    } catch (const NotFoundError& e) {
      return fail(DAGORCH_E_IO, e.what());
    }
    *out = new dagorch_config{parse_config_text(text)};
    return DAGORCH_OK;
  });
}

dagorch_status dagorch_config_json(const dagorch_config* config, char** out) {
  return guarded([&] {
    if (!config || !out) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    *out = dup(Json(config->value).dump(2));
    return DAGORCH_OK;
  });
}

void dagorch_config_free(dagorch_config* config) { delete config; }

dagorch_status dagorch_validate_plan_file(const char* path, int* valid, char** report) {
  return guarded([&] {
    if (!path || !valid || !report) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    std::string text;
    try {
      text = read_file(path);
    } catch (const NotFoundError& e) {
      return fail(DAGORCH_E_IO, e.what());
    }
    ValidationReport r = validate_plan(parse_plan_text(text));
    *valid = r.ok() ? 1 : 0;
    *report = dup(r.describe());
    return DAGORCH_OK;
  });
}

namespace {
OrchestrationConfig effective(const dagorch_config* config) { return config ? config->value : OrchestrationConfig{}; }
}  // namespace

dagorch_status dagorch_run_scenario(const char* scenario_path, const char* query, const dagorch_config* config,
                                    dagorch_mode mode, dagorch_event_fn events, void* user, dagorch_report** out) {
  return guarded([&] {
    if (!scenario_path || !out) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    if (!std::filesystem::is_regular_file(scenario_path)) {
      return fail(DAGORCH_E_IO, std::string("cannot read scenario file ") + scenario_path);
    }
    auto scenario = std::make_shared<const Scenario>(load_scenario(scenario_path));
    std::string q = query && *query ? query : scenario->query;
    if (q.empty()) return fail(DAGORCH_E_INVALID_ARGUMENT, "no query given and the scenario has none");

    RunOptions options;
    options.mode = to_mode(mode);
    std::shared_ptr<Clock> clock;
    if (scenario->realtime) {
      options.time_mode = TimeMode::Wall;
      clock = std::make_shared<SteadyClock>();
    } else {
      options.time_mode = TimeMode::Virtual;
      clock = std::make_shared<ManualClock>();
    }
    EventBus bus(clock);
    forward_to(bus, events, user);
    *out = wrap(run(q, effective(config), make_scripted_registry(scenario), bus, options));
    return DAGORCH_OK;
  });
}

dagorch_status dagorch_run_live(const char* base_url, const char* tool_service_url, const char* query,
                                const dagorch_config* config, dagorch_mode mode, dagorch_event_fn events,
                                void* user, dagorch_report** out) {
  return guarded([&] {
    if (!base_url || !query || !*query || !out) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    const OrchestrationConfig cfg = effective(config);
    LiveOptions lo{base_url, tool_service_url ? tool_service_url : "", cfg.agent_timeout};
    RunOptions options;
    options.mode = to_mode(mode);
    options.time_mode = TimeMode::Wall;
    EventBus bus(std::make_shared<SteadyClock>());
    forward_to(bus, events, user);
    *out = wrap(run(query, cfg, make_live_registry(lo), bus, options));
    return DAGORCH_OK;
  });
}

int dagorch_report_succeeded(const dagorch_report* report) { return report && report->value.succeeded ? 1 : 0; }

const char* dagorch_report_error(const dagorch_report* report) { return report ? report->value.error.c_str() : ""; }

const char* dagorch_report_text(const dagorch_report* report) { return report ? report->value.text.c_str() : ""; }

const char* dagorch_report_stop_outcome(const dagorch_report* report) {
  return report ? report->stop_outcome.c_str() : "";
}

uint64_t dagorch_report_total_tokens(const dagorch_report* report) {
  return report ? report->value.state.ledger.total() : 0;
}

double dagorch_report_completeness(const dagorch_report* report) {
  return report ? completeness_ratio(report->value.state.records) : 0.0;
}

size_t dagorch_report_verify_phases(const dagorch_report* report) {
  return report ? report->value.state.completeness_history.size() : 0;
}

size_t dagorch_report_event_count(const dagorch_report* report) { return report ? report->value.events.size() : 0; }

const char* dagorch_report_event_hash(const dagorch_report* report) { return report ? report->hash.c_str() : ""; }

dagorch_status dagorch_report_write(const dagorch_report* report, const char* dir) {
  return guarded([&] {
    if (!report || !dir) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    try {
      write_run_dir(dir, report->value);
    } catch (const Error& e) {
      return fail(DAGORCH_E_IO, e.what());
    }
    return DAGORCH_OK;
  });
}

void dagorch_report_free(dagorch_report* report) { delete report; }

dagorch_status dagorch_replay(const char* dir, int follow, dagorch_event_fn events, void* user, char** report_text) {
  return guarded([&] {
    if (!dir) return fail(DAGORCH_E_INVALID_ARGUMENT, "null argument");
    Replay replay = replay_run_dir(dir);
    std::int64_t previous = replay.events.empty() ? 0 : replay.events.front().timestamp_ms;
    for (const auto& e : replay.events) {
      if (follow) {
        const auto gap = std::clamp<std::int64_t>(e.timestamp_ms - previous, 0, 1000);
        std::this_thread::sleep_for(std::chrono::milliseconds(gap));
        previous = e.timestamp_ms;
      }
      if (events) events(encode_event(e).c_str(), user);
    }
    if (report_text) *report_text = dup(replay.report);
    return DAGORCH_OK;
  });
}

}  // extern "C"
