/* SPDX-License-Identifier: Apache-2.0 */
#ifndef DAGORCH_DAGORCH_H
#define DAGORCH_DAGORCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(DAGORCH_BUILDING_LIBRARY)
#define DAGORCH_API __attribute__((visibility("default")))
#else
#define DAGORCH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dagorch_status {
  DAGORCH_OK = 0,
  DAGORCH_E_INVALID_ARGUMENT = 1,
  DAGORCH_E_PARSE = 2,
  DAGORCH_E_IO = 3,
  DAGORCH_E_INVALID_PLAN = 4,
  DAGORCH_E_NOT_FOUND = 5,
  DAGORCH_E_CORRUPT = 6,
  DAGORCH_E_INTERNAL = 7
} dagorch_status;

typedef enum dagorch_mode {
  DAGORCH_MODE_FULL = 0,
  DAGORCH_MODE_STATIC_PIPELINE = 1,
  DAGORCH_MODE_SINGLE_AGENT = 2
} dagorch_mode;

typedef struct dagorch_config dagorch_config;
typedef struct dagorch_report dagorch_report;

/* Receives each run event in its SSE framing, in sequence order. The text
   is only valid for the duration of the call. */
typedef void (*dagorch_event_fn)(const char* encoded_event, void* user);

DAGORCH_API const char* dagorch_version(void);

/* Message for the most recent failing call on this thread ("" if none). */
DAGORCH_API const char* dagorch_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
DAGORCH_API void dagorch_string_free(char* s);

DAGORCH_API dagorch_status dagorch_config_default(dagorch_config** out);
DAGORCH_API dagorch_status dagorch_config_load(const char* path, dagorch_config** out);
DAGORCH_API dagorch_status dagorch_config_parse(const char* json_text, dagorch_config** out);
/* The config as a JSON document. */
DAGORCH_API dagorch_status dagorch_config_json(const dagorch_config* config, char** out);
DAGORCH_API void dagorch_config_free(dagorch_config* config);

/* Reads and validates a plan file. *valid is 1 or 0 and *report receives
   the human-readable validation report. Unreadable files give
   DAGORCH_E_IO, malformed documents DAGORCH_E_PARSE. */
DAGORCH_API dagorch_status dagorch_validate_plan_file(const char* path, int* valid, char** report);

/* Runs against a scripted scenario file. query may be NULL to use the
   scenario's own query. config and events may be NULL (NULL config means
   the defaults). A run that ends in failure
   (for example a planner fault) still returns DAGORCH_OK with a report
   whose dagorch_report_succeeded() is 0. */
DAGORCH_API dagorch_status dagorch_run_scenario(const char* scenario_path, const char* query,
                                                const dagorch_config* config, dagorch_mode mode,
                                                dagorch_event_fn events, void* user, dagorch_report** out);

/* Runs against HTTP backends rooted at base_url (see live.hpp for the
   endpoints). tool_service_url and config may be NULL. */
DAGORCH_API dagorch_status dagorch_run_live(const char* base_url, const char* tool_service_url, const char* query,
                                            const dagorch_config* config, dagorch_mode mode,
                                            dagorch_event_fn events, void* user, dagorch_report** out);

DAGORCH_API int dagorch_report_succeeded(const dagorch_report* report);
DAGORCH_API const char* dagorch_report_error(const dagorch_report* report);
DAGORCH_API const char* dagorch_report_text(const dagorch_report* report);
/* Stop outcome name, or "" when the run stopped before a decision. */
DAGORCH_API const char* dagorch_report_stop_outcome(const dagorch_report* report);
DAGORCH_API uint64_t dagorch_report_total_tokens(const dagorch_report* report);
/* Completeness ratio of the final verification records. */
DAGORCH_API double dagorch_report_completeness(const dagorch_report* report);
DAGORCH_API size_t dagorch_report_verify_phases(const dagorch_report* report);
DAGORCH_API size_t dagorch_report_event_count(const dagorch_report* report);
/* 16 hex digits identifying the event log. */
DAGORCH_API const char* dagorch_report_event_hash(const dagorch_report* report);
/* Writes plan.json, state.json, events.log and report.txt into dir. */
DAGORCH_API dagorch_status dagorch_report_write(const dagorch_report* report, const char* dir);
DAGORCH_API void dagorch_report_free(dagorch_report* report);

/* Reads <dir>/events.log, checks it, re-emits every event to `events`
   (paced by the recorded timestamps when follow is non-zero, each gap
   capped at one second) and renders the report into *report_text.
   Returns DAGORCH_E_NOT_FOUND for a missing log and DAGORCH_E_CORRUPT,
   naming the first bad sequence number, for a damaged one. */
DAGORCH_API dagorch_status dagorch_replay(const char* dir, int follow, dagorch_event_fn events, void* user,
                                          char** report_text);

#ifdef __cplusplus
}
#endif

#endif /* DAGORCH_DAGORCH_H */
