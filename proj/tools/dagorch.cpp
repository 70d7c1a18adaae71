// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the engine only through dagorch.h.
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dagorch/dagorch.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

int complain(const std::string& what) {
  std::cerr << "dagorch: " << what << ": " << dagorch_last_error() << "\n";
  return kExitUsage;
}

std::string default_out_dir() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  std::filesystem::path base = std::filesystem::path("runs") / stamp;
  std::filesystem::path dir = base;
  for (int n = 2; std::filesystem::exists(dir); ++n) dir = base.string() + "-" + std::to_string(n);
  return dir.string();
}

void print_event(const char* encoded, void*) {
  std::fputs(encoded, stdout);
  std::fflush(stdout);
}

struct RunArgs {
  std::string query;
  std::string config;
  std::string scenario;
  std::string live;
  std::string tools;
  std::string mode = "full";
  std::string out;
  bool stream = false;
};

int cmd_run(const RunArgs& a) {
  dagorch_mode mode = DAGORCH_MODE_FULL;
  if (a.mode == "static") {
    mode = DAGORCH_MODE_STATIC_PIPELINE;
  } else if (a.mode == "single") {
    mode = DAGORCH_MODE_SINGLE_AGENT;
  } else if (a.mode != "full") {
    std::cerr << "dagorch: unknown mode '" << a.mode << "' (expected full, static or single)\n";
    return kExitUsage;
  }
  if (a.scenario.empty() == a.live.empty()) {
    std::cerr << "dagorch: exactly one of --scenario or --live is required\n";
    return kExitUsage;
  }

  dagorch_config* config = nullptr;
  dagorch_status st = a.config.empty() ? dagorch_config_default(&config) : dagorch_config_load(a.config.c_str(), &config);
  if (st != DAGORCH_OK) return complain("cannot load config " + a.config);

  dagorch_report* report = nullptr;
  dagorch_event_fn sink = a.stream ? print_event : nullptr;
  if (!a.scenario.empty()) {
    st = dagorch_run_scenario(a.scenario.c_str(), a.query.empty() ? nullptr : a.query.c_str(), config, mode, sink,
                              nullptr, &report);
  } else {
    if (a.query.empty()) {
      dagorch_config_free(config);
      std::cerr << "dagorch: a query is required with --live\n";
      return kExitUsage;
    }
    st = dagorch_run_live(a.live.c_str(), a.tools.empty() ? nullptr : a.tools.c_str(), a.query.c_str(), config, mode,
                          sink, nullptr, &report);
  }
  dagorch_config_free(config);
  if (st != DAGORCH_OK) {
    if (st == DAGORCH_E_INTERNAL) {
      std::cerr << "dagorch: run aborted: " << dagorch_last_error() << "\n";
      return kExitFailed;
    }
    return complain("cannot start run");
  }

  const std::string out = a.out.empty() ? default_out_dir() : a.out;
  const int write_status = dagorch_report_write(report, out.c_str());
  if (!a.stream) std::fputs(dagorch_report_text(report), stdout);
  std::cout << "Run directory: " << out << "\n";
  const bool ok = dagorch_report_succeeded(report);
  if (!ok) std::cerr << "dagorch: run failed: " << dagorch_report_error(report) << "\n";
  dagorch_report_free(report);
  if (write_status != DAGORCH_OK) {
    std::cerr << "dagorch: cannot write run directory: " << dagorch_last_error() << "\n";
    return kExitFailed;
  }
  return ok ? kExitOk : kExitFailed;
}

int cmd_validate(const std::string& path) {
  int valid = 0;
  char* text = nullptr;
  dagorch_status st = dagorch_validate_plan_file(path.c_str(), &valid, &text);
  if (st != DAGORCH_OK) return complain("cannot read plan " + path);
  std::fputs(text, stdout);
  dagorch_string_free(text);
  return valid ? kExitOk : kExitFailed;
}

int cmd_replay(const std::string& dir, bool follow, bool events) {
  char* text = nullptr;
  dagorch_status st = dagorch_replay(dir.c_str(), follow ? 1 : 0, events ? print_event : nullptr, nullptr, &text);
  if (st != DAGORCH_OK) {
    std::cerr << "dagorch: replay of " << dir << " failed: " << dagorch_last_error() << "\n";
    return kExitFailed;
  }
  if (!events) std::fputs(text, stdout);
  dagorch_string_free(text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plan-execute-verify-replan orchestration engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dagorch_version()));

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an orchestration against a scenario or live backends");
  run->add_option("query", run_args.query, "Question to answer (defaults to the scenario's query)");
  run->add_option("--config", run_args.config, "Orchestration config (JSON)");
  run->add_option("--scenario", run_args.scenario, "Scripted scenario file (JSON)");
  run->add_option("--live", run_args.live, "Base URL of HTTP backends, http://host:port");
  run->add_option("--tools", run_args.tools, "Tool service URL used with --live");
  run->add_option("--mode", run_args.mode, "full, static or single")->capture_default_str();
  run->add_option("--out", run_args.out, "Run directory (default ./runs/<timestamp>)");
  run->add_flag("--events", run_args.stream, "Stream events to stdout instead of printing the report");

  std::string plan_path;
  auto* validate = app.add_subcommand("validate-plan", "Check an execution plan file");
  validate->add_option("plan", plan_path, "Plan file (JSON)")->required();

  std::string replay_dir;
  bool follow = false;
  bool replay_events = false;
  auto* replay = app.add_subcommand("replay", "Re-emit a stored run's events and render its report");
  replay->add_option("dir", replay_dir, "Run directory")->required();
  replay->add_flag("--follow", follow, "Pace events by their recorded timestamps");
  replay->add_flag("--events", replay_events, "Print the events instead of the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*run) return cmd_run(run_args);
  if (*validate) return cmd_validate(plan_path);
  if (*replay) return cmd_replay(replay_dir, follow, replay_events);
  return kExitUsage;
}
