// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dagorch/events.hpp"
#include "dagorch/state.hpp"

namespace dagorch {

OrchestrationState parse_state_text(std::string_view text);

// Writes `text` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

// A directory of runs, one subdirectory per run id holding plan.json and
// state.json. The id is derived from the state's content, so persisting
// the same state twice yields the same id.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  std::string persist(const OrchestrationState& state);
  // Throws NotFoundError for an unknown id, CorruptRecordError when the
  // stored document does not parse.
  OrchestrationState load(const std::string& run_id) const;

  std::filesystem::path dir(const std::string& run_id) const { return root_ / run_id; }
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

// File names inside a run directory.
inline constexpr const char* kPlanFile = "plan.json";
inline constexpr const char* kStateFile = "state.json";
inline constexpr const char* kEventsFile = "events.log";
inline constexpr const char* kReportFile = "report.txt";

// Loads state.json from a run directory (NotFound / CorruptRecord).
OrchestrationState load_state_file(const std::filesystem::path& run_dir);

}  // namespace dagorch
