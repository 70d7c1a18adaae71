// SPDX-License-Identifier: Apache-2.0
#include "dagorch/store.hpp"

#include <fstream>
#include <sstream>

#include "dagorch/error.hpp"

namespace dagorch {

namespace fs = std::filesystem;

void to_json(Json& j, const OrchestrationState& s) {
  Json results = Json::object();
  for (const auto& [id, r] : s.results) results[id] = r;
  Json records = Json::object();
  for (const auto& [id, r] : s.records) records[id] = r;
  j = Json{{"iteration", s.iteration},
           {"plan", s.plan},
           {"results", std::move(results)},
           {"records", std::move(records)},
           {"completeness_history", s.completeness_history},
           {"ledger", s.ledger},
           {"stop", s.stop ? Json(*s.stop) : Json(nullptr)}};
}

void from_json(const Json& j, OrchestrationState& s) {
  s = OrchestrationState{};
  s.iteration = j.at("iteration").get<int>();
  if (s.iteration < 0) throw CorruptRecordError("negative iteration");
  s.plan = j.at("plan").get<ExecutionPlan>();
  for (const auto& [id, r] : j.at("results").items()) {
    auto result = r.get<AgentResult>();
    if (result.sub_question_id != id) throw CorruptRecordError("result keyed " + id + " belongs to " + result.sub_question_id);
    s.results.emplace(id, std::move(result));
  }
  for (const auto& [id, r] : j.at("records").items()) {
    auto record = r.get<VerificationRecord>();
    if (record.sub_question_id.empty()) record.sub_question_id = id;
    if (record.sub_question_id != id) throw CorruptRecordError("record keyed " + id + " belongs to " + record.sub_question_id);
    s.records.emplace(id, std::move(record));
  }
  s.completeness_history = j.at("completeness_history").get<std::vector<double>>();
  s.ledger = j.at("ledger").get<TokenLedger>();
  if (const Json& stop = j.at("stop"); !stop.is_null()) {
    s.stop = stop.get<StopDecision>();
    if (!s.stop->stops()) throw CorruptRecordError("stored stop decision is Continue");
  }
}

OrchestrationState parse_state_text(std::string_view text) {
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw CorruptRecordError("state document is not valid JSON");
  try {
    return doc.get<OrchestrationState>();
  } catch (const CorruptRecordError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptRecordError(std::string("state document: ") + e.what());
  }
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

std::string RunStore::persist(const OrchestrationState& state) {
  const std::string text = Json(state).dump(2) + "\n";
  const std::string id = "run-" + hex64(fnv1a(text));
  fs::create_directories(dir(id));
  write_file_atomic(dir(id) / kPlanFile, Json(state.plan).dump(2) + "\n");
  write_file_atomic(dir(id) / kStateFile, text);
  return id;
}

OrchestrationState RunStore::load(const std::string& run_id) const {
  if (run_id.empty() || run_id.find('/') != std::string::npos || run_id == "." || run_id == "..") {
    throw NotFoundError("no run with id '" + run_id + "'");
  }
  if (!fs::is_directory(dir(run_id))) throw NotFoundError("no run with id '" + run_id + "'");
  return load_state_file(dir(run_id));
}

OrchestrationState load_state_file(const fs::path& run_dir) {
  const fs::path p = run_dir / kStateFile;
  if (!fs::exists(p)) throw NotFoundError("no state document in " + run_dir.string());
  return parse_state_text(read_file(p));
}

}  // namespace dagorch
