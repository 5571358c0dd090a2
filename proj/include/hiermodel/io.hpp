#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hiermodel/ctmc.hpp"
#include "hiermodel/epa.hpp"
#include "hiermodel/fesc.hpp"
#include "hiermodel/hiersim.hpp"
#include "hiermodel/hybrid.hpp"
#include "hiermodel/qn.hpp"
#include "hiermodel/task_system.hpp"
#include "hiermodel/txn_lock.hpp"

namespace hiermodel::io {

using nlohmann::json;

/// Reads a whole file; throws ModelError when it cannot be opened.
std::string read_file(const std::string& path);
json parse_json(const std::string& text, const std::string& origin);

/// Stations from a list of {"name", "kind"} objects, or a bare station count.
std::vector<Station> stations_from_json(const json& j);
json to_json(const std::vector<Station>& s);

/// Accepts "demands" directly or "routing" + "service_times" (+ "reference", 1-based).
QnModel qn_from_json(const json& j);
json to_json(const QnModel& m);
json to_json(const MvaSolution& s);

ThroughputTable table_from_json(const json& j);
json to_json(const ThroughputTable& t);
json to_json(const BirthDeathSolution& s);

Ctmc ctmc_from_json(const json& j);
json to_json(const Ctmc& c);

TaskSystem task_system_from_json(const json& j);
json to_json(const TaskSystem& ts);
json to_json(const TaskSystem& ts, const TaskReport& r);

/// "pair" is 1-based in files.
LockModel lock_from_json(const json& j);
json to_json(const LockModel& m);

/// Fields present in j override those of base.
TimesharingConfig timesharing_from_json(const json& j, TimesharingConfig base = {});
json to_json(const TimesharingConfig& c);
json to_json(const ConfidenceInterval& ci);
json to_json(const SimReport& r);
/// One row per measured batch: batch, class, response, throughput.
std::string batch_csv(const SimReport& r);

std::vector<HybridTask> hybrid_tasks_from_json(const json& j);
json to_json(const std::vector<HybridTask>& tasks);
json to_json(const HybridResult& r, const std::vector<HybridTask>& tasks);

/// {"m", "z", "t": [...]} or {"m", "z", "model": QN} with T(N) from single-class MVA.
TerminalModel terminal_from_json(const json& j);
json to_json(const TerminalModel& tm);

/// Structural checks on a model document without solving it. The document
/// kind is inferred from its keys.
std::vector<std::string> validate_document(const json& j);

}  // namespace hiermodel::io
