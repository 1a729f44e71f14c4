#include "flowrace/sim/adapter.hpp"

namespace flowrace::sim {

SimAdapter::SimAdapter(Scenario s) : scenario_(std::move(s)), stores_(initial_stores(scenario_)) {}

Response SimAdapter::send(const RequestSpec& req) {
  ++sends_;
  Engine e(scenario_, stores_, clock_);
  try {
    const int id = e.submit(input_of(req), Timing{clock_, 1, 0});
    e.run_timed(0);
    stores_ = e.stores();
    clock_ = e.now() + 1;
    logs_.insert(logs_.end(), e.logs().begin(), e.logs().end());
    return e.response(id).value_or(Response{});
  } catch (const ScenarioError& err) {
    throw ReplayFailure(req.origin, err.what());
  }
}

std::string SimAdapter::snapshot(const StoreScope&) {
  const auto id = "snap-" + std::to_string(snapshots_.size() + 1);
  snapshots_[id] = stores_;
  return id;
}

void SimAdapter::restore(const std::string& snapshot_id) {
  auto it = snapshots_.find(snapshot_id);
  if (it == snapshots_.end()) throw AdapterDead("unknown snapshot '" + snapshot_id + "'");
  if (broken_restore_ && !stores_.empty()) {
    const auto keep = stores_.begin()->first;
    auto kept = stores_[keep];
    stores_ = it->second;
    stores_[keep] = std::move(kept);
    return;
  }
  stores_ = it->second;
}

std::string SimAdapter::log_marker() { return std::to_string(logs_.size()); }

ServiceLogs SimAdapter::collect_logs(const std::string& since_marker) {
  std::size_t from = 0;
  try {
    from = std::stoul(since_marker);
  } catch (const std::exception&) {
    throw ReplayError("bad log marker '" + since_marker + "'");
  }
  ServiceLogs out;
  for (std::size_t i = from; i < logs_.size(); ++i) out[logs_[i].service].push_back(logs_[i].line());
  return out;
}

Json SimAdapter::dump_state(const StoreScope& scope) { return dump_stores(scenario_, stores_, scope); }

}  // namespace flowrace::sim
