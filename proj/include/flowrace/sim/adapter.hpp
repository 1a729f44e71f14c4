#pragma once

#include <map>
#include <string>
#include <vector>

#include "flowrace/interleave.hpp"
#include "flowrace/sim/engine.hpp"

namespace flowrace::sim {

// Replay target backed by the simulator. Every send runs the request, and
// whatever it triggers, to completion against the current store contents.
class SimAdapter : public TargetAdapter {
 public:
  explicit SimAdapter(Scenario s);
  SimAdapter(const SimAdapter&) = delete;
  SimAdapter& operator=(const SimAdapter&) = delete;

  Response send(const RequestSpec& req) override;
  bool supports_snapshot() const override { return true; }
  std::string snapshot(const StoreScope& scope) override;
  void restore(const std::string& snapshot_id) override;
  std::string log_marker() override;
  ServiceLogs collect_logs(const std::string& since_marker) override;
  Json dump_state(const StoreScope& scope) override;

  const Scenario& scenario() const { return scenario_; }
  const StoreMap& stores() const { return stores_; }
  std::size_t sends() const { return sends_; }
  // Test hook: restore leaves one store untouched.
  void break_restore(bool on) { broken_restore_ = on; }

 private:
  Scenario scenario_;
  StoreMap stores_;
  std::map<std::string, StoreMap> snapshots_;
  std::vector<LogRecord> logs_;
  std::int64_t clock_ = 0;
  std::size_t sends_ = 0;
  bool broken_restore_ = false;
};

}  // namespace flowrace::sim
