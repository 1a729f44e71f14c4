#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flowrace/sim/engine.hpp"

namespace flowrace::sim {

class BoundExceeded : public ScenarioError {
 public:
  BoundExceeded(const std::string& pair, std::size_t bound)
      : ScenarioError("more than " + std::to_string(bound) + " schedules for " + pair), bound(bound) {}
  std::size_t bound;
};

struct Exploration {
  std::size_t schedules = 0;
  std::set<std::string> outcomes;  // canonical dumps of responses, logs and stores
};

// Runs a and b from the initial stores under every interleaving of their
// steps (including what they trigger).
Exploration explore_pair(const Scenario& s, const RequestInput& a, const RequestInput& b,
                         std::size_t max_schedules = 200000);

struct RacingPair {
  SpanId a;
  SpanId b;
  std::size_t schedules = 0;
  std::size_t outcomes = 0;
};

struct GroundTruth {
  // Request span pairs (a < b by span id) whose own effects conflict and are
  // concurrent by vector clock.
  std::vector<std::pair<SpanId, SpanId>> universe;
  std::vector<RacingPair> racing;

  bool is_racing(const SpanId& x, const SpanId& y) const;
};

GroundTruth exhaustive_schedules(const Scenario& s, const SimRun& run, std::size_t max_schedules = 200000);

// Declared ground-truth patterns that no racing pair matches.
std::vector<PairPattern> unmatched_patterns(const Scenario& s, const SimRun& run, const GroundTruth& gt);

Json to_json(const GroundTruth& gt, const TraceSet& ts);

}  // namespace flowrace::sim
