#pragma once

// Shared helpers for the test binaries: the full simulate -> analyze -> test
// -> report run, and brute-force recomputations used as oracles.

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flowrace/pipeline.hpp"
#include "flowrace/sim/adapter.hpp"
#include "flowrace/sim/exhaustive.hpp"

namespace flowrace::check {

struct FullRun {
  sim::Scenario scenario;
  sim::SimRun run;
  Config cfg;
  Analysis analysis;
  TestRun tests;
  sim::GroundTruth gt;
  Json summary;
  double seconds = 0;
};

// whitelist=false drops oracle.response_whitelist from the scenario config.
FullRun full_pipeline(const std::string& id, bool whitelist = true, std::uint64_t seed = 0,
                      const std::string& delays = {});

// Reported pairs that are not racing, each classified by whether one of its
// two requests is a pure-query endpoint of the scenario.
struct FalsePositive {
  SpanId a, b;
  bool pure_query = false;
};
std::vector<FalsePositive> false_positives(const FullRun& r);

using Key = std::pair<SpanId, SpanId>;
std::set<Key> keys(const std::vector<CandidatePair>& pairs);

// Instance pruning recomputed with fnmatch(3) over the configured rules.
// kept (optional) receives the surviving pairs with their sites filtered.
std::set<Key> brute_instance_removed(const std::vector<CandidatePair>& raw, const InstanceRules& rules,
                                     std::vector<CandidatePair>* kept = nullptr);

// Request-level reachability by depth-first search over flow order, mq and
// join edges, and lock exclusion from the lock sections.
struct BruteOrder {
  explicit BruteOrder(const FlowGraph& fg);
  bool hb(const SpanId& a, const SpanId& b) const;
  bool excluded(const SpanId& da, const SpanId& db) const;

  const FlowGraph* fg;
  std::map<SpanId, std::set<SpanId>> succ;
};

std::set<Key> brute_flow_removed(const std::vector<CandidatePair>& kept_after_instance, const FlowGraph& fg);

// Analysis of a simulated run with the scenario's own config.
Analysis analyze_run(const sim::Scenario& s, const sim::SimRun& run, Config* cfg_out = nullptr);

}  // namespace flowrace::check
