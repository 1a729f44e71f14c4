#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "flowrace/config.hpp"
#include "flowrace/conflict.hpp"
#include "flowrace/flows.hpp"
#include "flowrace/interleave.hpp"
#include "flowrace/oracle.hpp"

namespace flowrace {

// Files handed between stages describe different traces.
class InputMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// sha256 of the canonical trace serialization.
std::string trace_hash(const TraceSet& ts);

struct Analysis {
  std::string trace_hash;
  FlowGraph flows;
  AccessMap accesses;
  PairStages stages;
  PruningReport report;
  std::vector<PairJob> jobs;  // one per needs_test pair
};

Analysis analyze(const TraceSet& ts, const Config& cfg);

Json to_json(const Access& a);
Json to_json(const CandidatePair& p, const TraceSet& ts);
Json to_json(const RequestSpec& r);
RequestSpec request_spec_from_json(const Json& j);
Json to_json(const StoreScope& scope);
StoreScope scope_from_json(const Json& j);
Json to_json(const Verdict& v);
Json to_json(const FlowGraph& fg);

// Counts, pairs per stage and, for pairs needing a test, the request specs
// and snapshot scope, so testing works without the trace.
Json analysis_json(const Analysis& a);
std::vector<PairJob> jobs_from_json(const Json& analysis);

struct TestRun {
  CampaignResult campaign;
  std::vector<Verdict> verdicts;  // parallel to campaign.results
};

TestRun run_tests(std::vector<PairJob> jobs, TargetAdapter& adapter, const Config& cfg);
Json results_json(const std::string& trace_hash, const TestRun& run);

// Classifies reported pairs against an optional ground truth document
// ({"trace_hash", "racing": [{"a", "b"}]}). Throws InputMismatch when the
// documents name different traces.
Json summarize(const Json& analysis, const Json& results, const Json* ground_truth = nullptr);
std::string summary_table(const Json& summary);

}  // namespace flowrace
