#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowrace/conflict.hpp"
#include "flowrace/trace.hpp"

namespace flowrace {

using Json = nlohmann::json;

struct RequestSpec {
  SpanId origin;  // request span this spec was taken from
  std::string service;
  Protocol protocol = Protocol::http;
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;
  std::string body;

  bool operator==(const RequestSpec&) const = default;

  std::string endpoint() const { return method + " " + target; }
};

struct Response {
  ResponseStatus status = std::int64_t{0};
  std::map<std::string, std::string> headers;
  std::string body;

  bool operator==(const Response&) const = default;
};

using StoreScope = std::set<StoreInstance>;
using ServiceLogs = std::map<std::string, std::vector<std::string>>;

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReplayFailure : public ReplayError {
 public:
  ReplayFailure(const SpanId& request, const std::string& cause)
      : ReplayError("replay of '" + request + "' failed: " + cause), request_span(request) {}
  SpanId request_span;
};

class SnapshotUnsupported : public ReplayError {
 public:
  SnapshotUnsupported() : ReplayError("target does not support snapshot/restore") {}
};

class NonReplayableRequest : public ReplayError {
 public:
  NonReplayableRequest(const SpanId& request, const std::string& why)
      : ReplayError("request '" + request + "' cannot be replayed: " + why), request_span(request) {}
  SpanId request_span;
};

// The target is unusable; the campaign stops.
class AdapterDead : public ReplayError {
 public:
  using ReplayError::ReplayError;
};

// Replay contract a target system has to provide. send is synchronous: it
// returns after the request and everything it triggers has completed.
class TargetAdapter {
 public:
  virtual ~TargetAdapter() = default;

  virtual Response send(const RequestSpec& req) = 0;
  virtual bool supports_snapshot() const = 0;
  virtual std::string snapshot(const StoreScope& scope) = 0;
  virtual void restore(const std::string& snapshot_id) = 0;
  virtual std::string log_marker() = 0;
  virtual ServiceLogs collect_logs(const std::string& since_marker) = 0;
  // Canonical document of the given stores (every store when scope is empty).
  virtual Json dump_state(const StoreScope& scope) = 0;
};

enum class ReplayOrder { forward, reverse };

std::string to_string(ReplayOrder o);

struct Observation {
  ReplayOrder order = ReplayOrder::forward;
  // Index 0 is always request a and index 1 request b, whatever the send order.
  std::vector<Response> responses;
  ServiceLogs logs;
  Json final_state;

  bool operator==(const Observation&) const = default;
};

struct InterleaveResult {
  CandidatePair pair;
  RequestSpec request_a;
  RequestSpec request_b;
  StoreScope scope;
  Observation forward;
  Observation reverse;
  Json baseline_state;  // dump right after the snapshot was taken
  Json restored_state;  // dump after the final restore
  bool aborted = false;
  std::string abort_reason;

  bool operator==(const InterleaveResult&) const = default;
};

// Throws NonReplayableRequest when a body is missing.
RequestSpec request_spec(const RequestSpan& r);

// Stores written or read anywhere in the subtree of either request, plus the
// coupled stores.
StoreScope snapshot_scope(const CandidatePair& pair, const TraceSet& ts, const std::vector<StoreInstance>& coupled);

// snapshot, a, b, observe, restore, b, a, observe, restore.
InterleaveResult replay_pair(const CandidatePair& pair, const RequestSpec& a, const RequestSpec& b,
                             const StoreScope& scope, TargetAdapter& adapter);
InterleaveResult replay_pair(const CandidatePair& pair, const TraceSet& ts, TargetAdapter& adapter,
                             const std::vector<StoreInstance>& coupled = {});

struct CampaignBudget {
  std::optional<std::size_t> max_pairs;
  std::optional<double> max_seconds;
};

// One replayable unit of a campaign.
struct PairJob {
  CandidatePair pair;
  RequestSpec a;
  RequestSpec b;
  StoreScope scope;
  std::string unreplayable;  // non-empty when request specs could not be built
};

std::vector<PairJob> make_jobs(const std::vector<CandidatePair>& pairs, const TraceSet& ts,
                               const std::vector<StoreInstance>& coupled);

struct SkippedPair {
  CandidatePair pair;
  std::string reason;

  bool operator==(const SkippedPair&) const = default;
};

struct CampaignResult {
  std::vector<InterleaveResult> results;
  std::vector<SkippedPair> skipped;
  bool aborted = false;
  std::string abort_reason;
};

// Pairs run one at a time in canonical (a, b) order. Pairs past the budget
// are skipped with a reason; adapter death or a failed restore ends the run.
CampaignResult run_campaign(std::vector<PairJob> jobs, TargetAdapter& adapter, const CampaignBudget& budget = {});

}  // namespace flowrace
