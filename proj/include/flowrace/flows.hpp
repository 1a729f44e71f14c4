#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowrace/trace.hpp"

namespace flowrace {

struct RequestFlow {
  FlowId flow_id;
  std::vector<SpanId> ordered_spans;
  // Parallel to ordered_spans. False marks a pre-fork prefix span duplicated
  // into a spawned branch; each request span is owned by exactly one flow.
  std::vector<bool> owned;
  std::map<SpanId, std::vector<SpanId>> data_attachments;

  bool operator==(const RequestFlow&) const = default;

  std::size_t position(const SpanId& id) const;  // npos when absent
  bool contains(const SpanId& id) const { return position(id) != npos; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// join_happens_before links the last span of a spawned branch to the first
// main-branch span that starts after the branch ended under the same parent.
enum class SyncKind { mq_happens_before, lock_mutex, join_happens_before };

std::string to_string(SyncKind k);

struct SyncEdge {
  SyncKind kind = SyncKind::mq_happens_before;
  FlowId from_flow;
  FlowId to_flow;
  std::string via;  // topic or lock id
  // mq: produce data span -> consume request span. lock: the two acquire
  // spans. join: branch request span -> resuming main request span.
  SpanId from_span;
  SpanId to_span;

  bool operator==(const SyncEdge&) const = default;
};

struct LockSection {
  std::string lock_id;
  FlowId flow;
  SpanId acquire_span;
  std::optional<SpanId> release_span;
  std::vector<SpanId> data_spans;  // every data span of the flow inside [acquire, release]

  bool operator==(const LockSection&) const = default;
};

struct FlowGraph {
  TraceSet trace;
  std::vector<RequestFlow> flows;
  std::vector<SyncEdge> sync_edges;
  std::vector<LockSection> lock_sections;
  std::vector<std::string> diagnostics;

  // Flow that owns the request span (the main branch for pre-fork prefixes).
  const RequestFlow* owning_flow(const SpanId& request_span) const;
};

class FlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CyclicParentChain : public FlowError {
 public:
  explicit CyclicParentChain(const std::string& root)
      : FlowError("parent links form a cycle in flow '" + root + "'"), flow_root(root) {}
  std::string flow_root;
};

class UnmatchedLockRelease : public FlowError {
 public:
  UnmatchedLockRelease(const std::string& lock, const SpanId& span)
      : FlowError("release of lock '" + lock + "' at span '" + span + "' without a matching acquire"),
        lock_id(lock),
        span_id(span) {}
  std::string lock_id;
  SpanId span_id;
};

class UnknownSpan : public FlowError {
 public:
  explicit UnknownSpan(const SpanId& span) : FlowError("unknown span '" + span + "'"), span_id(span) {}
  SpanId span_id;
};

// Groups request spans by flow root and orders each group by parent links,
// with siblings ordered by start_ts. Data spans are attached in start_ts order.
FlowGraph build_flows(const TraceSet& ts);

// Splits flows in which a spawned thread issues requests alongside the main
// thread into one sequential flow per thread, adding inferred join edges.
FlowGraph split_async(FlowGraph fg);

// Adds message-queue happens-before edges and distributed-lock critical
// sections with mutual-exclusion edges between sections of different flows.
FlowGraph link_synchronization(FlowGraph fg);

// build_flows -> split_async -> link_synchronization.
FlowGraph analyze_flows(const TraceSet& ts);

// Strict partial order over request spans: intra-flow order plus
// message-queue and join edges. Lock edges never contribute. Data span ids are
// accepted too and stand for their parent request; two data spans of the
// same request are ordered by start_ts.
class CausalOrder {
 public:
  explicit CausalOrder(const FlowGraph& fg);

  bool happened_before(const SpanId& a, const SpanId& b) const;
  bool ordered(const SpanId& a, const SpanId& b) const {
    return happened_before(a, b) || happened_before(b, a);
  }
  // Data spans inside critical sections of one lock held by different flows.
  bool mutually_excluded(const SpanId& data_a, const SpanId& data_b) const;

  std::size_t node_count() const { return ids_.size(); }

 private:
  std::size_t index_of(const SpanId& id) const;
  bool request_hb(const SpanId& a, const SpanId& b) const;

  std::map<SpanId, std::size_t> index_;
  std::vector<SpanId> ids_;
  std::vector<std::vector<std::uint64_t>> reach_;
  std::map<SpanId, std::vector<std::pair<std::string, FlowId>>> lock_membership_;
  std::map<SpanId, std::pair<SpanId, Timestamp>> data_parent_;
};

bool happened_before(const FlowGraph& fg, const SpanId& a, const SpanId& b);
bool mutually_excluded(const FlowGraph& fg, const SpanId& data_a, const SpanId& data_b);

}  // namespace flowrace
