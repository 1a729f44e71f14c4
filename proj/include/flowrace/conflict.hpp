#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowrace/entity.hpp"
#include "flowrace/flows.hpp"

namespace flowrace {

enum class PairStatus { raw, pruned_instance, pruned_flow, early_confirmed, needs_test };

std::string to_string(PairStatus s);

struct ConflictSite {
  Access a;
  Access b;

  bool operator==(const ConflictSite&) const = default;
};

struct CandidatePair {
  SpanId a;  // request span with the earlier start_ts
  SpanId b;
  std::vector<ConflictSite> conflict_sites;
  PairStatus status = PairStatus::raw;

  bool operator==(const CandidatePair&) const = default;
};

// skip: imprecise accesses never pair. conservative: an imprecise access is a
// table-level wildcard over all keys and columns of its namespace.
enum class SqlMode { skip, conservative };

SqlMode sql_mode_from_string(const std::string& s);
std::string to_string(SqlMode m);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InstanceRule {
  std::string endpoint_pattern;    // glob over StoreInstance::endpoint
  std::string store_pattern = "*"; // glob over StoreInstance::store_name
  std::string logical_store;
};

struct InstanceRules {
  std::vector<InstanceRule> rules;

  // Logical store of an instance: the rule it matches, else endpoint/store_name.
  // Throws ConfigError when two rules with different names match.
  std::string logical_store(const StoreInstance& inst) const;
  bool equivalent(const StoreInstance& x, const StoreInstance& y) const {
    return logical_store(x) == logical_store(y);
  }
};

struct PruningReport {
  std::size_t random_pairs = 0;
  std::size_t pruned_instance = 0;
  std::size_t pruned_flow = 0;
  std::size_t early_confirmed = 0;
  std::size_t needs_test = 0;

  bool operator==(const PruningReport&) const = default;

  bool identity_holds() const {
    return random_pairs == pruned_instance + pruned_flow + early_confirmed + needs_test;
  }
};

class AccountingMismatch : public std::logic_error {
 public:
  explicit AccountingMismatch(const PruningReport& r);
};

using AccessMap = std::map<SpanId, Access>;

// Entity-level conflict, ignoring instance: same kind and namespace,
// intersecting keys, overlapping columns, at least one write.
bool accesses_conflict(const Access& x, const Access& y, SqlMode mode = SqlMode::skip);

// Whether an access takes part in pairing at all (lock spans and, in skip
// mode, imprecise accesses do not).
bool pairable(const DataSpan& ds, const Access& acc, SqlMode mode);

std::vector<CandidatePair> enumerate_random_pairs(const FlowGraph& fg, const AccessMap& accesses,
                                                  SqlMode mode = SqlMode::skip);
std::vector<CandidatePair> enumerate_random_pairs_serial(const FlowGraph& fg, const AccessMap& accesses,
                                                         SqlMode mode = SqlMode::skip);

struct Partition {
  std::vector<CandidatePair> kept;
  std::vector<CandidatePair> removed;
};

Partition prune_by_instance(std::vector<CandidatePair> pairs, const InstanceRules& rules);
Partition prune_by_flow(std::vector<CandidatePair> pairs, const FlowGraph& fg);
Partition prune_by_flow(std::vector<CandidatePair> pairs, const CausalOrder& order);

struct EarlySplit {
  std::vector<CandidatePair> confirmed;
  std::vector<CandidatePair> remaining;
};

// Endpoint patterns are globs over "METHOD target" or over the bare target.
bool endpoint_matches(const RequestSpan& r, const std::vector<std::string>& patterns);

EarlySplit early_validate(std::vector<CandidatePair> pairs, const TraceSet& ts,
                          const std::vector<std::string>& idempotent_endpoints);

struct PairStages {
  std::vector<CandidatePair> raw;
  std::vector<CandidatePair> pruned_instance;
  std::vector<CandidatePair> pruned_flow;
  std::vector<CandidatePair> early_confirmed;
  std::vector<CandidatePair> needs_test;
};

struct ConflictOptions {
  SqlMode sql_mode = SqlMode::skip;
  InstanceRules instance_rules;
  std::vector<std::string> idempotent_endpoints;
};

// enumerate -> prune_by_instance -> prune_by_flow -> early_validate.
PairStages find_conflicts(const FlowGraph& fg, const AccessMap& accesses, const ConflictOptions& opts);

// Throws AccountingMismatch when the counts do not add up.
PruningReport make_report(const PairStages& stages);
void check_accounting(const PruningReport& r);

}  // namespace flowrace
