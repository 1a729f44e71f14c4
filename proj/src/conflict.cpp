#include "flowrace/conflict.hpp"

#include <algorithm>
#include <tuple>

#include "flowrace/codec.hpp"
#include "flowrace/kernels.hpp"

namespace flowrace {

std::string to_string(PairStatus s) {
  switch (s) {
    case PairStatus::raw: return "raw";
    case PairStatus::pruned_instance: return "pruned_instance";
    case PairStatus::pruned_flow: return "pruned_flow";
    case PairStatus::early_confirmed: return "early_confirmed";
    case PairStatus::needs_test: return "needs_test";
  }
  return "raw";
}

SqlMode sql_mode_from_string(const std::string& s) {
  if (s == "skip") return SqlMode::skip;
  if (s == "conservative") return SqlMode::conservative;
  throw ConfigError("sql_mode must be 'skip' or 'conservative', got '" + s + "'");
}

std::string to_string(SqlMode m) { return m == SqlMode::skip ? "skip" : "conservative"; }

AccountingMismatch::AccountingMismatch(const PruningReport& r)
    : std::logic_error("accounting mismatch: random_pairs=" + std::to_string(r.random_pairs) +
                       " but stages sum to " +
                       std::to_string(r.pruned_instance + r.pruned_flow + r.early_confirmed + r.needs_test)) {}

std::string InstanceRules::logical_store(const StoreInstance& inst) const {
  const InstanceRule* hit = nullptr;
  for (const auto& r : rules) {
    if (!glob_match(r.endpoint_pattern, inst.endpoint) || !glob_match(r.store_pattern, inst.store_name)) continue;
    if (hit && hit->logical_store != r.logical_store)
      throw ConfigError("instance " + inst.str() + " matches both '" + hit->logical_store + "' and '" +
                        r.logical_store + "'");
    hit = &r;
  }
  return hit ? hit->logical_store : inst.str();
}

bool accesses_conflict(const Access& x, const Access& y, SqlMode mode) {
  if (x.op_class == OpClass::read && y.op_class == OpClass::read) return false;
  if (x.entity.kind != y.entity.kind) return false;
  const bool xi = x.entity.precision == Precision::imprecise;
  const bool yi = y.entity.precision == Precision::imprecise;
  if ((xi || yi) && mode == SqlMode::skip) return false;
  if (x.entity.space != y.entity.space && !(xi && x.entity.space.empty()) && !(yi && y.entity.space.empty()))
    return false;
  if (!xi && !yi && !x.entity.shares_key(y.entity)) return false;
  return x.entity.columns.overlaps(y.entity.columns);
}

bool pairable(const DataSpan& ds, const Access& acc, SqlMode mode) {
  if (ds.lock_id) return false;
  return mode == SqlMode::conservative || acc.entity.precision == Precision::exact;
}

namespace {

struct RequestAccesses {
  const RequestSpan* request;
  std::vector<const Access*> accesses;
};

std::vector<RequestAccesses> group_accesses(const FlowGraph& fg, const AccessMap& accesses, SqlMode mode) {
  std::map<SpanId, std::vector<const Access*>> by_request;
  std::vector<const DataSpan*> data;
  for (const auto& d : fg.trace.data_spans) data.push_back(&d);
  std::sort(data.begin(), data.end(), [](const DataSpan* a, const DataSpan* b) {
    return std::tie(a->start_ts, a->span_id) < std::tie(b->start_ts, b->span_id);
  });
  for (const auto* d : data) {
    const auto it = accesses.find(d->span_id);
    if (it == accesses.end() || !pairable(*d, it->second, mode)) continue;
    by_request[d->parent_request].push_back(&it->second);
  }
  std::vector<RequestAccesses> out;
  for (auto& [id, acc] : by_request) {
    const auto* r = fg.trace.find_request(id);
    if (!r) throw UnknownSpan(id);
    out.push_back({r, std::move(acc)});
  }
  std::sort(out.begin(), out.end(), [](const RequestAccesses& a, const RequestAccesses& b) {
    return std::tie(a.request->start_ts, a.request->span_id) < std::tie(b.request->start_ts, b.request->span_id);
  });
  return out;
}

bool any_conflict(const RequestAccesses& x, const RequestAccesses& y, SqlMode mode) {
  for (const auto* a : x.accesses)
    for (const auto* b : y.accesses)
      if (accesses_conflict(*a, *b, mode)) return true;
  return false;
}

CandidatePair make_pair(const RequestAccesses& x, const RequestAccesses& y, SqlMode mode) {
  CandidatePair p{x.request->span_id, y.request->span_id, {}, PairStatus::raw};
  for (const auto* a : x.accesses)
    for (const auto* b : y.accesses)
      if (accesses_conflict(*a, *b, mode)) p.conflict_sites.push_back({*a, *b});
  return p;
}

void canonical_order(std::vector<CandidatePair>& pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const CandidatePair& x, const CandidatePair& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
}

template <typename PairsFn>
std::vector<CandidatePair> enumerate_with(const FlowGraph& fg, const AccessMap& accesses, SqlMode mode,
                                          PairsFn pairs_fn) {
  const auto groups = group_accesses(fg, accesses, mode);
  const auto idx = pairs_fn(groups.size(), [&](std::size_t i, std::size_t j) {
    return any_conflict(groups[i], groups[j], mode);
  });
  std::vector<CandidatePair> out;
  out.reserve(idx.size());
  for (const auto& [i, j] : idx) out.push_back(make_pair(groups[i], groups[j], mode));
  canonical_order(out);
  return out;
}

}  // namespace

std::vector<CandidatePair> enumerate_random_pairs(const FlowGraph& fg, const AccessMap& accesses, SqlMode mode) {
  return enumerate_with(fg, accesses, mode, [](std::size_t n, auto pred) { return kernels::conflicting_pairs(n, pred); });
}

std::vector<CandidatePair> enumerate_random_pairs_serial(const FlowGraph& fg, const AccessMap& accesses,
                                                         SqlMode mode) {
  return enumerate_with(fg, accesses, mode,
                        [](std::size_t n, auto pred) { return kernels::conflicting_pairs_serial(n, pred); });
}

Partition prune_by_instance(std::vector<CandidatePair> pairs, const InstanceRules& rules) {
  Partition out;
  for (auto& p : pairs) {
    std::vector<ConflictSite> same;
    for (const auto& s : p.conflict_sites)
      if (rules.equivalent(s.a.entity.instance, s.b.entity.instance)) same.push_back(s);
    if (same.empty()) {
      p.status = PairStatus::pruned_instance;
      out.removed.push_back(std::move(p));
    } else {
      p.conflict_sites = std::move(same);
      out.kept.push_back(std::move(p));
    }
  }
  return out;
}

Partition prune_by_flow(std::vector<CandidatePair> pairs, const CausalOrder& order) {
  Partition out;
  for (auto& p : pairs) {
    bool removed = order.ordered(p.a, p.b);
    if (!removed) {
      removed = std::all_of(p.conflict_sites.begin(), p.conflict_sites.end(), [&](const ConflictSite& s) {
        return order.mutually_excluded(s.a.data_span, s.b.data_span);
      });
    }
    if (removed) {
      p.status = PairStatus::pruned_flow;
      out.removed.push_back(std::move(p));
    } else {
      out.kept.push_back(std::move(p));
    }
  }
  return out;
}

Partition prune_by_flow(std::vector<CandidatePair> pairs, const FlowGraph& fg) {
  return prune_by_flow(std::move(pairs), CausalOrder(fg));
}

bool endpoint_matches(const RequestSpan& r, const std::vector<std::string>& patterns) {
  const auto full = r.endpoint();
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::string& p) { return glob_match(p, full) || glob_match(p, r.target); });
}

EarlySplit early_validate(std::vector<CandidatePair> pairs, const TraceSet& ts,
                          const std::vector<std::string>& idempotent_endpoints) {
  EarlySplit out;
  for (auto& p : pairs) {
    const auto* later = ts.find_request(p.b);
    if (!later) throw UnknownSpan(p.b);
    const bool creates = std::any_of(p.conflict_sites.begin(), p.conflict_sites.end(),
                                     [](const ConflictSite& s) { return s.b.creation; });
    if (creates && !endpoint_matches(*later, idempotent_endpoints)) {
      p.status = PairStatus::early_confirmed;
      out.confirmed.push_back(std::move(p));
    } else {
      p.status = PairStatus::needs_test;
      out.remaining.push_back(std::move(p));
    }
  }
  return out;
}

PairStages find_conflicts(const FlowGraph& fg, const AccessMap& accesses, const ConflictOptions& opts) {
  PairStages st;
  st.raw = enumerate_random_pairs(fg, accesses, opts.sql_mode);
  auto inst = prune_by_instance(st.raw, opts.instance_rules);
  st.pruned_instance = std::move(inst.removed);
  auto flow = prune_by_flow(std::move(inst.kept), fg);
  st.pruned_flow = std::move(flow.removed);
  auto early = early_validate(std::move(flow.kept), fg.trace, opts.idempotent_endpoints);
  st.early_confirmed = std::move(early.confirmed);
  st.needs_test = std::move(early.remaining);
  return st;
}

void check_accounting(const PruningReport& r) {
  if (!r.identity_holds()) throw AccountingMismatch(r);
}

PruningReport make_report(const PairStages& s) {
  PruningReport r{s.raw.size(), s.pruned_instance.size(), s.pruned_flow.size(), s.early_confirmed.size(),
                  s.needs_test.size()};
  check_accounting(r);
  return r;
}

}  // namespace flowrace
