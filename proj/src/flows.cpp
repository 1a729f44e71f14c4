#include "flowrace/flows.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <tuple>

#include "flowrace/entity.hpp"
#include "flowrace/kernels.hpp"

namespace flowrace {

std::string to_string(SyncKind k) {
  switch (k) {
    case SyncKind::mq_happens_before: return "mq_happens_before";
    case SyncKind::lock_mutex: return "lock_mutex";
    case SyncKind::join_happens_before: return "join_happens_before";
  }
  return "unknown";
}

std::size_t RequestFlow::position(const SpanId& id) const {
  const auto it = std::find(ordered_spans.begin(), ordered_spans.end(), id);
  return it == ordered_spans.end() ? npos : static_cast<std::size_t>(it - ordered_spans.begin());
}

const RequestFlow* FlowGraph::owning_flow(const SpanId& request_span) const {
  for (const auto& f : flows) {
    const auto p = f.position(request_span);
    if (p != RequestFlow::npos && f.owned[p]) return &f;
  }
  return nullptr;
}

namespace {

bool by_start(const RequestSpan* a, const RequestSpan* b) {
  return std::tie(a->start_ts, a->span_id) < std::tie(b->start_ts, b->span_id);
}

}  // namespace

FlowGraph build_flows(const TraceSet& ts) {
  FlowGraph fg;
  fg.trace = ts;

  std::map<std::string, std::vector<const RequestSpan*>> groups;
  for (const auto& r : ts.request_spans) groups[r.flow_id.root].push_back(&r);

  std::map<SpanId, std::size_t> flow_of;
  for (auto& [root, members] : groups) {
    std::map<SpanId, const RequestSpan*> by_id;
    for (const auto* r : members) by_id[r->span_id] = r;
    std::map<SpanId, std::vector<const RequestSpan*>> children;
    std::vector<const RequestSpan*> roots;
    for (const auto* r : members) {
      if (r->parent_span_id && by_id.count(*r->parent_span_id)) {
        children[*r->parent_span_id].push_back(r);
      } else {
        if (r->parent_span_id && ts.find_request(*r->parent_span_id))
          fg.diagnostics.push_back("span '" + r->span_id + "' has its parent in another flow; treated as a root");
        roots.push_back(r);
      }
    }
    for (auto& [_, c] : children) std::sort(c.begin(), c.end(), by_start);
    std::sort(roots.begin(), roots.end(), by_start);

    RequestFlow flow;
    flow.flow_id.root = root;
    std::set<SpanId> seen;
    // Pre-order DFS with an explicit stack; children pushed in reverse.
    for (const auto* start : roots) {
      std::vector<const RequestSpan*> stack{start};
      while (!stack.empty()) {
        const auto* r = stack.back();
        stack.pop_back();
        if (!seen.insert(r->span_id).second) throw CyclicParentChain(root);
        flow.ordered_spans.push_back(r->span_id);
        if (auto it = children.find(r->span_id); it != children.end())
          for (auto c = it->second.rbegin(); c != it->second.rend(); ++c) stack.push_back(*c);
      }
    }
    if (seen.size() != members.size()) throw CyclicParentChain(root);
    flow.owned.assign(flow.ordered_spans.size(), true);
    for (const auto& id : flow.ordered_spans) flow_of[id] = fg.flows.size();
    fg.flows.push_back(std::move(flow));
  }

  std::vector<const DataSpan*> data;
  for (const auto& d : ts.data_spans) data.push_back(&d);
  std::sort(data.begin(), data.end(), [](const DataSpan* a, const DataSpan* b) {
    return std::tie(a->start_ts, a->span_id) < std::tie(b->start_ts, b->span_id);
  });
  for (const auto* d : data) {
    const auto it = flow_of.find(d->parent_request);
    if (it == flow_of.end()) throw DanglingDataSpan(d->span_id);
    fg.flows[it->second].data_attachments[d->parent_request].push_back(d->span_id);
  }
  return fg;
}

namespace {

struct MqEndpoint {
  const DataSpan* produce = nullptr;
  MqOp op;
};

// True when `to` is reachable from `from` over the current request-level edges.
bool reaches(const std::map<SpanId, std::vector<SpanId>>& succ, const SpanId& from, const SpanId& to) {
  std::set<SpanId> seen{from};
  std::deque<SpanId> queue{from};
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    if (v == to) return true;
    if (auto it = succ.find(v); it != succ.end())
      for (const auto& w : it->second)
        if (seen.insert(w).second) queue.push_back(w);
  }
  return false;
}

std::optional<std::string> header(const RequestSpan& r, const std::string& name) {
  for (const auto& [k, v] : r.request_headers) {
    std::string lk = k;
    std::transform(lk.begin(), lk.end(), lk.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lk == name) return v;
  }
  return std::nullopt;
}

void link_queues(FlowGraph& fg) {
  std::map<SpanId, std::vector<SpanId>> succ;
  for (const auto& f : fg.flows)
    for (std::size_t i = 0; i + 1 < f.ordered_spans.size(); ++i)
      succ[f.ordered_spans[i]].push_back(f.ordered_spans[i + 1]);
  for (const auto& e : fg.sync_edges)
    if (e.kind == SyncKind::join_happens_before) succ[e.from_span].push_back(e.to_span);

  std::vector<MqEndpoint> produces;
  for (const auto& d : fg.trace.data_spans) {
    if (d.store_kind != StoreKind::mq) continue;
    auto op = parse_mq_op(d.operation_text);
    if (op && op->verb == "produce") produces.push_back({&d, *op});
  }
  std::sort(produces.begin(), produces.end(), [](const MqEndpoint& a, const MqEndpoint& b) {
    return std::tie(a.produce->start_ts, a.produce->span_id) < std::tie(b.produce->start_ts, b.produce->span_id);
  });
  std::vector<const RequestSpan*> consumes;
  for (const auto& r : fg.trace.request_spans)
    if (r.protocol == Protocol::mq_consume) consumes.push_back(&r);
  std::sort(consumes.begin(), consumes.end(), by_start);

  std::vector<bool> used(produces.size(), false);
  std::vector<std::pair<const MqEndpoint*, const RequestSpan*>> matches;
  std::vector<const RequestSpan*> fifo;
  for (const auto* c : consumes) {
    const auto msg = header(*c, "message-id");
    bool matched = false;
    if (msg) {
      for (std::size_t i = 0; i < produces.size(); ++i) {
        if (!used[i] && produces[i].op.msg_id == msg && produces[i].op.topic == c->target) {
          used[i] = true;
          matches.emplace_back(&produces[i], c);
          matched = true;
          break;
        }
      }
    }
    if (!matched) fifo.push_back(c);
  }
  for (const auto* c : fifo) {
    const auto key = header(*c, "partition-key");
    bool matched = false;
    for (std::size_t i = 0; i < produces.size(); ++i) {
      if (used[i] || produces[i].op.topic != c->target || produces[i].op.partition_key != key) continue;
      used[i] = true;
      matches.emplace_back(&produces[i], c);
      matched = true;
      break;
    }
    if (!matched) fg.diagnostics.push_back("consume '" + c->span_id + "' on '" + c->target + "' has no matching produce");
  }

  std::sort(matches.begin(), matches.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second->start_ts, a.second->span_id) < std::tie(b.second->start_ts, b.second->span_id);
  });
  for (const auto& [p, c] : matches) {
    const auto& producer_req = p->produce->parent_request;
    const auto* from = fg.owning_flow(producer_req);
    const auto* to = fg.owning_flow(c->span_id);
    if (!from || !to || from->flow_id == to->flow_id) continue;
    if (reaches(succ, c->span_id, producer_req)) {
      fg.diagnostics.push_back("dropped queue edge " + p->produce->span_id + " -> " + c->span_id + ": would form a cycle");
      continue;
    }
    succ[producer_req].push_back(c->span_id);
    fg.sync_edges.push_back({SyncKind::mq_happens_before, from->flow_id, to->flow_id, p->op.topic,
                             p->produce->span_id, c->span_id});
  }
}

void link_locks(FlowGraph& fg) {
  std::map<SpanId, const DataSpan*> data_by_id;
  for (const auto& d : fg.trace.data_spans) data_by_id[d.span_id] = &d;

  for (const auto& f : fg.flows) {
    std::vector<const DataSpan*> lane;
    for (std::size_t i = 0; i < f.ordered_spans.size(); ++i) {
      if (!f.owned[i]) continue;
      if (auto it = f.data_attachments.find(f.ordered_spans[i]); it != f.data_attachments.end())
        for (const auto& id : it->second) lane.push_back(data_by_id.at(id));
    }
    std::sort(lane.begin(), lane.end(), [](const DataSpan* a, const DataSpan* b) {
      return std::tie(a->start_ts, a->span_id) < std::tie(b->start_ts, b->span_id);
    });

    std::map<std::string, LockSection> open;
    std::vector<LockSection> done;
    for (const auto* d : lane) {
      const auto kind = lock_op_kind(*d);
      if (kind == LockOp::acquire && !open.count(*d->lock_id)) {
        open[*d->lock_id] = LockSection{*d->lock_id, f.flow_id, d->span_id, std::nullopt, {}};
      } else if (kind == LockOp::release) {
        auto it = open.find(*d->lock_id);
        if (it == open.end()) throw UnmatchedLockRelease(*d->lock_id, d->span_id);
        it->second.data_spans.push_back(d->span_id);
        it->second.release_span = d->span_id;
        done.push_back(std::move(it->second));
        open.erase(it);
        continue;
      }
      for (auto& [_, s] : open) s.data_spans.push_back(d->span_id);
    }
    for (auto& [lock, s] : open) {
      fg.diagnostics.push_back("lock '" + lock + "' acquired at '" + s.acquire_span + "' is never released");
      done.push_back(std::move(s));
    }
    for (auto& s : done) fg.lock_sections.push_back(std::move(s));
  }

  auto acquire_ts = [&](const LockSection& s) { return data_by_id.at(s.acquire_span)->start_ts; };
  for (std::size_t i = 0; i < fg.lock_sections.size(); ++i) {
    for (std::size_t j = i + 1; j < fg.lock_sections.size(); ++j) {
      const auto* a = &fg.lock_sections[i];
      const auto* b = &fg.lock_sections[j];
      if (a->lock_id != b->lock_id || a->flow == b->flow) continue;
      if (std::make_tuple(acquire_ts(*b), b->acquire_span) < std::make_tuple(acquire_ts(*a), a->acquire_span)) std::swap(a, b);
      fg.sync_edges.push_back({SyncKind::lock_mutex, a->flow, b->flow, a->lock_id, a->acquire_span, b->acquire_span});
    }
  }
}

}  // namespace

FlowGraph link_synchronization(FlowGraph fg) {
  std::erase_if(fg.sync_edges, [](const SyncEdge& e) { return e.kind != SyncKind::join_happens_before; });
  fg.lock_sections.clear();
  link_queues(fg);
  link_locks(fg);
  return fg;
}

FlowGraph analyze_flows(const TraceSet& ts) { return link_synchronization(split_async(build_flows(ts))); }

CausalOrder::CausalOrder(const FlowGraph& fg) {
  for (const auto& r : fg.trace.request_spans) index_.emplace(r.span_id, 0);
  for (auto& [id, idx] : index_) {
    idx = ids_.size();
    ids_.push_back(id);
  }
  for (const auto& d : fg.trace.data_spans) data_parent_[d.span_id] = {d.parent_request, d.start_ts};

  std::vector<std::vector<std::size_t>> succ(ids_.size());
  auto add = [&](const SpanId& a, const SpanId& b) {
    auto& s = succ[index_of(a)];
    const auto t = index_of(b);
    if (std::find(s.begin(), s.end(), t) == s.end()) s.push_back(t);
  };
  for (const auto& f : fg.flows)
    for (std::size_t i = 0; i + 1 < f.ordered_spans.size(); ++i) add(f.ordered_spans[i], f.ordered_spans[i + 1]);
  for (const auto& e : fg.sync_edges) {
    if (e.kind == SyncKind::lock_mutex) continue;
    const auto it = data_parent_.find(e.from_span);
    add(it != data_parent_.end() ? it->second.first : e.from_span, e.to_span);
  }
  reach_ = kernels::transitive_closure(succ);

  for (const auto& s : fg.lock_sections)
    for (const auto& d : s.data_spans) lock_membership_[d].emplace_back(s.lock_id, s.flow);
}

std::size_t CausalOrder::index_of(const SpanId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw UnknownSpan(id);
  return it->second;
}

bool CausalOrder::request_hb(const SpanId& a, const SpanId& b) const {
  return kernels::test_bit(reach_[index_of(a)], index_of(b));
}

bool CausalOrder::happened_before(const SpanId& a, const SpanId& b) const {
  const auto da = data_parent_.find(a);
  const auto db = data_parent_.find(b);
  const SpanId& ra = da != data_parent_.end() ? da->second.first : a;
  const SpanId& rb = db != data_parent_.end() ? db->second.first : b;
  if (ra == rb && da != data_parent_.end() && db != data_parent_.end())
    return std::tie(da->second.second, a) < std::tie(db->second.second, b);
  return request_hb(ra, rb);
}

bool CausalOrder::mutually_excluded(const SpanId& data_a, const SpanId& data_b) const {
  const auto a = lock_membership_.find(data_a);
  const auto b = lock_membership_.find(data_b);
  if (a == lock_membership_.end() || b == lock_membership_.end()) return false;
  for (const auto& [la, fa] : a->second)
    for (const auto& [lb, fb] : b->second)
      if (la == lb && fa != fb) return true;
  return false;
}

bool happened_before(const FlowGraph& fg, const SpanId& a, const SpanId& b) {
  return CausalOrder(fg).happened_before(a, b);
}

bool mutually_excluded(const FlowGraph& fg, const SpanId& data_a, const SpanId& data_b) {
  return CausalOrder(fg).mutually_excluded(data_a, data_b);
}

}  // namespace flowrace
