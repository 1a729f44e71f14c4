#include "flowrace/interleave.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <tuple>

namespace flowrace {

std::string to_string(ReplayOrder o) { return o == ReplayOrder::forward ? "forward" : "reverse"; }

RequestSpec request_spec(const RequestSpan& r) {
  if (!r.request_body) throw NonReplayableRequest(r.span_id, "request body was not recorded");
  if (r.method.empty() || r.target.empty()) throw NonReplayableRequest(r.span_id, "method or target missing");
  return RequestSpec{r.span_id, r.service, r.protocol, r.method, r.target, r.request_headers, *r.request_body};
}

StoreScope snapshot_scope(const CandidatePair& pair, const TraceSet& ts, const std::vector<StoreInstance>& coupled) {
  std::map<SpanId, std::vector<SpanId>> children;
  for (const auto& r : ts.request_spans)
    if (r.parent_span_id) children[*r.parent_span_id].push_back(r.span_id);
  std::set<SpanId> subtree;
  std::deque<SpanId> queue{pair.a, pair.b};
  while (!queue.empty()) {
    auto id = queue.front();
    queue.pop_front();
    if (!subtree.insert(id).second) continue;
    if (auto it = children.find(id); it != children.end())
      for (const auto& c : it->second) queue.push_back(c);
  }
  StoreScope scope(coupled.begin(), coupled.end());
  for (const auto& d : ts.data_spans)
    if (subtree.count(d.parent_request)) scope.insert(d.instance);
  return scope;
}

namespace {

Observation observe(ReplayOrder order, const RequestSpec& a, const RequestSpec& b, const StoreScope& scope,
                    TargetAdapter& adapter) {
  Observation obs;
  obs.order = order;
  obs.responses.resize(2);
  const auto marker = adapter.log_marker();
  if (order == ReplayOrder::forward) {
    obs.responses[0] = adapter.send(a);
    obs.responses[1] = adapter.send(b);
  } else {
    obs.responses[1] = adapter.send(b);
    obs.responses[0] = adapter.send(a);
  }
  obs.logs = adapter.collect_logs(marker);
  obs.final_state = adapter.dump_state(scope);
  return obs;
}

}  // namespace

InterleaveResult replay_pair(const CandidatePair& pair, const RequestSpec& a, const RequestSpec& b,
                             const StoreScope& scope, TargetAdapter& adapter) {
  if (!adapter.supports_snapshot()) throw SnapshotUnsupported();
  InterleaveResult res;
  res.pair = pair;
  res.request_a = a;
  res.request_b = b;
  res.scope = scope;

  const auto snap = adapter.snapshot(scope);
  res.baseline_state = adapter.dump_state(scope);
  try {
    res.forward = observe(ReplayOrder::forward, a, b, scope, adapter);
    adapter.restore(snap);
    res.reverse = observe(ReplayOrder::reverse, a, b, scope, adapter);
  } catch (...) {
    try {
      adapter.restore(snap);
    } catch (const std::exception& e) {
      throw AdapterDead(std::string("restore after a failed replay also failed: ") + e.what());
    }
    throw;
  }
  adapter.restore(snap);
  res.restored_state = adapter.dump_state(scope);
  return res;
}

InterleaveResult replay_pair(const CandidatePair& pair, const TraceSet& ts, TargetAdapter& adapter,
                             const std::vector<StoreInstance>& coupled) {
  const auto* ra = ts.find_request(pair.a);
  const auto* rb = ts.find_request(pair.b);
  if (!ra) throw NonReplayableRequest(pair.a, "not in trace");
  if (!rb) throw NonReplayableRequest(pair.b, "not in trace");
  return replay_pair(pair, request_spec(*ra), request_spec(*rb), snapshot_scope(pair, ts, coupled), adapter);
}

std::vector<PairJob> make_jobs(const std::vector<CandidatePair>& pairs, const TraceSet& ts,
                               const std::vector<StoreInstance>& coupled) {
  std::vector<PairJob> jobs;
  for (const auto& p : pairs) {
    PairJob job;
    job.pair = p;
    job.scope = snapshot_scope(p, ts, coupled);
    try {
      const auto* ra = ts.find_request(p.a);
      const auto* rb = ts.find_request(p.b);
      if (!ra || !rb) throw NonReplayableRequest(ra ? p.b : p.a, "not in trace");
      job.a = request_spec(*ra);
      job.b = request_spec(*rb);
    } catch (const NonReplayableRequest& e) {
      job.unreplayable = e.what();
    }
    jobs.push_back(std::move(job));
  }
  return jobs;
}

CampaignResult run_campaign(std::vector<PairJob> jobs, TargetAdapter& adapter, const CampaignBudget& budget) {
  std::sort(jobs.begin(), jobs.end(),
            [](const PairJob& x, const PairJob& y) { return std::tie(x.pair.a, x.pair.b) < std::tie(y.pair.a, y.pair.b); });
  CampaignResult out;
  const auto start = std::chrono::steady_clock::now();
  std::size_t attempted = 0;
  for (auto& job : jobs) {
    if (out.aborted) {
      out.skipped.push_back({job.pair, "campaign aborted: " + out.abort_reason});
      continue;
    }
    if (budget.max_pairs && attempted >= *budget.max_pairs) {
      out.skipped.push_back({job.pair, "budget: max pairs (" + std::to_string(*budget.max_pairs) + ") reached"});
      continue;
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    if (budget.max_seconds && elapsed.count() > *budget.max_seconds) {
      out.skipped.push_back({job.pair, "budget: time limit reached"});
      continue;
    }
    if (!job.unreplayable.empty()) {
      out.skipped.push_back({job.pair, job.unreplayable});
      continue;
    }
    ++attempted;
    try {
      auto res = replay_pair(job.pair, job.a, job.b, job.scope, adapter);
      if (res.restored_state != res.baseline_state) {
        out.aborted = true;
        out.abort_reason = "restore did not return the target to its snapshot";
        res.aborted = true;
        res.abort_reason = out.abort_reason;
      }
      out.results.push_back(std::move(res));
    } catch (const AdapterDead& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      out.skipped.push_back({job.pair, e.what()});
    } catch (const ReplayError& e) {
      out.skipped.push_back({job.pair, e.what()});
    }
  }
  return out;
}

}  // namespace flowrace
