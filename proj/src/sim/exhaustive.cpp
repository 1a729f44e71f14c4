#include "flowrace/sim/exhaustive.hpp"

#include <algorithm>

#include "flowrace/codec.hpp"

namespace flowrace::sim {

namespace {

bool pure_query(const Scenario& s, const RequestInput& r) {
  const auto ep = r.method + " " + r.target;
  return std::any_of(s.pure_query_endpoints.begin(), s.pure_query_endpoints.end(),
                     [&](const std::string& p) { return glob_match(p, ep) || glob_match(p, r.target); });
}

std::string outcome(const Scenario& s, const Engine& e, const RequestInput& a, const RequestInput& b) {
  Json doc;
  const RequestInput* in[2] = {&a, &b};
  for (int i = 0; i < 2; ++i) {
    const auto& r = e.response(i);
    if (pure_query(s, *in[i]) || !r) {
      doc["responses"].push_back(nullptr);
    } else {
      doc["responses"].push_back({{"status", status_text(r->status)}, {"body", r->body}});
    }
  }
  std::vector<std::string> logs;
  for (const auto& l : e.logs()) logs.push_back(l.service + ": " + l.message);
  std::sort(logs.begin(), logs.end());
  doc["logs"] = logs;
  doc["stores"] = dump_stores(s, e.stores());
  return doc.dump();
}

void dfs(const Scenario& s, const Engine& e, const RequestInput& a, const RequestInput& b, Exploration& out,
         std::size_t bound, const std::string& label) {
  if (e.finished()) {
    if (++out.schedules > bound) throw BoundExceeded(label, bound);
    out.outcomes.insert(outcome(s, e, a, b));
    return;
  }
  const auto ready = e.runnable();
  if (ready.empty()) throw ScenarioDeadlock(e.wait_graph());
  for (int id : ready) {
    Engine next = e;
    next.step(id);
    dfs(s, next, a, b, out, bound, label);
  }
}

}  // namespace

Exploration explore_pair(const Scenario& s, const RequestInput& a, const RequestInput& b, std::size_t max_schedules) {
  Engine e(s, initial_stores(s));
  e.submit(a, {});
  e.submit(b, {});
  Exploration out;
  dfs(s, e, a, b, out, max_schedules, a.service + " " + a.target + " / " + b.service + " " + b.target);
  return out;
}

bool GroundTruth::is_racing(const SpanId& x, const SpanId& y) const {
  return std::any_of(racing.begin(), racing.end(),
                     [&](const RacingPair& p) { return (p.a == x && p.b == y) || (p.a == y && p.b == x); });
}

GroundTruth exhaustive_schedules(const Scenario& s, const SimRun& run, std::size_t max_schedules) {
  GroundTruth gt;
  std::set<std::pair<SpanId, SpanId>> seen;
  for (std::size_t i = 0; i < run.effects.size(); ++i) {
    for (std::size_t j = i + 1; j < run.effects.size(); ++j) {
      const auto& x = run.effects[i];
      const auto& y = run.effects[j];
      if (x.request == y.request || !vc_concurrent(x.vc, y.vc) || !effects_conflict(x, y)) continue;
      seen.insert(std::minmax(x.request, y.request));
    }
  }
  gt.universe.assign(seen.begin(), seen.end());
  for (const auto& [a, b] : gt.universe) {
    const auto* ra = run.trace.find_request(a);
    const auto* rb = run.trace.find_request(b);
    const auto ex = explore_pair(s, input_of(*ra), input_of(*rb), max_schedules);
    if (ex.outcomes.size() > 1) gt.racing.push_back({a, b, ex.schedules, ex.outcomes.size()});
  }
  return gt;
}

std::vector<PairPattern> unmatched_patterns(const Scenario& s, const SimRun& run, const GroundTruth& gt) {
  std::vector<PairPattern> out;
  for (const auto& p : s.ground_truth) {
    const bool hit = std::any_of(gt.racing.begin(), gt.racing.end(), [&](const RacingPair& r) {
      const auto la = span_label(*run.trace.find_request(r.a));
      const auto lb = span_label(*run.trace.find_request(r.b));
      return (glob_match(p.a, la) && glob_match(p.b, lb)) || (glob_match(p.a, lb) && glob_match(p.b, la));
    });
    if (!hit) out.push_back(p);
  }
  return out;
}

Json to_json(const GroundTruth& gt, const TraceSet& ts) {
  Json doc;
  doc["universe"] = Json::array();
  for (const auto& [a, b] : gt.universe) doc["universe"].push_back({a, b});
  doc["racing"] = Json::array();
  for (const auto& r : gt.racing) {
    doc["racing"].push_back({{"a", r.a},
                             {"b", r.b},
                             {"a_label", span_label(*ts.find_request(r.a))},
                             {"b_label", span_label(*ts.find_request(r.b))},
                             {"schedules", r.schedules},
                             {"outcomes", r.outcomes}});
  }
  return doc;
}

}  // namespace flowrace::sim
