#include "support.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <chrono>

namespace flowrace::check {

Analysis analyze_run(const sim::Scenario& s, const sim::SimRun& run, Config* cfg_out) {
  auto cfg = parse_config(s.config);
  auto a = analyze(run.trace, cfg);
  if (cfg_out) *cfg_out = std::move(cfg);
  return a;
}

FullRun full_pipeline(const std::string& id, bool whitelist, std::uint64_t seed, const std::string& delays) {
  const auto t0 = std::chrono::steady_clock::now();
  FullRun r;
  r.scenario = sim::load_catalog(id);
  auto conf = r.scenario.config;
  if (!whitelist && conf.contains("oracle")) conf["oracle"].erase("response_whitelist");
  r.cfg = parse_config(conf);
  r.run = sim::run_scenario(r.scenario, seed, delays);
  r.analysis = analyze(r.run.trace, r.cfg);

  // Hand-off through the JSON documents, as the CLI does.
  const auto adoc = analysis_json(r.analysis);
  sim::SimAdapter adapter(r.scenario);
  r.tests = run_tests(jobs_from_json(adoc), adapter, r.cfg);
  r.gt = sim::exhaustive_schedules(r.scenario, r.run);
  auto gdoc = sim::to_json(r.gt, r.run.trace);
  gdoc["trace_hash"] = r.analysis.trace_hash;
  r.summary = summarize(adoc, results_json(r.analysis.trace_hash, r.tests), &gdoc);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<FalsePositive> false_positives(const FullRun& r) {
  std::vector<FalsePositive> out;
  for (const auto& f : r.summary.at("fp")) {
    FalsePositive fp{f.at("a").get<std::string>(), f.at("b").get<std::string>(), false};
    for (const auto& id : {fp.a, fp.b}) {
      const auto* span = r.run.trace.find_request(id);
      if (span && endpoint_matches(*span, r.scenario.pure_query_endpoints)) fp.pure_query = true;
    }
    out.push_back(fp);
  }
  return out;
}

std::set<Key> keys(const std::vector<CandidatePair>& pairs) {
  std::set<Key> out;
  for (const auto& p : pairs) out.emplace(p.a, p.b);
  return out;
}

namespace {

std::string logical(const StoreInstance& inst, const InstanceRules& rules) {
  for (const auto& r : rules.rules)
    if (fnmatch(r.endpoint_pattern.c_str(), inst.endpoint.c_str(), 0) == 0 &&
        fnmatch(r.store_pattern.c_str(), inst.store_name.c_str(), 0) == 0)
      return "rule:" + r.logical_store;
  return "inst:" + inst.endpoint + "/" + inst.store_name;
}

}  // namespace

std::set<Key> brute_instance_removed(const std::vector<CandidatePair>& raw, const InstanceRules& rules,
                                     std::vector<CandidatePair>* kept) {
  std::set<Key> out;
  for (const auto& p : raw) {
    auto q = p;
    q.conflict_sites.clear();
    for (const auto& s : p.conflict_sites)
      if (logical(s.a.entity.instance, rules) == logical(s.b.entity.instance, rules)) q.conflict_sites.push_back(s);
    if (q.conflict_sites.empty()) out.emplace(p.a, p.b);
    else if (kept) kept->push_back(std::move(q));
  }
  return out;
}

BruteOrder::BruteOrder(const FlowGraph& g) : fg(&g) {
  for (const auto& f : g.flows)
    for (std::size_t i = 0; i + 1 < f.ordered_spans.size(); ++i) succ[f.ordered_spans[i]].insert(f.ordered_spans[i + 1]);
  for (const auto& e : g.sync_edges) {
    if (e.kind == SyncKind::lock_mutex) continue;
    auto from = e.from_span;
    if (const auto* d = g.trace.find_data(from)) from = d->parent_request;
    succ[from].insert(e.to_span);
  }
}

bool BruteOrder::hb(const SpanId& a, const SpanId& b) const {
  std::set<SpanId> seen;
  std::vector<SpanId> stack{a};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    auto it = succ.find(cur);
    if (it == succ.end()) continue;
    for (const auto& n : it->second) {
      if (n == b) return true;
      if (seen.insert(n).second) stack.push_back(n);
    }
  }
  return false;
}

bool BruteOrder::excluded(const SpanId& da, const SpanId& db) const {
  for (const auto& x : fg->lock_sections)
    for (const auto& y : fg->lock_sections) {
      if (x.lock_id != y.lock_id || x.flow == y.flow) continue;
      const bool in_x = std::find(x.data_spans.begin(), x.data_spans.end(), da) != x.data_spans.end();
      const bool in_y = std::find(y.data_spans.begin(), y.data_spans.end(), db) != y.data_spans.end();
      if (in_x && in_y) return true;
    }
  return false;
}

std::set<Key> brute_flow_removed(const std::vector<CandidatePair>& kept, const FlowGraph& fg) {
  const BruteOrder order(fg);
  std::set<Key> out;
  for (const auto& p : kept) {
    bool removed = order.hb(p.a, p.b) || order.hb(p.b, p.a);
    if (!removed) {
      removed = true;
      for (const auto& s : p.conflict_sites) removed = removed && order.excluded(s.a.data_span, s.b.data_span);
    }
    if (removed) out.emplace(p.a, p.b);
  }
  return out;
}

}  // namespace flowrace::check
