#include "flowrace/pipeline.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "flowrace/codec.hpp"
#include "flowrace/entity.hpp"

namespace flowrace {

std::string trace_hash(const TraceSet& ts) { return sha256_hex(write_trace_text(ts)); }

Analysis analyze(const TraceSet& ts, const Config& cfg) {
  Analysis a;
  a.trace_hash = trace_hash(ts);
  a.flows = analyze_flows(ts);
  a.accesses = extract_all(ts, cfg.pk_rules);
  a.stages = find_conflicts(a.flows, a.accesses, cfg.conflict_options());
  a.report = make_report(a.stages);
  a.jobs = make_jobs(a.stages.needs_test, ts, cfg.coupled_stores);
  return a;
}

Json to_json(const Access& a) {
  Json keys = Json::array();
  for (const auto& [f, v] : a.entity.keys) keys.push_back({f, v});
  Json j = {{"data_span", a.data_span},
            {"instance", a.entity.instance.str()},
            {"kind", to_string(a.entity.kind)},
            {"space", a.entity.space},
            {"keys", keys},
            {"columns", a.entity.columns.all ? Json("*") : Json(a.entity.columns.names)},
            {"precision", to_string(a.entity.precision)},
            {"op", to_string(a.op_class)},
            {"creation", a.creation}};
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

Json to_json(const CandidatePair& p, const TraceSet& ts) {
  Json j = {{"a", p.a}, {"b", p.b}, {"status", to_string(p.status)}};
  if (const auto* r = ts.find_request(p.a)) j["a_endpoint"] = r->service + " " + r->endpoint();
  if (const auto* r = ts.find_request(p.b)) j["b_endpoint"] = r->service + " " + r->endpoint();
  j["sites"] = Json::array();
  for (const auto& s : p.conflict_sites) j["sites"].push_back({{"a", to_json(s.a)}, {"b", to_json(s.b)}});
  return j;
}

Json to_json(const RequestSpec& r) {
  return {{"origin", r.origin},   {"service", r.service}, {"protocol", to_string(r.protocol)},
          {"method", r.method},   {"target", r.target},   {"headers", r.headers},
          {"body", r.body}};
}

RequestSpec request_spec_from_json(const Json& j) {
  RequestSpec r;
  r.origin = j.at("origin").get<std::string>();
  r.service = j.at("service").get<std::string>();
  r.protocol = protocol_from_string(j.at("protocol").get<std::string>());
  r.method = j.at("method").get<std::string>();
  r.target = j.at("target").get<std::string>();
  r.headers = j.value("headers", std::map<std::string, std::string>{});
  r.body = j.value("body", "");
  return r;
}

Json to_json(const StoreScope& scope) {
  Json out = Json::array();
  for (const auto& s : scope) out.push_back({{"endpoint", s.endpoint}, {"store_name", s.store_name}});
  return out;
}

StoreScope scope_from_json(const Json& j) {
  StoreScope out;
  for (const auto& s : j) out.insert({s.at("endpoint").get<std::string>(), s.at("store_name").get<std::string>()});
  return out;
}

Json to_json(const Verdict& v) {
  Json j = {{"a", v.pair.a}, {"b", v.pair.b}, {"is_bug", v.is_bug}, {"warning", v.warning}};
  Json levels = Json::array();
  if (v.service_diff) {
    levels.push_back("service");
    Json d = Json::array();
    for (const auto& s : *v.service_diff)
      d.push_back({{"service", s.service}, {"forward_only", s.forward_only}, {"reverse_only", s.reverse_only}});
    j["service_diff"] = d;
  }
  if (v.response_diff) {
    levels.push_back("response");
    Json d = Json::array();
    for (const auto& r : *v.response_diff)
      d.push_back({{"role", r.role == 0 ? "a" : "b"},
                   {"endpoint", r.endpoint},
                   {"forward_status", r.forward_status},
                   {"reverse_status", r.reverse_status},
                   {"forward_body", r.forward_body},
                   {"reverse_body", r.reverse_body},
                   {"paths", r.paths},
                   {"byte_compared", r.byte_compared}});
    j["response_diff"] = d;
  }
  auto states = [](const std::vector<StateDelta>& ds) {
    Json d = Json::array();
    for (const auto& s : ds) {
      Json e = {{"path", s.path}, {"forward", s.forward}, {"reverse", s.reverse}};
      if (!s.rule.empty()) e["rule"] = s.rule;
      d.push_back(e);
    }
    return d;
  };
  if (v.state_diff) {
    levels.push_back("state");
    j["state_diff"] = states(*v.state_diff);
  }
  if (!v.tolerated.empty()) j["tolerated"] = states(v.tolerated);
  j["levels"] = levels;
  return j;
}

Json to_json(const FlowGraph& fg) {
  Json j;
  j["flows"] = Json::array();
  for (const auto& f : fg.flows) {
    Json spans = Json::array();
    for (std::size_t i = 0; i < f.ordered_spans.size(); ++i) {
      const auto& id = f.ordered_spans[i];
      const auto* r = fg.trace.find_request(id);
      Json s = {{"span", id}, {"owned", static_cast<bool>(f.owned[i])}};
      if (r) s["endpoint"] = r->service + " " + r->endpoint();
      if (auto it = f.data_attachments.find(id); it != f.data_attachments.end()) s["data"] = it->second;
      spans.push_back(s);
    }
    j["flows"].push_back({{"flow", f.flow_id.str()}, {"spans", spans}});
  }
  j["sync_edges"] = Json::array();
  for (const auto& e : fg.sync_edges)
    j["sync_edges"].push_back({{"kind", to_string(e.kind)},
                               {"from_flow", e.from_flow.str()},
                               {"to_flow", e.to_flow.str()},
                               {"via", e.via},
                               {"from_span", e.from_span},
                               {"to_span", e.to_span}});
  j["lock_sections"] = Json::array();
  for (const auto& l : fg.lock_sections) {
    Json s = {{"lock", l.lock_id}, {"flow", l.flow.str()}, {"acquire", l.acquire_span}, {"data_spans", l.data_spans}};
    if (l.release_span) s["release"] = *l.release_span;
    j["lock_sections"].push_back(s);
  }
  j["diagnostics"] = fg.diagnostics;
  return j;
}

Json analysis_json(const Analysis& a) {
  const auto& ts = a.flows.trace;
  Json j;
  j["trace_hash"] = a.trace_hash;
  j["counts"] = {{"request_spans", ts.request_spans.size()},
                 {"data_spans", ts.data_spans.size()},
                 {"flows", a.flows.flows.size()},
                 {"random_pairs", a.report.random_pairs},
                 {"pruned_instance", a.report.pruned_instance},
                 {"pruned_flow", a.report.pruned_flow},
                 {"early_confirmed", a.report.early_confirmed},
                 {"needs_test", a.report.needs_test}};
  auto list = [&](const std::vector<CandidatePair>& ps) {
    Json out = Json::array();
    for (const auto& p : ps) out.push_back(to_json(p, ts));
    return out;
  };
  j["pruned_instance"] = list(a.stages.pruned_instance);
  j["pruned_flow"] = list(a.stages.pruned_flow);
  j["early_confirmed"] = list(a.stages.early_confirmed);
  j["needs_test"] = Json::array();
  for (const auto& job : a.jobs) {
    auto p = to_json(job.pair, ts);
    p["scope"] = to_json(job.scope);
    if (job.unreplayable.empty()) {
      p["request_a"] = to_json(job.a);
      p["request_b"] = to_json(job.b);
    } else {
      p["unreplayable"] = job.unreplayable;
    }
    j["needs_test"].push_back(p);
  }
  return j;
}

std::vector<PairJob> jobs_from_json(const Json& analysis) {
  std::vector<PairJob> out;
  for (const auto& p : analysis.at("needs_test")) {
    PairJob job;
    job.pair.a = p.at("a").get<std::string>();
    job.pair.b = p.at("b").get<std::string>();
    job.pair.status = PairStatus::needs_test;
    job.scope = scope_from_json(p.value("scope", Json::array()));
    if (p.contains("unreplayable")) {
      job.unreplayable = p["unreplayable"].get<std::string>();
    } else {
      job.a = request_spec_from_json(p.at("request_a"));
      job.b = request_spec_from_json(p.at("request_b"));
    }
    out.push_back(std::move(job));
  }
  return out;
}

TestRun run_tests(std::vector<PairJob> jobs, TargetAdapter& adapter, const Config& cfg) {
  TestRun run;
  run.campaign = run_campaign(std::move(jobs), adapter, cfg.budgets);
  for (const auto& r : run.campaign.results) run.verdicts.push_back(judge(r, cfg.oracle));
  return run;
}

Json results_json(const std::string& hash, const TestRun& run) {
  Json j;
  j["trace_hash"] = hash;
  j["aborted"] = run.campaign.aborted;
  if (run.campaign.aborted) j["abort_reason"] = run.campaign.abort_reason;
  j["verdicts"] = Json::array();
  for (const auto& v : run.verdicts) j["verdicts"].push_back(to_json(v));
  j["skipped"] = Json::array();
  for (const auto& s : run.campaign.skipped)
    j["skipped"].push_back({{"a", s.pair.a}, {"b", s.pair.b}, {"reason", s.reason}});
  return j;
}

namespace {

using PairKey = std::pair<std::string, std::string>;

PairKey key_of(const Json& p) {
  auto a = p.at("a").get<std::string>(), b = p.at("b").get<std::string>();
  return std::minmax(a, b);
}

void check_hash(const Json& x, const Json& y, const char* what) {
  const auto hx = x.value("trace_hash", ""), hy = y.value("trace_hash", "");
  if (hx != hy) throw InputMismatch(std::string(what) + " was produced for a different trace (" + hy.substr(0, 12) +
                                    " vs " + hx.substr(0, 12) + ")");
}

}  // namespace

Json summarize(const Json& analysis, const Json& results, const Json* ground_truth) {
  check_hash(analysis, results, "test results");
  if (ground_truth) check_hash(analysis, *ground_truth, "ground truth");

  Json s;
  s["trace_hash"] = analysis.at("trace_hash");
  s["counts"] = analysis.at("counts");
  std::map<PairKey, std::string> endpoints;
  for (const char* stage : {"early_confirmed", "needs_test"})
    for (const auto& p : analysis.at(stage))
      endpoints[key_of(p)] = p.value("a_endpoint", "") + " | " + p.value("b_endpoint", "");

  std::set<PairKey> early, tested;
  for (const auto& p : analysis.at("early_confirmed")) early.insert(key_of(p));
  for (const auto& v : results.at("verdicts"))
    if (v.at("is_bug").get<bool>()) tested.insert(key_of(v));
  s["bugs"] = {{"early", early.size()}, {"tested", tested.size()}};
  s["tested"] = results.at("verdicts").size();
  s["skipped"] = results.at("skipped").size();
  s["aborted"] = results.value("aborted", false);

  if (!ground_truth) return s;
  std::set<PairKey> racing;
  for (const auto& r : ground_truth->at("racing")) racing.insert(key_of(r));
  std::size_t tp_e = 0, tp_t = 0;
  Json fp = Json::array(), fn = Json::array();
  for (const auto& k : early) {
    if (racing.count(k)) ++tp_e;
    else fp.push_back({{"a", k.first}, {"b", k.second}, {"stage", "early"}, {"endpoints", endpoints[k]}});
  }
  for (const auto& k : tested) {
    if (racing.count(k)) ++tp_t;
    else fp.push_back({{"a", k.first}, {"b", k.second}, {"stage", "test"}, {"endpoints", endpoints[k]}});
  }
  for (const auto& k : racing)
    if (!early.count(k) && !tested.count(k)) fn.push_back({{"a", k.first}, {"b", k.second}});
  s["tp"] = {{"early", tp_e}, {"tested", tp_t}, {"total", tp_e + tp_t},
             {"text", std::to_string(tp_e + tp_t) + " (" + std::to_string(tp_e) + "+" + std::to_string(tp_t) + ")"}};
  s["fp"] = fp;
  s["fn"] = fn;
  return s;
}

std::string summary_table(const Json& s) {
  const auto& c = s.at("counts");
  std::vector<std::pair<std::string, std::string>> cols = {
      {"Req spans", std::to_string(c.at("request_spans").get<std::size_t>())},
      {"Data spans", std::to_string(c.at("data_spans").get<std::size_t>())},
      {"Flows", std::to_string(c.at("flows").get<std::size_t>())},
      {"Random", std::to_string(c.at("random_pairs").get<std::size_t>())},
      {"Instance", "-" + std::to_string(c.at("pruned_instance").get<std::size_t>())},
      {"Flow", "-" + std::to_string(c.at("pruned_flow").get<std::size_t>())},
      {"Early", std::to_string(c.at("early_confirmed").get<std::size_t>())},
      {"Auto test", std::to_string(c.at("needs_test").get<std::size_t>())},
  };
  if (s.contains("tp")) {
    cols.emplace_back("FP", std::to_string(s.at("fp").size()));
    cols.emplace_back("TP", s.at("tp").at("text").get<std::string>());
    cols.emplace_back("FN", std::to_string(s.at("fn").size()));
  } else {
    const auto e = s.at("bugs").at("early").get<std::size_t>(), t = s.at("bugs").at("tested").get<std::size_t>();
    cols.emplace_back("Bugs", std::to_string(e + t) + " (" + std::to_string(e) + "+" + std::to_string(t) + ")");
  }
  std::ostringstream head, row;
  for (const auto& [h, v] : cols) {
    const auto w = static_cast<int>(std::max(h.size(), v.size())) + 2;
    head << std::setw(w) << h;
    row << std::setw(w) << v;
  }
  std::ostringstream out;
  out << head.str() << "\n" << row.str() << "\n";
  if (s.contains("fp"))
    for (const auto& f : s.at("fp"))
      out << "FP " << f.at("a").get<std::string>() << " " << f.at("b").get<std::string>() << " ["
          << f.at("stage").get<std::string>() << "] " << f.at("endpoints").get<std::string>() << "\n";
  if (s.contains("fn"))
    for (const auto& f : s.at("fn"))
      out << "FN " << f.at("a").get<std::string>() << " " << f.at("b").get<std::string>() << "\n";
  if (s.value("skipped", 0) > 0) out << s.at("skipped").get<std::size_t>() << " pair(s) skipped\n";
  if (s.value("aborted", false)) out << "campaign aborted\n";
  return out.str();
}

}  // namespace flowrace
