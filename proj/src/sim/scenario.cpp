#include "flowrace/sim/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "flowrace/codec.hpp"

namespace flowrace::sim {

namespace {

const std::set<std::string> kStoreOps = {"select", "update", "insert", "delete", "kv", "object", "produce"};
const std::set<std::string> kOtherOps = {"call", "lock", "unlock", "log", "fork", "join", "if", "set", "respond"};

std::string need_string(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_string()) throw ScenarioError(where + ": '" + key + "' must be a string");
  return j[key].get<std::string>();
}

std::vector<std::string> split_path(const std::string& p) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= p.size()) {
    auto j = p.find('/', i);
    if (j == std::string::npos) j = p.size();
    if (j > i) out.push_back(p.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

class StepChecker {
 public:
  explicit StepChecker(const Scenario& s) : s_(s) {}

  void check(const Json& steps, const std::string& where, bool in_fork) const {
    if (!steps.is_array()) throw ScenarioError(where + ": steps must be a list");
    for (const auto& st : steps) {
      if (!st.is_object() || !st.contains("op") || !st["op"].is_string())
        throw ScenarioError(where + ": every step needs an 'op'");
      const auto op = st["op"].get<std::string>();
      const auto here = where + " [" + op + "]";
      if (kStoreOps.count(op)) {
        const auto store = need_string(st, "store", here);
        const auto& def = s_.store(store);
        const auto want = op == "kv" ? StoreKind::kv
                          : op == "object" ? StoreKind::object
                          : op == "produce" ? StoreKind::mq
                                            : StoreKind::sql;
        if (def.kind != want) throw ScenarioError(here + ": store '" + store + "' has the wrong kind");
        if (!st.contains("entity")) throw ScenarioError(here + ": store operations must declare an entity");
        if (op == "select" || op == "update" || op == "insert" || op == "delete") need_string(st, "table", here);
        if (op == "kv") need_string(st, "cmd", here);
        if (op == "object") need_string(st, "cmd", here);
        if (op == "produce") need_string(st, "topic", here);
      } else if (op == "call") {
        need_string(st, "service", here);
        need_string(st, "method", here);
        need_string(st, "path", here);
      } else if (op == "lock" || op == "unlock") {
        if (s_.store(need_string(st, "store", here)).kind != StoreKind::kv)
          throw ScenarioError(here + ": locks live in a kv store");
      } else if (op == "fork") {
        if (in_fork) throw ScenarioError(here + ": nested forks are not supported");
        need_string(st, "name", here);
        check(st.value("steps", Json::array()), here, true);
      } else if (op == "if") {
        if (!st.contains("cond")) throw ScenarioError(here + ": missing cond");
        check(st.value("then", Json::array()), here, in_fork);
        check(st.value("else", Json::array()), here, in_fork);
      } else if (op == "set") {
        need_string(st, "var", here);
      } else if (op == "respond") {
        if (in_fork) throw ScenarioError(here + ": a forked task cannot respond");
      } else if (!kOtherOps.count(op)) {
        throw ScenarioError(here + ": unknown op");
      }
    }
  }

 private:
  const Scenario& s_;
};

}  // namespace

const StoreDef& Scenario::store(const std::string& name) const {
  for (const auto& s : stores)
    if (s.name == name) return s;
  throw ScenarioError("scenario '" + id + "': unknown store '" + name + "'");
}

std::string Scenario::data_store(const std::string& name) const {
  const auto& s = store(name);
  return s.alias_of ? *s.alias_of : s.name;
}

const Handler* Scenario::route(const std::string& service, const std::string& method, const std::string& target,
                               std::map<std::string, std::string>* params) const {
  const auto path = target.substr(0, target.find('?'));
  const auto segs = split_path(path);
  for (const auto& h : handlers) {
    if (h.service != service || h.method != method) continue;
    const auto pat = split_path(h.path);
    if (pat.size() != segs.size()) continue;
    std::map<std::string, std::string> bound;
    bool ok = true;
    for (std::size_t i = 0; i < pat.size() && ok; ++i) {
      if (pat[i].size() > 2 && pat[i].front() == '{' && pat[i].back() == '}')
        bound[pat[i].substr(1, pat[i].size() - 2)] = segs[i];
      else
        ok = pat[i] == segs[i];
    }
    if (!ok) continue;
    if (params) *params = std::move(bound);
    return &h;
  }
  return nullptr;
}

const Subscription* Scenario::subscription(const std::string& topic) const {
  for (const auto& s : subscriptions)
    if (s.topic == topic) return &s;
  return nullptr;
}

const DelaySchedule& Scenario::delays(const std::string& name) const {
  const auto it = delay_schedules.find(name.empty() ? default_delays : name);
  if (it == delay_schedules.end()) throw ScenarioError("scenario '" + id + "' has no delay schedule '" + name + "'");
  return it->second;
}

Scenario parse_scenario(const Json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const std::set<std::string> known = {"id", "description", "stores", "handlers", "subscriptions",
                                                "workload", "delay_schedules", "default_delays",
                                                "ground_truth", "pure_query_endpoints", "config"};
    if (!known.count(it.key())) throw ScenarioError("scenario: unknown key '" + it.key() + "'");
  }
  Scenario s;
  s.id = need_string(doc, "id", "scenario");
  s.description = doc.value("description", "");
  const auto where = "scenario '" + s.id + "'";

  for (const auto& j : doc.value("stores", Json::array())) {
    StoreDef d;
    d.name = need_string(j, "name", where + " store");
    d.kind = store_kind_from_string(need_string(j, "kind", where + " store"));
    d.instance = {need_string(j, "endpoint", where + " store"), need_string(j, "store_name", where + " store")};
    if (j.contains("alias_of")) d.alias_of = need_string(j, "alias_of", where + " store");
    d.initial = j.value("initial", Json::object());
    s.stores.push_back(std::move(d));
  }
  std::set<std::string> names;
  std::set<StoreInstance> instances;
  for (const auto& d : s.stores) {
    if (!names.insert(d.name).second) throw ScenarioError(where + ": duplicate store '" + d.name + "'");
    if (!instances.insert(d.instance).second)
      throw ScenarioError(where + ": two stores share instance " + d.instance.str());
  }
  for (const auto& d : s.stores) {
    if (!d.alias_of) continue;
    const auto& base = s.store(*d.alias_of);
    if (base.alias_of || base.kind != d.kind) throw ScenarioError(where + ": bad alias '" + d.name + "'");
  }
  for (const auto& d : s.stores) {
    if (d.kind != StoreKind::sql || d.alias_of) continue;
    for (auto it = d.initial.begin(); it != d.initial.end(); ++it)
      if (!it.value().contains("pk")) throw ScenarioError(where + ": table '" + it.key() + "' has no pk");
  }

  for (const auto& j : doc.value("handlers", Json::array())) {
    Handler h;
    h.service = need_string(j, "service", where + " handler");
    const auto ep = need_string(j, "endpoint", where + " handler");
    const auto sp = ep.find(' ');
    if (sp == std::string::npos) throw ScenarioError(where + ": handler endpoint must be 'METHOD /path'");
    h.method = ep.substr(0, sp);
    h.path = ep.substr(sp + 1);
    h.steps = j.value("steps", Json::array());
    s.handlers.push_back(std::move(h));
  }
  for (const auto& j : doc.value("subscriptions", Json::array())) {
    Subscription sub;
    sub.topic = need_string(j, "topic", where + " subscription");
    sub.service = need_string(j, "service", where + " subscription");
    sub.store = need_string(j, "store", where + " subscription");
    sub.steps = j.value("steps", Json::array());
    s.subscriptions.push_back(std::move(sub));
  }
  for (const auto& j : doc.value("workload", Json::array())) {
    WorkloadItem w;
    w.id = need_string(j, "id", where + " workload");
    w.service = need_string(j, "service", where + " workload");
    w.method = need_string(j, "method", where + " workload");
    w.target = need_string(j, "target", where + " workload");
    if (j.contains("headers")) w.headers = j["headers"].get<std::map<std::string, std::string>>();
    w.body = j.value("body", Json());
    if (!s.route(w.service, w.method, w.target))
      throw ScenarioError(where + ": workload item '" + w.id + "' has no handler");
    s.workload.push_back(std::move(w));
  }
  if (doc.contains("delay_schedules")) {
    for (const auto& [name, sched] : doc["delay_schedules"].items()) {
      DelaySchedule d;
      for (const auto& [wid, t] : sched.items()) {
        Timing tm;
        tm.start_at = t.value("start_at", std::int64_t{0});
        tm.step_delay = t.value("step_delay", std::int64_t{1});
        tm.jitter = t.value("jitter", std::int64_t{0});
        if (tm.step_delay < 1 || tm.jitter < 0 || tm.start_at < 0)
          throw ScenarioError(where + ": bad timing for '" + wid + "' in schedule '" + name + "'");
        d[wid] = tm;
      }
      s.delay_schedules[name] = std::move(d);
    }
  }
  if (s.delay_schedules.empty()) s.delay_schedules["default"] = {};
  s.default_delays = doc.value("default_delays", s.delay_schedules.begin()->first);
  if (!s.delay_schedules.count(s.default_delays)) throw ScenarioError(where + ": unknown default_delays");

  for (const auto& j : doc.value("ground_truth", Json::array())) {
    if (!j.is_array() || j.size() != 2) throw ScenarioError(where + ": ground_truth entries are [a, b] pairs");
    s.ground_truth.push_back({j[0].get<std::string>(), j[1].get<std::string>()});
  }
  s.pure_query_endpoints = doc.value("pure_query_endpoints", std::vector<std::string>{});
  s.config = doc.value("config", Json::object());

  const StepChecker checker(s);
  for (const auto& h : s.handlers) checker.check(h.steps, where + " " + h.service + " " + h.method + " " + h.path, false);
  for (const auto& sub : s.subscriptions) {
    if (s.store(sub.store).kind != StoreKind::mq) throw ScenarioError(where + ": subscription store must be mq");
    checker.check(sub.steps, where + " subscription " + sub.topic, false);
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  const auto doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ScenarioError("scenario file " + path.string() + " is not valid JSON");
  return parse_scenario(doc);
}

std::filesystem::path scenario_dir() {
  if (const char* env = std::getenv("FLOWRACE_SCENARIOS")) return env;
  return FLOWRACE_SCENARIO_DIR;
}

std::vector<std::string> catalog() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(scenario_dir()))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

Scenario load_catalog(const std::string& id_or_path) {
  const std::filesystem::path p(id_or_path);
  if (p.has_extension() && std::filesystem::exists(p)) return load_scenario(p);
  const auto file = scenario_dir() / (id_or_path + ".json");
  if (!std::filesystem::exists(file)) throw ScenarioError("unknown scenario '" + id_or_path + "'");
  return load_scenario(file);
}

std::string span_label(const RequestSpan& r) { return r.service + " " + r.method + " " + r.target; }

}  // namespace flowrace::sim
