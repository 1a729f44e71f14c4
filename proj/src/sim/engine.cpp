#include "flowrace/sim/engine.hpp"

#include <algorithm>
#include <ctime>
#include <random>
#include <sstream>

#include "flowrace/codec.hpp"

namespace flowrace::sim {

bool vc_leq(const VectorClock& x, const VectorClock& y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > (i < y.size() ? y[i] : 0)) return false;
  return true;
}

bool vc_concurrent(const VectorClock& x, const VectorClock& y) { return !vc_leq(x, y) && !vc_leq(y, x); }

bool effects_conflict(const Effect& x, const Effect& y) {
  if (x.store != y.store || (!x.write && !y.write)) return false;
  const bool shared = std::any_of(x.entities.begin(), x.entities.end(), [&](const std::string& e) {
    return std::find(y.entities.begin(), y.entities.end(), e) != y.entities.end();
  });
  if (!shared) return false;
  if (x.all_columns || y.all_columns) return true;
  return std::any_of(x.columns.begin(), x.columns.end(), [&](const std::string& c) { return y.columns.count(c) > 0; });
}

std::string LogRecord::line() const {
  const std::time_t secs = ts / 1'000'000'000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char frac[16];
  std::snprintf(frac, sizeof frac, ".%06lldZ", static_cast<long long>((ts / 1000) % 1'000'000));
  return std::string(buf) + frac + " " + level + " " + service + ": " + message;
}

RequestInput input_of(const RequestSpan& r) {
  return {r.service, r.protocol, r.method, r.target, r.request_headers, r.request_body.value_or("")};
}

RequestInput input_of(const RequestSpec& r) {
  return {r.service, r.protocol, r.method, r.target, r.headers, r.body};
}

RequestInput input_of(const WorkloadItem& w) {
  return {w.service, Protocol::http, w.method, w.target, w.headers, w.body.is_null() ? std::string{} : w.body.dump()};
}

namespace {

const std::set<std::string> kYield = {"select", "update", "insert", "delete", "kv",   "object",
                                      "produce", "call",  "lock",   "unlock", "join"};
const std::set<std::string> kOperators = {"var", "col", "lit", "add", "sub", "mul", "eq", "ne",
                                          "lt",  "le",  "gt",  "ge",  "not", "and", "or"};

const Json* lookup(const Json& vars, const std::string& path) {
  const Json* cur = &vars;
  std::size_t i = 0;
  while (i <= path.size()) {
    auto j = path.find('.', i);
    if (j == std::string::npos) j = path.size();
    const auto seg = path.substr(i, j - i);
    if (cur->is_object() && cur->contains(seg)) {
      cur = &(*cur)[seg];
    } else if (cur->is_array() && !seg.empty() && std::all_of(seg.begin(), seg.end(), ::isdigit) &&
               std::stoul(seg) < cur->size()) {
      cur = &(*cur)[std::stoul(seg)];
    } else {
      return nullptr;
    }
    i = j + 1;
  }
  return cur;
}

std::string stringify(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

std::string interpolate(const std::string& s, const Json& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto open = s.find("${", i);
    if (open == std::string::npos) break;
    const auto close = s.find('}', open);
    if (close == std::string::npos) break;
    out += s.substr(i, open - i);
    const auto* v = lookup(vars, s.substr(open + 2, close - open - 2));
    if (v) out += stringify(*v);
    i = close + 1;
  }
  out += s.substr(i);
  return out;
}

bool truthy(const Json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_null()) return false;
  if (v.is_number()) return v.get<double>() != 0;
  if (v.is_string()) return !v.get<std::string>().empty();
  return !v.empty();
}

bool is_operator(const Json& e) { return e.is_object() && e.size() == 1 && kOperators.count(e.begin().key()); }

Json eval(const Json& e, const Json& vars, const Json* row = nullptr);

Json arith(const std::string& op, const Json& x, const Json& y) {
  if (!x.is_number() || !y.is_number()) throw ScenarioError("arithmetic on non-numbers: " + x.dump() + " " + op + " " + y.dump());
  if (x.is_number_integer() && y.is_number_integer()) {
    const auto a = x.get<std::int64_t>(), b = y.get<std::int64_t>();
    return op == "add" ? a + b : op == "sub" ? a - b : a * b;
  }
  const auto a = x.get<double>(), b = y.get<double>();
  return op == "add" ? a + b : op == "sub" ? a - b : a * b;
}

bool compare(const std::string& op, const Json& x, const Json& y) {
  if (op == "eq") return x == y;
  if (op == "ne") return x != y;
  if (x.is_number() && y.is_number()) {
    const auto a = x.get<double>(), b = y.get<double>();
    return op == "lt" ? a < b : op == "le" ? a <= b : op == "gt" ? a > b : a >= b;
  }
  if (x.is_string() && y.is_string()) {
    const auto a = x.get<std::string>(), b = y.get<std::string>();
    return op == "lt" ? a < b : op == "le" ? a <= b : op == "gt" ? a > b : a >= b;
  }
  return false;
}

Json eval(const Json& e, const Json& vars, const Json* row) {
  if (e.is_string()) return interpolate(e.get<std::string>(), vars);
  if (is_operator(e)) {
    const auto& op = e.begin().key();
    const auto& arg = e.begin().value();
    if (op == "lit") return arg;
    if (op == "var") {
      const auto* v = lookup(vars, arg.get<std::string>());
      return v ? *v : Json();
    }
    if (op == "col") {
      if (!row) throw ScenarioError("'col' used outside an update");
      return row->value(arg.get<std::string>(), Json());
    }
    if (op == "not") return !truthy(eval(arg, vars, row));
    if (op == "and" || op == "or") {
      for (const auto& x : arg) {
        const bool t = truthy(eval(x, vars, row));
        if (op == "and" && !t) return false;
        if (op == "or" && t) return true;
      }
      return op == "and";
    }
    if (!arg.is_array() || arg.size() != 2) throw ScenarioError("'" + op + "' takes two operands");
    const auto x = eval(arg[0], vars, row);
    const auto y = eval(arg[1], vars, row);
    if (op == "add" || op == "sub" || op == "mul") return arith(op, x, y);
    return compare(op, x, y);
  }
  if (e.is_object()) {
    Json out = Json::object();
    for (auto it = e.begin(); it != e.end(); ++it) out[it.key()] = eval(it.value(), vars, row);
    return out;
  }
  if (e.is_array()) {
    Json out = Json::array();
    for (const auto& x : e) out.push_back(eval(x, vars, row));
    return out;
  }
  return e;
}

std::string sql_literal(const Json& v) {
  if (v.is_string()) {
    std::string out = "'";
    for (char c : v.get<std::string>()) {
      if (c == '\'') out += "''";
      else out.push_back(c);
    }
    return out + "'";
  }
  if (v.is_boolean()) return v.get<bool>() ? "TRUE" : "FALSE";
  if (v.is_null()) return "NULL";
  return v.dump();
}

std::string render_expr(const Json& e, const Json& vars) {
  if (is_operator(e)) {
    const auto& op = e.begin().key();
    if (op == "col") return e.begin().value().get<std::string>();
    static const std::map<std::string, const char*> sym = {{"add", " + "}, {"sub", " - "}, {"mul", " * "}};
    if (sym.count(op)) {
      const auto& a = e.begin().value();
      return render_expr(a[0], vars) + sym.at(op) + render_expr(a[1], vars);
    }
  }
  return sql_literal(eval(e, vars));
}

std::string where_sql(const Json& where) {
  if (where.empty()) return "";
  std::string out = " WHERE ";
  bool first = true;
  for (auto it = where.begin(); it != where.end(); ++it) {
    if (!first) out += " AND ";
    first = false;
    out += it.key() + "=" + sql_literal(it.value());
  }
  return out;
}

bool row_matches(const Json& row, const Json& where) {
  for (auto it = where.begin(); it != where.end(); ++it)
    if (!row.contains(it.key()) || row[it.key()] != it.value()) return false;
  return true;
}

std::vector<std::string> entity_list(const Json& st, const Json& vars) {
  const auto v = eval(st.at("entity"), vars);
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& x : v) out.push_back(stringify(x));
  } else {
    out.push_back(stringify(v));
  }
  return out;
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json();
  auto j = Json::parse(body, nullptr, false);
  return j.is_discarded() ? Json(body) : j;
}

Json status_json(const ResponseStatus& s) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return *i;
  return std::get<std::string>(s);
}

}  // namespace

StoreMap initial_stores(const Scenario& s) {
  StoreMap out;
  for (const auto& d : s.stores) {
    if (d.alias_of) continue;
    StoreState st;
    st.kind = d.kind;
    switch (d.kind) {
      case StoreKind::sql:
        for (const auto& [name, t] : d.initial.items()) {
          SqlTable table;
          table.pk = t.at("pk").get<std::string>();
          for (const auto& row : t.value("rows", Json::array())) {
            if (!row.contains(table.pk)) throw ScenarioError("row of '" + name + "' without its pk");
            table.rows[stringify(row[table.pk])] = row;
          }
          st.tables[name] = std::move(table);
        }
        break;
      case StoreKind::kv:
        for (const auto& [k, v] : d.initial.items()) st.entries[k] = v;
        break;
      case StoreKind::object:
        for (const auto& [k, v] : d.initial.items()) st.objects[k] = stringify(v);
        break;
      case StoreKind::mq:
        for (const auto& [k, v] : d.initial.items()) st.topics[k] = v.get<std::vector<Json>>();
        break;
    }
    out[d.name] = std::move(st);
  }
  return out;
}

Json dump_stores(const Scenario& s, const StoreMap& stores, const StoreScope& scope) {
  Json doc = Json::object();
  for (const auto& d : s.stores) {
    if (!scope.empty() && !scope.count(d.instance)) continue;
    const auto& st = stores.at(s.data_store(d.name));
    Json j;
    j["kind"] = to_string(st.kind);
    switch (st.kind) {
      case StoreKind::sql:
        j["tables"] = Json::object();
        for (const auto& [name, t] : st.tables) {
          j["tables"][name] = Json::object();
          for (const auto& [pk, row] : t.rows) j["tables"][name][pk] = row;
        }
        break;
      case StoreKind::kv:
        j["entries"] = Json::object();
        for (const auto& [k, v] : st.entries) j["entries"][k] = v;
        break;
      case StoreKind::object:
        j["objects"] = st.objects;
        break;
      case StoreKind::mq: {
        j["topics"] = Json::object();
        for (const auto& [topic, msgs] : st.topics) {
          std::vector<std::string> dumps;
          for (const auto& m : msgs) dumps.push_back(m.dump());
          std::sort(dumps.begin(), dumps.end());
          j["topics"][topic] = dumps;
        }
        break;
      }
    }
    doc[d.instance.endpoint][d.instance.store_name] = std::move(j);
  }
  return doc;
}

Engine::Engine(const Scenario& s, StoreMap stores, std::int64_t clock)
    : scenario_(&s), stores_(std::move(stores)), now_(clock) {}

int Engine::new_task() {
  Task t;
  t.id = static_cast<int>(tasks_.size());
  t.vc.assign(tasks_.size() + 1, 0);
  tasks_.push_back(std::move(t));
  return tasks_.back().id;
}

int Engine::submit(const RequestInput& req, const Timing& timing) {
  if (req.protocol == Protocol::mq_consume) {
    if (!scenario_->subscription(req.target)) throw UnknownEndpoint("topic " + req.target);
  } else if (!scenario_->route(req.service, req.method, req.target)) {
    throw UnknownEndpoint(req.service + " " + req.method + " " + req.target);
  }
  const int id = new_task();
  auto& t = tasks_[static_cast<std::size_t>(id)];
  t.input = req;
  t.timing = timing;
  t.ready_at = timing.start_at;
  char buf[16];
  std::snprintf(buf, sizeof buf, "f%02d", ++flows_);
  t.flow_root = buf;
  if (req.protocol == Protocol::mq_consume) {
    Message m;
    m.topic = req.target;
    if (auto it = req.headers.find("message-id"); it != req.headers.end()) m.id = it->second;
    if (auto it = req.headers.find("partition-key"); it != req.headers.end()) m.key = it->second;
    m.payload = parse_body(req.body);
    t.message = std::move(m);
  }
  return id;
}

const std::optional<Response>& Engine::response(int task) const {
  return tasks_.at(static_cast<std::size_t>(task)).response;
}

bool Engine::finished() const {
  return std::all_of(tasks_.begin(), tasks_.end(), [](const Task& t) { return t.done; });
}

const Json* Engine::position(const Task& t) const {
  if (t.done || t.stack.empty()) return nullptr;
  const auto& act = t.stack.back();
  if (act.blocks.empty()) return nullptr;
  const auto& b = act.blocks.back();
  return b.pc < b.steps->size() ? &(*b.steps)[b.pc] : nullptr;
}

bool Engine::can_run(const Task& t) const {
  if (t.done) return false;
  if (!t.started) return true;
  const auto* st = position(t);
  if (!st) return true;
  const auto op = (*st)["op"].get<std::string>();
  if (op == "lock") {
    const auto key = stringify(eval(st->at("key"), t.stack.back().vars));
    return !lock_owner_.count(key);
  }
  if (op == "join") {
    for (int f : t.stack.back().forks)
      if (!tasks_[static_cast<std::size_t>(f)].done) return false;
  }
  return true;
}

std::vector<int> Engine::runnable() const {
  std::vector<int> out;
  for (const auto& t : tasks_)
    if (can_run(t)) out.push_back(t.id);
  return out;
}

std::string Engine::wait_graph() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& t : tasks_) {
    if (t.done) continue;
    const auto* st = position(t);
    if (!first) out << "; ";
    first = false;
    out << "task " << t.id << " (" << t.flow_root << (t.thread.empty() ? "" : "/" + t.thread) << ")";
    if (!st) continue;
    const auto op = (*st)["op"].get<std::string>();
    if (op == "lock") {
      const auto key = stringify(eval(st->at("key"), t.stack.back().vars));
      auto it = lock_owner_.find(key);
      out << " waits for lock " << key;
      if (it != lock_owner_.end()) out << " held by task " << it->second;
    } else if (op == "join") {
      out << " waits to join its forks";
    }
  }
  return out.str();
}

void Engine::tick(Task& t) {
  if (t.vc.size() <= static_cast<std::size_t>(t.id)) t.vc.resize(static_cast<std::size_t>(t.id) + 1, 0);
  ++t.vc[static_cast<std::size_t>(t.id)];
}

std::size_t Engine::open_span(const Activation* parent, const std::string& thread, const std::string& flow_root,
                              const RequestInput& req) {
  RequestSpan r;
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%04zu", trace_.request_spans.size() + trace_.data_spans.size() + 1);
  r.span_id = buf;
  r.flow_id = FlowId{flow_root, {}};
  if (parent) {
    r.parent_span_id = trace_.request_spans[parent->span].span_id;
    r.thread_tag = thread.empty() ? "main" : thread;
  }
  r.service = req.service;
  r.protocol = req.protocol;
  r.method = req.method;
  r.target = req.target;
  r.request_headers = req.headers;
  r.request_body = req.body;
  r.start_ts = ts();
  r.end_ts = r.start_ts;
  trace_.request_spans.push_back(std::move(r));
  return trace_.request_spans.size() - 1;
}

void Engine::push_handler(Task& t, const RequestInput& req, std::size_t span, const std::string& into) {
  Activation act;
  act.span = span;
  act.service = req.service;
  act.into = into;
  const Json* steps = nullptr;
  const auto body = parse_body(req.body);
  if (req.protocol == Protocol::mq_consume) {
    const auto* sub = scenario_->subscription(req.target);
    if (!sub) throw UnknownEndpoint("topic " + req.target);
    steps = &sub->steps;
  } else {
    std::map<std::string, std::string> params;
    const auto* h = scenario_->route(req.service, req.method, req.target, &params);
    if (!h) throw UnknownEndpoint(req.service + " " + req.method + " " + req.target);
    steps = &h->steps;
    for (const auto& [k, v] : params) act.vars[k] = v;
  }
  if (body.is_object())
    for (auto it = body.begin(); it != body.end(); ++it) act.vars[it.key()] = it.value();
  act.vars["body"] = body;
  act.vars["headers"] = req.headers;
  act.blocks.push_back({steps, 0});
  t.stack.push_back(std::move(act));
}

void Engine::start(Task& t) {
  t.started = true;
  tick(t);
  if (!t.thread.empty()) return;  // forked tasks are set up by their parent
  const auto span = open_span(nullptr, "", t.flow_root, t.input);
  push_handler(t, t.input, span, "");
  if (t.message) {
    auto& m = *t.message;
    const auto* sub = scenario_->subscription(m.topic);
    std::string text = "consume topic=" + m.topic;
    if (!m.key.empty()) text += " key=" + m.key;
    if (!m.id.empty()) text += " msg_id=" + m.id;
    const auto ds = data_span(t, StoreKind::mq, sub->store, text);
    Effect e;
    e.request = trace_.request_spans[span].span_id;
    e.data_span = ds;
    e.store = scenario_->data_store(sub->store);
    e.entities = {"topic:" + m.topic};
    e.write = false;
    e.task = t.id;
    e.vc = t.vc;
    effects_.push_back(std::move(e));
    if (!m.produce_span.empty()) deliveries_.push_back({m.produce_span, trace_.request_spans[span].span_id, m.topic, m.id});
    t.stack.back().vars["message"] = {{"id", m.id}, {"topic", m.topic}, {"key", m.key}};
  }
}

void Engine::step(int id) {
  if (!can_run(tasks_.at(static_cast<std::size_t>(id))))
    throw ScenarioError("task " + std::to_string(id) + " is not runnable");
  if (!tasks_[static_cast<std::size_t>(id)].started) {
    start(tasks_[static_cast<std::size_t>(id)]);
    run_local(tasks_[static_cast<std::size_t>(id)]);
    // forks may have grown tasks_
    const auto& t = tasks_[static_cast<std::size_t>(id)];
    if (t.done || !can_run(t)) return;
  }
  auto& task = tasks_.at(static_cast<std::size_t>(id));
  const auto* st = position(task);
  if (!st) {
    run_local(task);
    return;
  }
  tick(task);
  const Json& step = *st;
  ++task.stack.back().blocks.back().pc;
  exec(task, step);
  run_local(tasks_.at(static_cast<std::size_t>(id)));
}

void Engine::run_local(Task& t0) {
  const int id = t0.id;
  while (true) {
    auto& t = tasks_[static_cast<std::size_t>(id)];
    if (t.done) return;
    auto& act = t.stack.back();
    if (act.blocks.empty()) {
      finish(t, Response{std::int64_t{200}, {}, ""});
      continue;
    }
    auto& b = act.blocks.back();
    if (b.pc >= b.steps->size()) {
      act.blocks.pop_back();
      continue;
    }
    const Json& st = (*b.steps)[b.pc];
    const auto op = st["op"].get<std::string>();
    if (kYield.count(op)) return;
    ++b.pc;
    if (op == "log") {
      log(t, st.value("level", "INFO"), interpolate(st.value("msg", ""), act.vars));
    } else if (op == "set") {
      act.vars[st["var"].get<std::string>()] = eval(st.value("value", Json()), act.vars);
    } else if (op == "if") {
      const bool c = truthy(eval(st["cond"], act.vars));
      const char* branch = c ? "then" : "else";
      if (st.contains(branch) && !st[branch].empty()) act.blocks.push_back({&st[branch], 0});
    } else if (op == "respond") {
      Response r;
      const auto status = eval(st.value("status", Json(200)), act.vars);
      r.status = status.is_number_integer() ? ResponseStatus{status.get<std::int64_t>()}
                                            : ResponseStatus{stringify(status)};
      if (st.contains("body")) {
        const auto body = eval(st["body"], act.vars);
        r.body = body.is_string() ? body.get<std::string>() : body.dump();
      }
      finish(t, std::move(r));
    } else if (op == "fork") {
      tick(t);
      const int child = new_task();
      auto& parent = tasks_[static_cast<std::size_t>(id)];
      auto& c = tasks_[static_cast<std::size_t>(child)];
      Activation fa;
      fa.span = parent.stack.back().span;
      fa.service = parent.stack.back().service;
      fa.vars = parent.stack.back().vars;
      fa.fork_body = true;
      fa.blocks.push_back({&st["steps"], 0});
      c.stack.push_back(std::move(fa));
      c.thread = st["name"].get<std::string>();
      c.flow_root = parent.flow_root;
      c.timing = parent.timing;
      c.ready_at = now_ + parent.timing.step_delay;
      c.vc = parent.vc;
      c.vc.resize(static_cast<std::size_t>(child) + 1, 0);
      c.started = true;
      parent.stack.back().forks.push_back(child);
    }
  }
}

void Engine::finish(Task& t, Response resp) {
  auto act = std::move(t.stack.back());
  t.stack.pop_back();
  if (act.fork_body) {
    t.done = true;
    return;
  }
  auto& span = trace_.request_spans[act.span];
  span.response_status = resp.status;
  span.response_body = resp.body;
  span.end_ts = ts() + kTickNs / 2;
  if (t.stack.empty()) {
    t.done = true;
    t.response = std::move(resp);
    return;
  }
  if (!act.into.empty()) {
    auto& caller = t.stack.back();
    caller.vars[act.into] = {{"status", status_json(resp.status)}, {"body", parse_body(resp.body)}};
  }
}

SpanId Engine::data_span(Task& t, StoreKind kind, const std::string& store, std::string op_text,
                         std::optional<std::string> lock_id) {
  DataSpan d;
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%04zu", trace_.request_spans.size() + trace_.data_spans.size() + 1);
  d.span_id = buf;
  d.parent_request = trace_.request_spans[t.stack.back().span].span_id;
  d.store_kind = kind;
  d.instance = scenario_->store(store).instance;
  d.operation_text = std::move(op_text);
  d.lock_id = std::move(lock_id);
  d.start_ts = ts();
  d.end_ts = ts() + kTickNs / 5;
  trace_.data_spans.push_back(std::move(d));
  return trace_.data_spans.back().span_id;
}

void Engine::effect(Task& t, const SpanId& ds, const std::string& store, const Json& st, const Json& vars, bool write,
                    std::optional<std::set<std::string>> columns) {
  Effect e;
  e.request = trace_.request_spans[t.stack.back().span].span_id;
  e.data_span = ds;
  e.store = scenario_->data_store(store);
  e.entities = entity_list(st, vars);
  if (st.contains("columns") && st["columns"].is_array() && st.value("op", "") != "select")
    columns = st["columns"].get<std::set<std::string>>();
  e.all_columns = !columns.has_value();
  if (columns) e.columns = *columns;
  e.write = write;
  e.task = t.id;
  e.vc = t.vc;
  effects_.push_back(std::move(e));
}

void Engine::log(Task& t, const std::string& level, const std::string& msg) {
  const auto& act = t.stack.back();
  LogRecord rec{act.service, trace_.request_spans[act.span].span_id, ts(), level, msg};
  trace_.request_spans[act.span].log_lines.push_back(rec.line());
  logs_.push_back(std::move(rec));
}

void Engine::exec(Task& t, const Json& st) {
  const auto op = st["op"].get<std::string>();
  if (op == "select" || op == "update" || op == "insert" || op == "delete") {
    exec_sql(t, st);
  } else if (op == "kv") {
    exec_kv(t, st);
  } else if (op == "object") {
    exec_object(t, st);
  } else if (op == "produce") {
    exec_produce(t, st);
  } else if (op == "lock" || op == "unlock") {
    const auto store = st["store"].get<std::string>();
    const auto key = stringify(eval(st.at("key"), t.stack.back().vars));
    auto& entries = stores_.at(scenario_->data_store(store)).entries;
    if (op == "lock") {
      lock_owner_[key] = t.id;
      entries[key] = t.flow_root;
      data_span(t, StoreKind::kv, store, "SET " + key + " " + t.flow_root + " NX", key);
    } else {
      auto it = lock_owner_.find(key);
      if (it == lock_owner_.end() || it->second != t.id)
        throw ScenarioError("task " + std::to_string(t.id) + " unlocks " + key + " without holding it");
      lock_owner_.erase(it);
      entries.erase(key);
      data_span(t, StoreKind::kv, store, "DEL " + key, key);
    }
  } else if (op == "call") {
    const auto& vars = t.stack.back().vars;
    RequestInput req;
    req.service = st["service"].get<std::string>();
    req.method = st["method"].get<std::string>();
    req.target = interpolate(st["path"].get<std::string>(), vars);
    if (st.contains("body")) {
      const auto body = eval(st["body"], vars);
      req.body = body.is_string() ? body.get<std::string>() : body.dump();
      req.headers["content-type"] = "application/json";
    }
    const auto span = open_span(&t.stack.back(), t.thread, t.flow_root, req);
    push_handler(t, req, span, st.value("into", ""));
  } else if (op == "join") {
    auto& act = t.stack.back();
    for (int f : act.forks) {
      const auto& fv = tasks_[static_cast<std::size_t>(f)].vc;
      if (t.vc.size() < fv.size()) t.vc.resize(fv.size(), 0);
      for (std::size_t i = 0; i < fv.size(); ++i) t.vc[i] = std::max(t.vc[i], fv[i]);
    }
    act.forks.clear();
  }
}

void Engine::exec_sql(Task& t, const Json& st) {
  const auto op = st["op"].get<std::string>();
  const auto store = st["store"].get<std::string>();
  const auto tname = st["table"].get<std::string>();
  auto& vars = t.stack.back().vars;
  auto& tables = stores_.at(scenario_->data_store(store)).tables;
  auto tit = tables.find(tname);
  if (tit == tables.end()) throw ScenarioError("unknown table '" + tname + "' in store '" + store + "'");
  auto& table = tit->second;
  const auto where = eval(st.value("where", Json::object()), vars);
  const auto into = st.value("into", "");
  std::string text;
  std::optional<std::set<std::string>> cols;
  bool write = true;
  Json result;

  if (op == "select") {
    write = false;
    const auto& c = st.value("columns", Json("*"));
    std::vector<std::string> names;
    if (c.is_array()) names = c.get<std::vector<std::string>>();
    text = "SELECT " + (names.empty() ? std::string("*") : [&] {
      std::string s;
      for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
      return s;
    }()) + " FROM " + tname + where_sql(where);
    if (!names.empty()) cols = std::set<std::string>(names.begin(), names.end());
    Json rows = Json::array();
    for (const auto& [pk, row] : table.rows) {
      if (!row_matches(row, where)) continue;
      if (names.empty()) {
        rows.push_back(row);
      } else {
        Json r = Json::object();
        for (const auto& n : names) r[n] = row.value(n, Json());
        rows.push_back(r);
      }
    }
    result = st.value("many", false) ? rows : (rows.empty() ? Json() : rows[0]);
  } else if (op == "update") {
    const auto& set = st.at("set");
    std::string assigns;
    std::set<std::string> names;
    for (auto it = set.begin(); it != set.end(); ++it) {
      assigns += (assigns.empty() ? "" : ", ") + it.key() + " = " + render_expr(it.value(), vars);
      names.insert(it.key());
    }
    text = "UPDATE " + tname + " SET " + assigns + where_sql(where);
    cols = names;
    std::int64_t n = 0;
    for (auto& [pk, row] : table.rows) {
      if (!row_matches(row, where)) continue;
      Json updated = row;
      for (auto it = set.begin(); it != set.end(); ++it) updated[it.key()] = eval(it.value(), vars, &row);
      row = std::move(updated);
      ++n;
    }
    result = n;
  } else if (op == "insert") {
    const auto values = eval(st.at("values"), vars);
    std::string names, lits;
    for (auto it = values.begin(); it != values.end(); ++it) {
      names += (names.empty() ? "" : ", ") + it.key();
      lits += (lits.empty() ? "" : ", ") + sql_literal(it.value());
    }
    text = "INSERT INTO " + tname + " (" + names + ") VALUES (" + lits + ")";
    if (!values.contains(table.pk)) throw ScenarioError("insert into '" + tname + "' without its pk");
    const auto key = stringify(values[table.pk]);
    result = !table.rows.count(key);
    if (result.get<bool>()) table.rows[key] = values;
  } else {
    text = "DELETE FROM " + tname + where_sql(where);
    std::int64_t n = 0;
    for (auto it = table.rows.begin(); it != table.rows.end();) {
      if (row_matches(it->second, where)) {
        it = table.rows.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    result = n;
  }
  const auto ds = data_span(t, StoreKind::sql, store, text);
  effect(t, ds, store, st, vars, write, cols);
  if (!into.empty()) vars[into] = result;
}

void Engine::exec_kv(Task& t, const Json& st) {
  const auto store = st["store"].get<std::string>();
  auto& vars = t.stack.back().vars;
  auto& entries = stores_.at(scenario_->data_store(store)).entries;
  auto cmd = st["cmd"].get<std::string>();
  std::transform(cmd.begin(), cmd.end(), cmd.begin(), ::toupper);
  const auto key = stringify(eval(st.at("key"), vars));
  const auto value = eval(st.value("value", Json()), vars);
  const auto field = stringify(eval(st.value("field", Json()), vars));
  const auto into = st.value("into", "");
  std::string text = cmd + " " + key;
  std::optional<std::set<std::string>> cols;
  bool write = true;
  Json result;
  if (cmd == "GET") {
    write = false;
    auto it = entries.find(key);
    result = it == entries.end() ? Json() : it->second;
  } else if (cmd == "SET") {
    text += " " + stringify(value);
    entries[key] = value;
    result = true;
  } else if (cmd == "SETNX") {
    text += " " + stringify(value);
    result = !entries.count(key);
    if (result.get<bool>()) entries[key] = value;
  } else if (cmd == "DEL") {
    result = entries.erase(key) > 0;
  } else if (cmd == "INCRBY") {
    text += " " + stringify(value);
    auto& cur = entries[key];
    if (cur.is_null()) cur = 0;
    cur = arith("add", cur, value);
    result = cur;
  } else if (cmd == "HGET") {
    write = false;
    text += " " + field;
    cols = std::set<std::string>{field};
    auto it = entries.find(key);
    result = it != entries.end() && it->second.is_object() ? it->second.value(field, Json()) : Json();
  } else if (cmd == "HSET") {
    text += " " + field + " " + stringify(value);
    cols = std::set<std::string>{field};
    auto& cur = entries[key];
    if (!cur.is_object()) cur = Json::object();
    cur[field] = value;
    result = true;
  } else {
    throw ScenarioError("unsupported kv command '" + cmd + "'");
  }
  const auto ds = data_span(t, StoreKind::kv, store, text);
  effect(t, ds, store, st, vars, write, cols);
  if (!into.empty()) vars[into] = result;
}

void Engine::exec_object(Task& t, const Json& st) {
  const auto store = st["store"].get<std::string>();
  auto& vars = t.stack.back().vars;
  auto& objects = stores_.at(scenario_->data_store(store)).objects;
  const auto cmd = st["cmd"].get<std::string>();
  const auto bucket = stringify(eval(st.at("bucket"), vars));
  const auto key = stringify(eval(st.at("key"), vars));
  const auto path = bucket + "/" + key;
  const auto into = st.value("into", "");
  Json result;
  std::string text;
  bool write = true;
  if (cmd == "get") {
    write = false;
    text = "GetObject bucket=" + bucket + " key=" + key;
    auto it = objects.find(path);
    result = it == objects.end() ? Json() : Json(it->second);
  } else if (cmd == "put") {
    const bool existed = objects.count(path) > 0;
    text = "PutObject bucket=" + bucket + " key=" + key + " existed=" + (existed ? "true" : "false");
    objects[path] = stringify(eval(st.value("content", Json("")), vars));
    result = true;
  } else if (cmd == "delete") {
    text = "DeleteObject bucket=" + bucket + " key=" + key;
    result = objects.erase(path) > 0;
  } else {
    throw ScenarioError("unsupported object command '" + cmd + "'");
  }
  const auto ds = data_span(t, StoreKind::object, store, text);
  effect(t, ds, store, st, vars, write, std::nullopt);
  if (!into.empty()) vars[into] = result;
}

void Engine::exec_produce(Task& t, const Json& st) {
  const auto store = st["store"].get<std::string>();
  auto& vars = t.stack.back().vars;
  Message m;
  m.topic = stringify(eval(st.at("topic"), vars));
  m.key = stringify(eval(st.value("key", Json()), vars));
  m.payload = eval(st.value("payload", Json::object()), vars);
  m.id = "m" + std::to_string(++messages_);
  std::string text = "produce topic=" + m.topic;
  if (!m.key.empty()) text += " key=" + m.key;
  text += " msg_id=" + m.id;
  m.produce_span = data_span(t, StoreKind::mq, store, text);
  m.vc = t.vc;
  effect(t, m.produce_span, store, st, vars, true, std::nullopt);

  if (!scenario_->subscription(m.topic)) {
    stores_.at(scenario_->data_store(store)).topics[m.topic].push_back(m.payload);
    return;
  }
  const auto* sub = scenario_->subscription(m.topic);
  RequestInput req;
  req.service = sub->service;
  req.protocol = Protocol::mq_consume;
  req.method = "CONSUME";
  req.target = m.topic;
  req.headers["message-id"] = m.id;
  if (!m.key.empty()) req.headers["partition-key"] = m.key;
  req.body = m.payload.dump();
  const auto delay = t.timing.step_delay;
  const auto vc = m.vc;
  const auto produce_span = m.produce_span;
  const int id = submit(req, Timing{now_ + delay, delay, 0});
  auto& c = tasks_[static_cast<std::size_t>(id)];
  c.message->produce_span = produce_span;
  c.vc = vc;
  c.vc.resize(static_cast<std::size_t>(id) + 1, 0);
}

void Engine::run_timed(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  while (!finished()) {
    const auto ready = runnable();
    if (ready.empty()) throw ScenarioDeadlock(wait_graph());
    int pick = ready.front();
    for (int id : ready) {
      const auto& a = tasks_[static_cast<std::size_t>(id)];
      const auto& b = tasks_[static_cast<std::size_t>(pick)];
      if (a.ready_at < b.ready_at) pick = id;
    }
    now_ = std::max(now_, tasks_[static_cast<std::size_t>(pick)].ready_at);
    step(pick);
    auto& t = tasks_[static_cast<std::size_t>(pick)];
    const auto jitter = t.timing.jitter > 0 ? static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(t.timing.jitter + 1)) : 0;
    t.ready_at = now_ + t.timing.step_delay + jitter;
  }
}

SimRun run_scenario(const Scenario& s, std::uint64_t seed, const std::string& delays) {
  const auto& schedule = s.delays(delays);
  Engine e(s, initial_stores(s));
  std::map<int, std::string> roots;
  for (const auto& w : s.workload) {
    Timing tm;
    if (auto it = schedule.find(w.id); it != schedule.end()) tm = it->second;
    roots[e.submit(input_of(w), tm)] = w.id;
  }
  e.run_timed(seed);
  SimRun run;
  run.trace = e.trace();
  run.trace.source_meta = {{"scenario", s.id},
                           {"seed", std::to_string(seed)},
                           {"delays", delays.empty() ? s.default_delays : delays}};
  run.effects = e.effects();
  run.deliveries = e.deliveries();
  run.logs = e.logs();
  run.final_state = dump_stores(s, e.stores());
  for (const auto& [id, wid] : roots)
    if (e.response(id)) run.responses[wid] = *e.response(id);
  return run;
}

}  // namespace flowrace::sim
