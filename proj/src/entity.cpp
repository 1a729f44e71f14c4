#include "flowrace/entity.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "flowrace/codec.hpp"
#include "flowrace/kernels.hpp"
#include "flowrace/sql.hpp"

namespace flowrace {

std::string to_string(OpClass c) { return c == OpClass::read ? "read" : "write"; }
std::string to_string(Precision p) { return p == Precision::exact ? "exact" : "imprecise"; }

bool ColumnSet::overlaps(const ColumnSet& other) const {
  if (all || other.all) return true;
  const auto& small = names.size() <= other.names.size() ? names : other.names;
  const auto& large = names.size() <= other.names.size() ? other.names : names;
  return std::any_of(small.begin(), small.end(), [&](const auto& c) { return large.count(c) > 0; });
}

bool StateEntity::shares_key(const StateEntity& other) const {
  return std::any_of(keys.begin(), keys.end(), [&](const auto& k) { return other.keys.count(k) > 0; });
}

PkRules PkRules::defaults() { return PkRules{{"id", "uid", "guid", "key", "serial", "*_id"}, {}}; }

std::vector<std::string> name_tokens(std::string_view name) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(to_lower(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (c == '_' || c == '-' || c == '.' || c == ' ') {
      flush();
      continue;
    }
    const bool upper = std::isupper(static_cast<unsigned char>(c));
    if (upper && !cur.empty()) {
      const bool prev_lower = std::islower(static_cast<unsigned char>(cur.back())) ||
                              std::isdigit(static_cast<unsigned char>(cur.back()));
      const bool next_lower = i + 1 < name.size() && std::islower(static_cast<unsigned char>(name[i + 1]));
      if (prev_lower || (next_lower && std::isupper(static_cast<unsigned char>(cur.back())))) flush();
    }
    cur.push_back(c);
  }
  flush();
  return out;
}

bool PkRules::is_key_column(const std::string& table, const std::string& column) const {
  const auto col = to_lower(column);
  if (auto it = custom_rules.find(to_lower(table)); it != custom_rules.end()) {
    return std::any_of(it->second.begin(), it->second.end(), [&](const auto& c) { return to_lower(c) == col; });
  }
  const auto tokens = name_tokens(column);
  for (const auto& raw : indicator_tokens) {
    const auto pat = to_lower(raw);
    if (pat.find_first_of("*?") != std::string::npos) {
      if (glob_match(pat, col)) return true;
    } else if (std::find(tokens.begin(), tokens.end(), pat) != tokens.end()) {
      return true;
    }
  }
  return false;
}

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::string word;
    if (text[i] == '"') {
      ++i;
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        word.push_back(text[i++]);
      }
      ++i;
    } else {
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) word.push_back(text[i++]);
    }
    out.push_back(word);
  }
  return out;
}

std::string first_word(std::string_view text) {
  auto words = split_words(text);
  if (words.empty()) return {};
  auto w = words.front();
  if (auto p = w.find('('); p != std::string::npos) w = w.substr(0, p);
  return to_lower(w);
}

void make_imprecise(Access& a, std::string reason) {
  a.entity.precision = Precision::imprecise;
  a.entity.keys.clear();
  a.entity.columns = ColumnSet::wildcard();
  a.note = std::move(reason);
}

// Words of an API-call style op: "verb(a, b) k=v" -> {verb, a, b, k=v}.
std::vector<std::string> call_words(std::string_view text) {
  std::string flat(text);
  for (auto& c : flat)
    if (c == '(' || c == ')' || c == ',') c = ' ';
  return split_words(flat);
}

}  // namespace

Access extract_sql(const DataSpan& ds, const PkRules& rules) {
  Access a;
  a.data_span = ds.span_id;
  a.entity.instance = ds.instance;
  a.entity.kind = StoreKind::sql;

  sql::Statement st;
  try {
    st = sql::parse(ds.operation_text);
  } catch (const sql::UnsupportedSql& e) {
    const auto verb = first_word(ds.operation_text);
    a.op_class = verb == "select" ? OpClass::read : OpClass::write;
    a.creation = verb == "insert";
    a.entity.space = to_lower(e.table);
    make_imprecise(a, std::string("unsupported SQL: ") + e.what());
    return a;
  }

  // Case of identifiers only matters for key detection (camelCase tokens).
  a.entity.space = to_lower(st.table);
  std::set<std::string> cols;
  for (const auto& c : st.columns) cols.insert(to_lower(c));
  switch (st.kind) {
    case sql::StatementKind::select:
      a.op_class = OpClass::read;
      a.entity.columns = st.all_columns ? ColumnSet::wildcard()
                                        : ColumnSet::of(cols);
      break;
    case sql::StatementKind::insert:
      a.op_class = OpClass::write;
      a.creation = true;
      a.entity.columns = ColumnSet::of(cols);
      break;
    case sql::StatementKind::update:
      a.op_class = OpClass::write;
      a.entity.columns = ColumnSet::of(cols);
      break;
    case sql::StatementKind::remove:
      a.op_class = OpClass::write;
      a.entity.columns = ColumnSet::wildcard();
      break;
  }

  std::string imprecise_reason;
  if (st.kind != sql::StatementKind::insert && !st.has_where) imprecise_reason = "no WHERE clause";
  for (const auto& p : st.where) {
    if (p.op != "=") {
      if (imprecise_reason.empty()) imprecise_reason = "non-equality predicate on '" + p.column + "'";
    } else if (!p.literal) {
      if (imprecise_reason.empty()) imprecise_reason = "non-literal value for '" + p.column + "'";
    } else if (rules.is_key_column(st.table, p.column)) {
      a.entity.keys.insert({to_lower(p.column), *p.literal});
    }
  }
  // INSERT field lists and UPDATE SET clauses may carry the row identity
  // when the WHERE clause filters on non-key fields.
  for (const auto& v : st.values)
    if (v.literal && rules.is_key_column(st.table, v.column)) a.entity.keys.insert({to_lower(v.column), *v.literal});

  if (imprecise_reason.empty() && a.entity.keys.empty()) imprecise_reason = "no key columns identified";
  if (!imprecise_reason.empty()) make_imprecise(a, imprecise_reason);
  return a;
}

namespace {

struct KvCommand {
  OpClass op_class;
  bool creation;
  enum class Keys { first, all, alternate } keys;
  bool field_columns;  // hash commands: the second argument names a field
};

const std::map<std::string, KvCommand>& kv_commands() {
  using K = KvCommand::Keys;
  static const std::map<std::string, KvCommand> table = {
      {"get", {OpClass::read, false, K::first, false}},
      {"mget", {OpClass::read, false, K::all, false}},
      {"exists", {OpClass::read, false, K::all, false}},
      {"strlen", {OpClass::read, false, K::first, false}},
      {"ttl", {OpClass::read, false, K::first, false}},
      {"hget", {OpClass::read, false, K::first, true}},
      {"hgetall", {OpClass::read, false, K::first, false}},
      {"hexists", {OpClass::read, false, K::first, true}},
      {"lrange", {OpClass::read, false, K::first, false}},
      {"llen", {OpClass::read, false, K::first, false}},
      {"smembers", {OpClass::read, false, K::first, false}},
      {"sismember", {OpClass::read, false, K::first, false}},
      {"set", {OpClass::write, false, K::first, false}},
      {"setnx", {OpClass::write, true, K::first, false}},
      {"setex", {OpClass::write, false, K::first, false}},
      {"psetex", {OpClass::write, false, K::first, false}},
      {"getset", {OpClass::write, false, K::first, false}},
      {"mset", {OpClass::write, false, K::alternate, false}},
      {"del", {OpClass::write, false, K::all, false}},
      {"unlink", {OpClass::write, false, K::all, false}},
      {"incr", {OpClass::write, false, K::first, false}},
      {"decr", {OpClass::write, false, K::first, false}},
      {"incrby", {OpClass::write, false, K::first, false}},
      {"decrby", {OpClass::write, false, K::first, false}},
      {"incrbyfloat", {OpClass::write, false, K::first, false}},
      {"append", {OpClass::write, false, K::first, false}},
      {"expire", {OpClass::write, false, K::first, false}},
      {"persist", {OpClass::write, false, K::first, false}},
      {"hset", {OpClass::write, false, K::first, true}},
      {"hsetnx", {OpClass::write, true, K::first, true}},
      {"hdel", {OpClass::write, false, K::first, true}},
      {"hincrby", {OpClass::write, false, K::first, true}},
      {"lpush", {OpClass::write, false, K::first, false}},
      {"rpush", {OpClass::write, false, K::first, false}},
      {"lpop", {OpClass::write, false, K::first, false}},
      {"rpop", {OpClass::write, false, K::first, false}},
      {"sadd", {OpClass::write, false, K::first, false}},
      {"srem", {OpClass::write, false, K::first, false}},
  };
  return table;
}

std::string key_prefix(const std::string& key) {
  const auto p = key.find(':');
  return p == std::string::npos ? key : key.substr(0, p);
}

}  // namespace

Access extract_kv(const DataSpan& ds) {
  Access a;
  a.data_span = ds.span_id;
  a.entity.instance = ds.instance;
  a.entity.kind = StoreKind::kv;
  const auto words = split_words(ds.operation_text);
  const auto cmd = words.empty() ? std::string{} : to_lower(words.front());
  const auto it = kv_commands().find(cmd);
  if (it == kv_commands().end() || words.size() < 2) {
    a.op_class = OpClass::write;
    if (words.size() >= 2) a.entity.space = key_prefix(words[1]);
    make_imprecise(a, it == kv_commands().end() ? "unknown KV command '" + cmd + "'" : "missing KV key");
    return a;
  }
  const auto& spec = it->second;
  a.op_class = spec.op_class;
  a.creation = spec.creation;
  std::vector<std::string> keys;
  switch (spec.keys) {
    case KvCommand::Keys::first: keys.push_back(words[1]); break;
    case KvCommand::Keys::all: keys.assign(words.begin() + 1, words.end()); break;
    case KvCommand::Keys::alternate:
      for (std::size_t i = 1; i < words.size(); i += 2) keys.push_back(words[i]);
      break;
  }
  if (cmd == "set") {
    for (std::size_t i = 3; i < words.size(); ++i)
      if (to_lower(words[i]) == "nx") a.creation = true;
  }
  a.entity.space = key_prefix(keys.front());
  for (const auto& k : keys) a.entity.keys.insert({"key", k});
  if (spec.field_columns && words.size() >= 3) {
    std::set<std::string> fields;
    const std::size_t step = cmd == "hset" ? 2 : 1;
    for (std::size_t i = 2; i < words.size(); i += step) fields.insert(words[i]);
    if (cmd == "hincrby" || cmd == "hsetnx") fields = {words[2]};
    a.entity.columns = ColumnSet::of(fields);
  } else {
    a.entity.columns = ColumnSet::wildcard();
  }
  return a;
}

std::optional<MqOp> parse_mq_op(std::string_view text) {
  const auto words = call_words(text);
  if (words.empty()) return std::nullopt;
  MqOp op;
  const auto verb = to_lower(words.front());
  if (verb == "produce" || verb == "publish" || verb == "send") {
    op.verb = "produce";
  } else if (verb == "consume" || verb == "poll" || verb == "receive") {
    op.verb = "consume";
  } else {
    return std::nullopt;
  }
  for (std::size_t i = 1; i < words.size(); ++i) {
    const auto& w = words[i];
    const auto eq = w.find('=');
    if (eq == std::string::npos) {
      if (op.topic.empty()) op.topic = w;
      continue;
    }
    const auto k = to_lower(w.substr(0, eq));
    const auto v = w.substr(eq + 1);
    if (k == "topic" || k == "queue") op.topic = v;
    else if (k == "key" || k == "partition_key" || k == "partition") op.partition_key = v;
    else if (k == "msg_id" || k == "message_id" || k == "message-id") op.msg_id = v;
  }
  if (op.topic.empty()) return std::nullopt;
  return op;
}

Access extract_mq(const DataSpan& ds) {
  Access a;
  a.data_span = ds.span_id;
  a.entity.instance = ds.instance;
  a.entity.kind = StoreKind::mq;
  a.entity.columns = ColumnSet::wildcard();
  const auto op = parse_mq_op(ds.operation_text);
  if (!op) {
    a.op_class = OpClass::write;
    make_imprecise(a, "unrecognised message-queue operation");
    return a;
  }
  a.op_class = op->verb == "produce" ? OpClass::write : OpClass::read;
  a.entity.space = op->topic;
  a.entity.keys.insert({"topic", op->topic});
  if (op->partition_key) a.entity.keys.insert({"partition_key", *op->partition_key});
  return a;
}

Access extract_object(const DataSpan& ds) {
  Access a;
  a.data_span = ds.span_id;
  a.entity.instance = ds.instance;
  a.entity.kind = StoreKind::object;
  a.entity.columns = ColumnSet::wildcard();
  const auto words = call_words(ds.operation_text);
  const auto verb = words.empty() ? std::string{} : to_lower(words.front());
  std::string bucket, key;
  std::vector<std::string> positional;
  bool created = false;
  for (std::size_t i = 1; i < words.size(); ++i) {
    const auto& w = words[i];
    const auto eq = w.find('=');
    if (eq == std::string::npos) {
      positional.push_back(w);
      continue;
    }
    const auto k = to_lower(w.substr(0, eq));
    const auto v = w.substr(eq + 1);
    if (k == "bucket") bucket = v;
    else if (k == "key") key = v;
    else if (k == "existed") created = to_lower(v) == "false";
    else if (k == "if-none-match") created = v == "*";
  }
  if (bucket.empty() && !positional.empty()) bucket = positional[0];
  if (key.empty() && positional.size() > 1) key = positional[1];

  const bool read = verb == "getobject" || verb == "headobject";
  const bool write = verb == "putobject" || verb == "deleteobject" || verb == "copyobject";
  a.op_class = read ? OpClass::read : OpClass::write;
  a.entity.space = bucket;
  if ((!read && !write) || bucket.empty() || key.empty()) {
    make_imprecise(a, "unrecognised object-store operation");
    return a;
  }
  a.creation = verb == "putobject" && created;
  a.entity.keys.insert({"object", bucket + "/" + key});
  return a;
}

Access extract_access(const DataSpan& ds, const PkRules& rules) {
  switch (ds.store_kind) {
    case StoreKind::sql: return extract_sql(ds, rules);
    case StoreKind::kv: return extract_kv(ds);
    case StoreKind::mq: return extract_mq(ds);
    case StoreKind::object: return extract_object(ds);
  }
  return extract_sql(ds, rules);
}

std::map<SpanId, Access> extract_all(const TraceSet& ts, const PkRules& rules) {
  auto accesses = kernels::map_indexed<Access>(
      ts.data_spans.size(), [&](std::size_t i) { return extract_access(ts.data_spans[i], rules); });
  std::map<SpanId, Access> out;
  for (auto& a : accesses) out.emplace(a.data_span, std::move(a));
  return out;
}

std::map<SpanId, Access> extract_all_serial(const TraceSet& ts, const PkRules& rules) {
  auto accesses = kernels::map_indexed_serial<Access>(
      ts.data_spans.size(), [&](std::size_t i) { return extract_access(ts.data_spans[i], rules); });
  std::map<SpanId, Access> out;
  for (auto& a : accesses) out.emplace(a.data_span, std::move(a));
  return out;
}

LockOp lock_op_kind(const DataSpan& ds) {
  if (!ds.lock_id) return LockOp::none;
  const auto verb = first_word(ds.operation_text);
  if (verb == "setnx" || verb == "set" || verb == "lock" || verb == "acquire" || verb == "trylock")
    return LockOp::acquire;
  if (verb == "del" || verb == "unlink" || verb == "unlock" || verb == "release") return LockOp::release;
  return LockOp::none;
}

}  // namespace flowrace
