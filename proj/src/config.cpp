#include "flowrace/config.hpp"

#include <fstream>

namespace flowrace {

namespace {

void only_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

std::vector<std::string> strings(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected a list of strings");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw ConfigError(where + ": expected a list of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::string str(const Json& obj, const char* key, const std::string& where, bool required = true) {
  if (!obj.contains(key)) {
    if (required) throw ConfigError(where + ": missing '" + key + "'");
    return {};
  }
  if (!obj[key].is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
  return obj[key].get<std::string>();
}

InvariantKind invariant_kind(const std::string& s) {
  if (s == "expect") return InvariantKind::expect;
  if (s == "relation") return InvariantKind::relation;
  if (s == "tolerate") return InvariantKind::tolerate;
  throw ConfigError("unknown invariant kind '" + s + "'");
}

OracleConfig parse_oracle(const Json& o) {
  only_keys(o, "oracle", {"response_whitelist", "state_invariants", "normalization"});
  OracleConfig cfg;
  if (o.contains("response_whitelist")) cfg.response_whitelist = strings(o["response_whitelist"], "oracle.response_whitelist");
  if (o.contains("state_invariants")) {
    if (!o["state_invariants"].is_array()) throw ConfigError("oracle.state_invariants: expected a list");
    for (const auto& j : o["state_invariants"]) {
      only_keys(j, "state invariant", {"name", "path", "kind", "op", "value"});
      StateInvariant inv;
      inv.name = str(j, "name", "state invariant");
      inv.path = str(j, "path", "state invariant");
      inv.kind = invariant_kind(str(j, "kind", "state invariant"));
      if (j.contains("op")) inv.op = str(j, "op", "state invariant");
      if (j.contains("value")) inv.value = j["value"];
      cfg.state_invariants.push_back(std::move(inv));
    }
  }
  if (o.contains("normalization")) {
    const auto& n = o["normalization"];
    only_keys(n, "oracle.normalization", {"classes", "extra_patterns", "volatile_fields", "set_paths"});
    auto& r = cfg.normalization;
    if (n.contains("classes")) {
      r.classes.clear();
      for (auto& c : strings(n["classes"], "normalization.classes")) {
        if (c != "timestamp" && c != "uuid" && c != "hex" && c != "duration")
          throw ConfigError("unknown normalization class '" + c + "'");
        r.classes.insert(c);
      }
    }
    if (n.contains("extra_patterns")) r.extra_patterns = strings(n["extra_patterns"], "normalization.extra_patterns");
    if (n.contains("volatile_fields")) r.volatile_fields = strings(n["volatile_fields"], "normalization.volatile_fields");
    if (n.contains("set_paths")) r.set_paths = strings(n["set_paths"], "normalization.set_paths");
  }
  cfg.validate();
  return cfg;
}

}  // namespace

Config parse_config(const Json& doc) {
  only_keys(doc, "config",
            {"pk_rules", "sql_mode", "instance_rules", "idempotent_endpoints", "oracle", "coupled_stores", "budgets"});
  Config cfg;
  if (doc.contains("pk_rules")) {
    const auto& p = doc["pk_rules"];
    only_keys(p, "pk_rules", {"indicator_tokens", "custom_rules"});
    if (p.contains("indicator_tokens")) cfg.pk_rules.indicator_tokens = strings(p["indicator_tokens"], "pk_rules.indicator_tokens");
    if (p.contains("custom_rules")) {
      if (!p["custom_rules"].is_object()) throw ConfigError("pk_rules.custom_rules: expected an object");
      for (auto it = p["custom_rules"].begin(); it != p["custom_rules"].end(); ++it)
        cfg.pk_rules.custom_rules[it.key()] = strings(it.value(), "pk_rules.custom_rules." + it.key());
    }
  }
  if (doc.contains("sql_mode")) {
    if (!doc["sql_mode"].is_string()) throw ConfigError("sql_mode must be a string");
    cfg.sql_mode = sql_mode_from_string(doc["sql_mode"].get<std::string>());
  }
  if (doc.contains("instance_rules")) {
    if (!doc["instance_rules"].is_array()) throw ConfigError("instance_rules: expected a list");
    for (const auto& j : doc["instance_rules"]) {
      only_keys(j, "instance rule", {"endpoint", "store_name", "logical"});
      InstanceRule r;
      r.endpoint_pattern = str(j, "endpoint", "instance rule");
      if (j.contains("store_name")) r.store_pattern = str(j, "store_name", "instance rule");
      r.logical_store = str(j, "logical", "instance rule");
      cfg.instance_rules.rules.push_back(std::move(r));
    }
  }
  if (doc.contains("idempotent_endpoints")) cfg.idempotent_endpoints = strings(doc["idempotent_endpoints"], "idempotent_endpoints");
  if (doc.contains("oracle")) cfg.oracle = parse_oracle(doc["oracle"]);
  if (doc.contains("coupled_stores")) {
    if (!doc["coupled_stores"].is_array()) throw ConfigError("coupled_stores: expected a list");
    for (const auto& j : doc["coupled_stores"]) {
      only_keys(j, "coupled store", {"endpoint", "store_name"});
      cfg.coupled_stores.push_back({str(j, "endpoint", "coupled store"), str(j, "store_name", "coupled store")});
    }
  }
  if (doc.contains("budgets")) {
    const auto& b = doc["budgets"];
    only_keys(b, "budgets", {"max_pairs", "max_seconds"});
    if (b.contains("max_pairs")) {
      if (!b["max_pairs"].is_number_unsigned()) throw ConfigError("budgets.max_pairs must be a non-negative integer");
      cfg.budgets.max_pairs = b["max_pairs"].get<std::size_t>();
    }
    if (b.contains("max_seconds")) {
      if (!b["max_seconds"].is_number() || b["max_seconds"].get<double>() < 0)
        throw ConfigError("budgets.max_seconds must be a non-negative number");
      cfg.budgets.max_seconds = b["max_seconds"].get<double>();
    }
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  const auto doc = Json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return parse_config(doc);
}

Json to_json(const Config& cfg) {
  Json doc;
  doc["pk_rules"]["indicator_tokens"] = cfg.pk_rules.indicator_tokens;
  doc["pk_rules"]["custom_rules"] = cfg.pk_rules.custom_rules;
  doc["sql_mode"] = to_string(cfg.sql_mode);
  doc["instance_rules"] = Json::array();
  for (const auto& r : cfg.instance_rules.rules)
    doc["instance_rules"].push_back({{"endpoint", r.endpoint_pattern}, {"store_name", r.store_pattern}, {"logical", r.logical_store}});
  doc["idempotent_endpoints"] = cfg.idempotent_endpoints;
  auto& o = doc["oracle"];
  o["response_whitelist"] = cfg.oracle.response_whitelist;
  o["state_invariants"] = Json::array();
  for (const auto& inv : cfg.oracle.state_invariants)
    o["state_invariants"].push_back(
        {{"name", inv.name}, {"path", inv.path}, {"kind", to_string(inv.kind)}, {"op", inv.op}, {"value", inv.value}});
  const auto& n = cfg.oracle.normalization;
  o["normalization"] = {{"classes", n.classes},
                        {"extra_patterns", n.extra_patterns},
                        {"volatile_fields", n.volatile_fields},
                        {"set_paths", n.set_paths}};
  doc["coupled_stores"] = Json::array();
  for (const auto& s : cfg.coupled_stores)
    doc["coupled_stores"].push_back({{"endpoint", s.endpoint}, {"store_name", s.store_name}});
  doc["budgets"] = Json::object();
  if (cfg.budgets.max_pairs) doc["budgets"]["max_pairs"] = *cfg.budgets.max_pairs;
  if (cfg.budgets.max_seconds) doc["budgets"]["max_seconds"] = *cfg.budgets.max_seconds;
  return doc;
}

}  // namespace flowrace
