#include "flowrace/sim/random_scenario.hpp"

#include <random>

namespace flowrace::sim {

namespace {

class Builder {
 public:
  Builder(std::uint64_t seed, int budget) : rng_(seed), budget_(budget) {}

  Json build() {
    Json doc;
    doc["id"] = "random-" + std::to_string(seed_tag());
    doc["stores"] = Json::array({
        store("db", "sql", "orders-db:5432", "shop", tables()),
        {{"name", "replica"}, {"kind", "sql"}, {"endpoint", "orders-db-ro:5432"}, {"store_name", "shop"},
         {"alias_of", "db"}},
        store("other", "sql", "audit-db:5432", "shop", tables()),
        store("mq", "mq", "kafka:9092", "events", Json::object()),
        store("locks", "kv", "redis:6379", "0", Json::object()),
    });
    doc["handlers"] = Json::array();
    doc["subscriptions"] = Json::array();
    doc["workload"] = Json::array();
    const int roots = pick(1, std::min(4, budget_));
    for (int i = 0; i < roots && budget_ > 0; ++i) {
      --budget_;
      const auto svc = "svc" + std::to_string(i);
      const auto path = "/w" + std::to_string(i);
      doc["handlers"].push_back({{"service", svc}, {"endpoint", "POST " + path}, {"steps", body(doc, svc, 0)}});
      doc["workload"].push_back({{"id", "w" + std::to_string(i)}, {"service", svc}, {"method", "POST"}, {"target", path}});
    }
    Json delays = Json::object();
    for (const auto& w : doc["workload"])
      delays[w["id"].get<std::string>()] = {{"start_at", pick(0, 6)}, {"step_delay", pick(1, 4)}, {"jitter", pick(0, 2)}};
    doc["delay_schedules"] = {{"default", delays}};
    doc["default_delays"] = "default";
    Json rules = Json::array();
    if (coin()) rules.push_back({{"endpoint", "orders-db*"}, {"store_name", "shop"}, {"logical", "orders"}});
    doc["config"] = {{"instance_rules", rules}};
    return doc;
  }

 private:
  std::uint64_t seed_tag() { return rng_() % 100000; }
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(int pct = 50) { return pick(1, 100) <= pct; }
  std::string item() { return "i" + std::to_string(pick(1, 3)); }

  static Json store(const char* name, const char* kind, const char* ep, const char* sn, Json initial) {
    return {{"name", name}, {"kind", kind}, {"endpoint", ep}, {"store_name", sn}, {"initial", std::move(initial)}};
  }

  static Json tables() {
    Json rows = Json::array();
    for (int i = 1; i <= 3; ++i) rows.push_back({{"id", "i" + std::to_string(i)}, {"qty", 10}, {"price", 5}});
    return {{"items", {{"pk", "id"}, {"rows", rows}}}};
  }

  Json sql_op() {
    const auto id = item();
    const int kind = pick(0, 5);
    const std::string st = kind == 5 ? "replica" : coin(80) ? "db" : "other";
    const auto entity = (st == "other" ? "audit:" : "item:") + id;
    if (st == "replica" || kind <= 1) {
      Json cols = coin() ? Json::array({"qty"}) : coin() ? Json::array({"price"}) : Json("*");
      return {{"op", "select"}, {"store", st}, {"table", "items"}, {"columns", cols}, {"where", {{"id", id}}},
              {"entity", entity}, {"into", "row"}};
    }
    if (kind <= 3) {
      const auto col = coin() ? "qty" : "price";
      Json value = coin() ? Json({{"sub", {{{"col", col}}, 1}}}) : Json(pick(0, 9));
      return {{"op", "update"}, {"store", st}, {"table", "items"}, {"set", {{col, value}}}, {"where", {{"id", id}}},
              {"entity", entity}};
    }
    const auto nid = "n" + std::to_string(pick(1, 4));
    return {{"op", "insert"}, {"store", st}, {"table", "items"}, {"values", {{"id", nid}, {"qty", 1}, {"price", 1}}},
            {"entity", (st == "other" ? "audit:" : "item:") + nid}};
  }

  Json ops(int n) {
    Json out = Json::array();
    for (int i = 0; i < n; ++i) out.push_back(sql_op());
    return out;
  }

  std::string child(Json& doc, const std::string& parent, int depth) {
    const auto svc = parent + "c" + std::to_string(children_++);
    const auto path = "/" + svc;
    doc["handlers"].push_back({{"service", svc}, {"endpoint", "POST " + path}, {"steps", body(doc, svc, depth + 1)}});
    return svc;
  }

  Json call(Json& doc, const std::string& parent, int depth) {
    --budget_;
    const auto svc = child(doc, parent, depth);
    return {{"op", "call"}, {"service", svc}, {"method", "POST"}, {"path", "/" + svc}};
  }

  Json body(Json& doc, const std::string& svc, int depth) {
    Json steps = Json::array();
    const bool locked = coin(20);
    const auto lock_key = "lock:" + item();
    if (locked) steps.push_back({{"op", "lock"}, {"store", "locks"}, {"key", lock_key}});
    for (auto& op : ops(pick(1, 2))) steps.push_back(op);
    if (locked) steps.push_back({{"op", "unlock"}, {"store", "locks"}, {"key", lock_key}});

    if (depth < 2 && budget_ > 0 && coin(35)) steps.push_back(call(doc, svc, depth));
    if (depth == 0 && budget_ > 1 && coin(25)) {
      Json branch = Json::array({call(doc, svc, depth)});
      steps.push_back({{"op", "fork"}, {"name", "async"}, {"steps", branch}});
      // the branch subtree may have used up the rest
      if (budget_ > 0) steps.push_back(call(doc, svc, depth));
      if (coin()) steps.push_back({{"op", "join"}});
      if (budget_ > 0 && coin()) steps.push_back(call(doc, svc, depth));
    }
    if (depth < 2 && budget_ > 0 && coin(25)) {
      --budget_;
      const auto topic = "t" + std::to_string(topics_++);
      const auto consumer = svc + "-consumer";
      doc["subscriptions"].push_back({{"topic", topic}, {"service", consumer}, {"store", "mq"}, {"steps", ops(pick(1, 2))}});
      const auto id = item();
      steps.push_back({{"op", "produce"}, {"store", "mq"}, {"topic", topic}, {"key", id}, {"payload", {{"id", id}}},
                       {"entity", "topic:" + topic}});
    }
    for (auto& op : ops(pick(0, 1))) steps.push_back(op);
    steps.push_back({{"op", "respond"}, {"status", 200}});
    return steps;
  }

  std::mt19937_64 rng_;
  int budget_;
  int children_ = 0;
  int topics_ = 0;
};

}  // namespace

Json random_scenario_json(std::uint64_t seed, int max_requests) { return Builder(seed, max_requests).build(); }

Scenario random_scenario(std::uint64_t seed, int max_requests) {
  return parse_scenario(random_scenario_json(seed, max_requests));
}

}  // namespace flowrace::sim
