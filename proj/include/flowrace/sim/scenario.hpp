#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowrace/trace.hpp"

namespace flowrace::sim {

using Json = nlohmann::json;

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StoreDef {
  std::string name;  // handle used by handler steps
  StoreKind kind = StoreKind::sql;
  StoreInstance instance;
  // Another endpoint of the store named here (a replica): same data, own instance.
  std::optional<std::string> alias_of;
  // sql: {table: {"pk": column, "rows": [...]}}; kv: {key: value};
  // object: {"bucket/key": content}; mq: {topic: [payload, ...]}
  Json initial = Json::object();
};

struct Handler {
  std::string service;
  std::string method;
  std::string path;  // segments like {order_id} bind variables
  Json steps = Json::array();
};

// Messages on topic are delivered to service as mq-consume requests.
struct Subscription {
  std::string topic;
  std::string service;
  std::string store;  // mq store the topic lives in
  Json steps = Json::array();
};

struct WorkloadItem {
  std::string id;
  std::string service;
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;
  Json body;  // null for no body
};

struct Timing {
  std::int64_t start_at = 0;    // ticks
  std::int64_t step_delay = 1;  // ticks between two steps of the request
  std::int64_t jitter = 0;      // extra 0..jitter ticks per step, drawn from the seed
};

using DelaySchedule = std::map<std::string, Timing>;  // workload id -> timing

struct PairPattern {
  std::string a;  // glob over "service METHOD target"
  std::string b;
};

struct Scenario {
  std::string id;
  std::string description;
  std::vector<StoreDef> stores;
  std::vector<Handler> handlers;
  std::vector<Subscription> subscriptions;
  std::vector<WorkloadItem> workload;
  std::map<std::string, DelaySchedule> delay_schedules;
  std::string default_delays;
  std::vector<PairPattern> ground_truth;
  // Endpoints whose responses are read-only views (globs over "METHOD target").
  std::vector<std::string> pure_query_endpoints;
  // Detector configuration suggested for this scenario (config file format).
  Json config = Json::object();

  const StoreDef& store(const std::string& name) const;
  // Name of the store holding the data (follows alias_of).
  std::string data_store(const std::string& name) const;
  const Handler* route(const std::string& service, const std::string& method, const std::string& target,
                       std::map<std::string, std::string>* params = nullptr) const;
  const Subscription* subscription(const std::string& topic) const;
  const DelaySchedule& delays(const std::string& name) const;
};

Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::filesystem::path& path);

// Built-in scenario directory and the ids found there.
std::filesystem::path scenario_dir();
std::vector<std::string> catalog();
// Accepts a catalog id ("S1") or a path to a scenario file.
Scenario load_catalog(const std::string& id_or_path);

// "service METHOD target" of a request span, used by PairPattern.
std::string span_label(const RequestSpan& r);

}  // namespace flowrace::sim
