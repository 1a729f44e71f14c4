#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flowrace/interleave.hpp"
#include "flowrace/sim/scenario.hpp"

namespace flowrace::sim {

using VectorClock = std::vector<std::uint32_t>;

bool vc_leq(const VectorClock& x, const VectorClock& y);
bool vc_concurrent(const VectorClock& x, const VectorClock& y);

struct SqlTable {
  std::string pk;
  std::map<std::string, Json> rows;  // pk value -> row object

  bool operator==(const SqlTable&) const = default;
};

struct StoreState {
  StoreKind kind = StoreKind::sql;
  std::map<std::string, SqlTable> tables;            // sql
  std::map<std::string, Json> entries;               // kv (hashes are objects)
  std::map<std::string, std::string> objects;        // object: "bucket/key" -> content
  std::map<std::string, std::vector<Json>> topics;   // mq: undelivered payloads

  bool operator==(const StoreState&) const = default;
};

// Keyed by store name; aliases have no entry of their own.
using StoreMap = std::map<std::string, StoreState>;

StoreMap initial_stores(const Scenario& s);

// {endpoint: {store_name: {...}}} for the instances in scope (all when empty).
// Aliased instances are dumped from the store they mirror.
Json dump_stores(const Scenario& s, const StoreMap& stores, const StoreScope& scope = {});

// Ground-truth record of one store operation, taken from the declared entity.
struct Effect {
  SpanId request;
  SpanId data_span;
  std::string store;  // data store name (aliases resolved)
  std::vector<std::string> entities;
  bool all_columns = true;
  std::set<std::string> columns;
  bool write = false;
  int task = 0;
  VectorClock vc;
};

bool effects_conflict(const Effect& x, const Effect& y);

struct Delivery {
  SpanId produce_span;
  SpanId consume_span;
  std::string topic;
  std::string msg_id;
};

struct LogRecord {
  std::string service;
  SpanId span;
  Timestamp ts = 0;
  std::string level;
  std::string message;

  std::string line() const;  // "<iso-ts> LEVEL service: message"
};

struct RequestInput {
  std::string service;
  Protocol protocol = Protocol::http;
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;
  std::string body;
};

RequestInput input_of(const RequestSpan& r);
RequestInput input_of(const RequestSpec& r);
RequestInput input_of(const WorkloadItem& w);

class ScenarioDeadlock : public ScenarioError {
 public:
  explicit ScenarioDeadlock(const std::string& wait_graph)
      : ScenarioError("scenario deadlocked: " + wait_graph), wait_graph(wait_graph) {}
  std::string wait_graph;
};

class UnknownEndpoint : public ReplayError {
 public:
  explicit UnknownEndpoint(const std::string& what) : ReplayError("no handler for " + what) {}
};

inline constexpr Timestamp kEpochNs = 1'700'000'000'000'000'000;
inline constexpr Timestamp kTickNs = 1'000'000;

// Interpreter for handler programs. Tasks are threads of execution: a root
// request, a forked branch or a message consumer. Each step runs one store
// operation or call and then every local statement up to the next one.
class Engine {
 public:
  Engine(const Scenario& s, StoreMap stores, std::int64_t clock = 0);

  // Adds a root task; throws UnknownEndpoint when nothing handles it.
  int submit(const RequestInput& req, const Timing& timing);

  std::vector<int> runnable() const;
  void step(int task);
  bool finished() const;
  std::string wait_graph() const;

  // Picks the runnable task with the earliest ready time until all finish.
  void run_timed(std::uint64_t seed);

  const StoreMap& stores() const { return stores_; }
  const TraceSet& trace() const { return trace_; }
  const std::vector<Effect>& effects() const { return effects_; }
  const std::vector<Delivery>& deliveries() const { return deliveries_; }
  const std::vector<LogRecord>& logs() const { return logs_; }
  const std::optional<Response>& response(int task) const;
  std::int64_t now() const { return now_; }
  std::size_t task_count() const { return tasks_.size(); }

 private:
  struct Block {
    const Json* steps = nullptr;
    std::size_t pc = 0;
  };
  struct Activation {
    std::size_t span = 0;  // index into trace_.request_spans
    std::string service;
    Json vars = Json::object();
    std::vector<Block> blocks;
    std::string into;
    std::vector<int> forks;
    bool fork_body = false;
  };
  struct Message {
    std::string id;
    std::string topic;
    std::string key;
    Json payload;
    SpanId produce_span;
    VectorClock vc;
  };
  struct Task {
    int id = 0;
    std::vector<Activation> stack;
    std::string thread;  // empty for the root thread
    std::string flow_root;
    Timing timing;
    std::int64_t ready_at = 0;
    bool started = false;
    bool done = false;
    std::optional<Response> response;
    RequestInput input;
    std::optional<Message> message;  // consumer tasks
    VectorClock vc;
  };

  int new_task();
  void start(Task& t);
  void run_local(Task& t);
  const Json* position(const Task& t) const;
  bool can_run(const Task& t) const;
  void exec(Task& t, const Json& st);
  std::size_t open_span(const Activation* parent, const std::string& thread, const std::string& flow_root,
                        const RequestInput& req);
  void push_handler(Task& t, const RequestInput& req, std::size_t span, const std::string& into);
  void finish(Task& t, Response resp);
  void tick(Task& t);

  SpanId data_span(Task& t, StoreKind kind, const std::string& store, std::string op_text,
                   std::optional<std::string> lock_id = std::nullopt);
  void effect(Task& t, const SpanId& ds, const std::string& store, const Json& st, const Json& vars, bool write,
              std::optional<std::set<std::string>> columns);
  void log(Task& t, const std::string& level, const std::string& msg);

  void exec_sql(Task& t, const Json& st);
  void exec_kv(Task& t, const Json& st);
  void exec_object(Task& t, const Json& st);
  void exec_produce(Task& t, const Json& st);

  Timestamp ts() const { return kEpochNs + now_ * kTickNs; }

  const Scenario* scenario_;
  StoreMap stores_;
  std::int64_t now_ = 0;
  std::vector<Task> tasks_;
  TraceSet trace_;
  std::vector<Effect> effects_;
  std::vector<Delivery> deliveries_;
  std::vector<LogRecord> logs_;
  std::map<std::string, int> lock_owner_;
  int flows_ = 0;
  int messages_ = 0;
};

struct SimRun {
  TraceSet trace;
  std::vector<Effect> effects;
  std::vector<Delivery> deliveries;
  std::vector<LogRecord> logs;
  Json final_state;
  std::map<std::string, Response> responses;  // workload id -> response
};

// Throws ScenarioDeadlock when tasks block forever.
SimRun run_scenario(const Scenario& s, std::uint64_t seed, const std::string& delays = {});

}  // namespace flowrace::sim
