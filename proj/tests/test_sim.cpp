#include <gtest/gtest.h>

#include "flowrace/sim/adapter.hpp"
#include "flowrace/sim/exhaustive.hpp"
#include "flowrace/sim/random_scenario.hpp"

using namespace flowrace;
using namespace flowrace::sim;

namespace {

const Effect& effect_of(const SimRun& run, const std::string& service, bool write) {
  for (const auto& e : run.effects) {
    const auto* r = run.trace.find_request(e.request);
    if (r && r->service == service && e.write == write) return e;
  }
  throw std::runtime_error("no effect for " + service);
}

Json deadlock_doc() {
  return Json::parse(R"({
    "id": "deadlock",
    "stores": [{"name": "kv", "kind": "kv", "endpoint": "redis:6379", "store_name": "0"}],
    "handlers": [
      {"service": "a", "endpoint": "POST /a", "steps": [
        {"op": "lock", "store": "kv", "key": "x"}, {"op": "lock", "store": "kv", "key": "y"},
        {"op": "unlock", "store": "kv", "key": "y"}, {"op": "unlock", "store": "kv", "key": "x"}]},
      {"service": "b", "endpoint": "POST /b", "steps": [
        {"op": "lock", "store": "kv", "key": "y"}, {"op": "lock", "store": "kv", "key": "x"},
        {"op": "unlock", "store": "kv", "key": "x"}, {"op": "unlock", "store": "kv", "key": "y"}]}
    ],
    "workload": [
      {"id": "w1", "service": "a", "method": "POST", "target": "/a"},
      {"id": "w2", "service": "b", "method": "POST", "target": "/b"}
    ],
    "delay_schedules": {"lockstep": {"w1": {"start_at": 0}, "w2": {"start_at": 0}}}
  })");
}

}  // namespace

TEST(Sim, CatalogLoads) {
  const auto ids = catalog();
  for (const char* want : {"S1", "S2", "S3", "async-fanout", "locked-deposit", "mq-orders"})
    EXPECT_NE(std::find(ids.begin(), ids.end(), want), ids.end()) << want;
  for (const auto& id : ids) {
    SCOPED_TRACE(id);
    const auto s = load_catalog(id);
    EXPECT_EQ(s.id, id);
    for (const auto& [name, _] : s.delay_schedules) EXPECT_NO_THROW(run_scenario(s, 0, name));
  }
  EXPECT_THROW(load_catalog("no-such-scenario"), ScenarioError);
}

TEST(Sim, RejectsBadScenarios) {
  auto base = deadlock_doc();
  auto bad = base;
  bad["colour"] = "red";
  EXPECT_THROW(parse_scenario(bad), ScenarioError);
  bad = base;
  bad["handlers"][0]["steps"][0] = {{"op", "select"}, {"store", "kv"}, {"table", "t"}, {"entity", "e"}};
  EXPECT_THROW(parse_scenario(bad), ScenarioError);  // select on a kv store
  bad = base;
  bad["handlers"][0]["steps"][0] = {{"op", "teleport"}};
  EXPECT_THROW(parse_scenario(bad), ScenarioError);
  bad = base;
  bad["handlers"][0]["steps"] = Json::parse(R"([{"op": "fork", "name": "x", "steps": [{"op": "fork", "name": "y"}]}])");
  EXPECT_THROW(parse_scenario(bad), ScenarioError);
  bad = base;
  bad["workload"][0]["target"] = "/nowhere";
  EXPECT_THROW(parse_scenario(bad), ScenarioError);
  bad = base;
  bad["delay_schedules"]["lockstep"]["w1"]["step_delay"] = 0;
  EXPECT_THROW(parse_scenario(bad), ScenarioError);
  EXPECT_THROW(run_scenario(parse_scenario(base), 0, "nope"), ScenarioError);
}

TEST(Sim, DeadlockIsReported) {
  const auto s = parse_scenario(deadlock_doc());
  try {
    run_scenario(s, 0);
    FAIL() << "expected a deadlock";
  } catch (const ScenarioDeadlock& e) {
    EXPECT_NE(e.wait_graph.find("x"), std::string::npos);
    EXPECT_NE(e.wait_graph.find("y"), std::string::npos);
  }
}

TEST(Sim, SameSeedSameTrace) {
  for (const auto& id : catalog()) {
    const auto s = load_catalog(id);
    for (std::uint64_t seed : {0u, 7u}) {
      const auto x = run_scenario(s, seed);
      const auto y = run_scenario(s, seed);
      EXPECT_EQ(write_trace_text(x.trace), write_trace_text(y.trace)) << id;
      EXPECT_EQ(x.final_state, y.final_state) << id;
    }
  }
}

TEST(Sim, JitterDependsOnSeed) {
  const auto s = load_catalog("S2");
  std::set<std::string> traces;
  for (std::uint64_t seed = 0; seed < 8; ++seed) traces.insert(write_trace_text(run_scenario(s, seed, "jittered").trace));
  EXPECT_GT(traces.size(), 1u);
}

TEST(Sim, VectorClocks) {
  EXPECT_TRUE(vc_leq({1, 0}, {1, 2}));
  EXPECT_FALSE(vc_leq({2, 0}, {1, 2}));
  EXPECT_TRUE(vc_concurrent({1, 0}, {0, 1}));
  EXPECT_FALSE(vc_concurrent({1, 0}, {1, 1}));
  EXPECT_FALSE(vc_concurrent({1, 1}, {1, 1}));
  EXPECT_TRUE(vc_leq({1}, {1, 0, 3}));  // missing entries are zero
}

TEST(Sim, ForkAndJoinClocks) {
  const auto run = run_scenario(load_catalog("async-fanout"), 0);
  const auto& notify = effect_of(run, "notify-svc", false);
  const auto& reserve = effect_of(run, "inventory-svc", true);
  const auto& order = effect_of(run, "order-svc", true);
  const auto& lock = effect_of(run, "cart-svc", true);
  EXPECT_TRUE(vc_concurrent(notify.vc, reserve.vc));
  EXPECT_TRUE(vc_leq(notify.vc, order.vc));
  EXPECT_TRUE(vc_leq(lock.vc, notify.vc));
  EXPECT_TRUE(effects_conflict(notify, reserve));
  EXPECT_FALSE(effects_conflict(lock, order));
  const auto* nspan = run.trace.find_request(notify.request);
  ASSERT_TRUE(nspan->thread_tag);
  EXPECT_EQ(*nspan->thread_tag, "notify");
}

TEST(Sim, QueueDelivery) {
  const auto run = run_scenario(load_catalog("mq-orders"), 0);
  ASSERT_FALSE(run.deliveries.empty());
  for (const auto& d : run.deliveries) {
    const auto* produce = run.trace.find_data(d.produce_span);
    const auto* consume = run.trace.find_request(d.consume_span);
    ASSERT_TRUE(produce && consume);
    EXPECT_EQ(consume->protocol, Protocol::mq_consume);
    EXPECT_EQ(consume->target, d.topic);
    EXPECT_LE(produce->start_ts, consume->start_ts);
    EXPECT_NE(consume->flow_id.root, run.trace.find_request(produce->parent_request)->flow_id.root);
  }
  const auto fg = analyze_flows(run.trace);
  std::size_t mq = 0;
  for (const auto& e : fg.sync_edges) mq += e.kind == SyncKind::mq_happens_before;
  EXPECT_EQ(mq, run.deliveries.size());
}

TEST(Sim, ReservePairHasSixSchedules) {
  const auto s = load_catalog("S3");
  RequestInput r;
  r.service = "seat-svc";
  r.method = "POST";
  r.target = "/seats/A1/reserve";
  // select then update: C(4, 2) interleavings of two two-step requests
  const auto ex = explore_pair(s, r, r);
  EXPECT_EQ(ex.schedules, 6u);
  EXPECT_GE(ex.outcomes.size(), 2u);
  EXPECT_THROW(explore_pair(s, r, r, 3), BoundExceeded);
}

TEST(Sim, LockSerializesDeposits) {
  const auto s = load_catalog("locked-deposit");
  const auto ex = explore_pair(s, input_of(s.workload[0]), input_of(s.workload[1]));
  EXPECT_GE(ex.schedules, 2u);
  EXPECT_EQ(ex.outcomes.size(), 1u);  // balance ends at 180 either way
}

TEST(Sim, GroundTruthMatchesDeclaredPatterns) {
  for (const auto& id : catalog()) {
    SCOPED_TRACE(id);
    const auto s = load_catalog(id);
    const auto run = run_scenario(s, 0);
    const auto gt = exhaustive_schedules(s, run);
    EXPECT_TRUE(unmatched_patterns(s, run, gt).empty());
    for (const auto& r : gt.racing) {
      EXPECT_TRUE(gt.is_racing(r.a, r.b));
      EXPECT_TRUE(gt.is_racing(r.b, r.a));
      EXPECT_GT(r.outcomes, 1u);
    }
  }
}

TEST(SimAdapter, SnapshotRestoreAndLogs) {
  const auto s = load_catalog("S3");
  SimAdapter ad(s);
  const auto before = ad.dump_state({}).dump();
  const auto snap = ad.snapshot({});
  const auto mark = ad.log_marker();
  RequestSpec req{"x", "preserve-svc", Protocol::http, "POST", "/preserve", {},
                  R"({"ticket":"T-9","seat":"A1","passenger":"p"})"};
  const auto resp = ad.send(req);
  EXPECT_EQ(std::get<std::int64_t>(resp.status), 200);
  EXPECT_NE(ad.dump_state({}).dump(), before);
  const auto logs = ad.collect_logs(mark);
  ASSERT_TRUE(logs.count("preserve-svc"));
  EXPECT_NE(logs.at("preserve-svc")[0].find("T-9"), std::string::npos);
  ad.restore(snap);
  EXPECT_EQ(ad.dump_state({}).dump(), before);
  EXPECT_TRUE(ad.collect_logs(ad.log_marker()).empty());
  EXPECT_THROW(ad.restore("snap-missing"), AdapterDead);
  req.target = "/nowhere";
  EXPECT_THROW(ad.send(req), ReplayError);
  EXPECT_GE(ad.sends(), 1u);
}

TEST(SimAdapter, ScopedDump) {
  const auto s = load_catalog("S1");
  SimAdapter ad(s);
  const auto all = ad.dump_state({});
  const StoreInstance replica{"order-mysql-replica:3306", "orderdb"};
  const auto part = ad.dump_state({replica});
  EXPECT_EQ(part.size(), 1u);
  EXPECT_TRUE(part.contains(replica.endpoint));
  EXPECT_GT(all.size(), part.size());
}

TEST(RandomScenario, StaysWithinBudget) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = random_scenario(seed);
    const auto run = run_scenario(s, 0);
    EXPECT_LE(run.trace.request_spans.size(), 8u) << seed;
    EXPECT_EQ(random_scenario_json(seed), random_scenario_json(seed));
  }
}
