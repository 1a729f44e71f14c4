#include <gtest/gtest.h>

#include "flowrace/sim/random_scenario.hpp"
#include "support.hpp"

using namespace flowrace;

namespace {

struct Tally {
  std::size_t random = 0, instance = 0, flow = 0;
};

void check_scenario(const sim::Scenario& s, Tally& t) {
  const auto run = sim::run_scenario(s, 0);
  Config cfg;
  const auto a = check::analyze_run(s, run, &cfg);

  std::vector<CandidatePair> kept;
  EXPECT_EQ(check::keys(a.stages.pruned_instance), check::brute_instance_removed(a.stages.raw, cfg.instance_rules, &kept));
  EXPECT_EQ(check::keys(a.stages.pruned_flow), check::brute_flow_removed(kept, a.flows));

  // what survives both prunings is exactly what goes on to the later stages
  auto rest = check::keys(a.stages.early_confirmed);
  const auto tested = check::keys(a.stages.needs_test);
  rest.insert(tested.begin(), tested.end());
  std::set<check::Key> want;
  const auto flow_removed = check::keys(a.stages.pruned_flow);
  for (const auto& p : kept)
    if (!flow_removed.count({p.a, p.b})) want.emplace(p.a, p.b);
  EXPECT_EQ(rest, want);

  t.random += a.report.random_pairs;
  t.instance += a.report.pruned_instance;
  t.flow += a.report.pruned_flow;
}

void report(const char* label, const Tally& t) {
  const double rate = t.random ? 100.0 * static_cast<double>(t.instance + t.flow) / static_cast<double>(t.random) : 0;
  std::printf("[%s] random %zu instance -%zu flow -%zu reduction %.1f%%\n", label, t.random, t.instance, t.flow, rate);
}

}  // namespace

TEST(PruningProperty, CatalogScenarios) {
  Tally t;
  for (const char* id : {"S1", "S2", "S3"}) {
    SCOPED_TRACE(id);
    check_scenario(sim::load_catalog(id), t);
  }
  report("S1-S3", t);
}

TEST(PruningProperty, RandomScenarios) {
  Tally t;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SCOPED_TRACE(seed);
    check_scenario(sim::random_scenario(seed), t);
  }
  report("random x200", t);
  // the generator has to exercise both prunings for the comparison to mean anything
  EXPECT_GT(t.instance, 0u);
  EXPECT_GT(t.flow, 0u);
}
