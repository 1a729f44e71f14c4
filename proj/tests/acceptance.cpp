// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any line fails.

#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "flowrace/sim/random_scenario.hpp"
#include "random_graph.hpp"
#include "sql_golden.hpp"
#include "support.hpp"
#include "table1.hpp"

using namespace flowrace;

namespace {

int failures = 0;

void line(const char* name, const std::function<std::string()>& body) {
  std::string why;
  try {
    why = body();
  } catch (const std::exception& e) {
    why = std::string("exception: ") + e.what();
  }
  if (why.empty()) {
    std::printf("PASS %s\n", name);
  } else {
    std::printf("FAIL %s: %s\n", name, why.c_str());
    ++failures;
  }
  std::fflush(stdout);
}

std::string table_identity() {
  for (std::size_t i = 0; i < check::kTableRows.size(); ++i) {
    const auto& r = check::kTableRows[i];
    const PruningReport rep{r.random, r.instance, r.flow, r.early, r.autotest};
    if (!rep.identity_holds()) return "identity, row " + std::to_string(i);
    if (r.tp != r.tp_early + r.tp_tested) return "tp split, row " + std::to_string(i);
    if (r.tp_early != r.early) return "early tp, row " + std::to_string(i);
    if (r.fp + r.tp_tested > r.autotest) return "tested bugs, row " + std::to_string(i);
  }
  return {};
}

std::string full_pipeline() {
  std::ostringstream why;
  for (const char* id : {"S1", "S2", "S3"}) {
    const auto r = check::full_pipeline(id);
    if (!r.summary.at("fn").empty()) why << id << " fn " << r.summary.at("fn").dump() << "; ";
    if (!r.summary.at("fp").empty()) why << id << " fp " << r.summary.at("fp").dump() << "; ";
    if (r.summary.at("aborted").get<bool>()) why << id << " aborted; ";
    if (r.gt.racing.empty()) why << id << " has no racing pair; ";
    if (r.seconds >= 60.0) why << id << " took " << r.seconds << "s; ";
    const auto bare = check::full_pipeline(id, false);
    if (!bare.summary.at("fn").empty()) why << id << " fn without whitelist; ";
    for (const auto& fp : check::false_positives(bare))
      if (!fp.pure_query) why << id << " non-query fp " << fp.a << "/" << fp.b << "; ";
    std::printf("  %s: tp %s, %.2fs\n", id, r.summary.at("tp").at("text").get<std::string>().c_str(), r.seconds);
  }
  return why.str();
}

std::string pruning_property() {
  std::vector<sim::Scenario> all;
  for (const char* id : {"S1", "S2", "S3"}) all.push_back(sim::load_catalog(id));
  for (std::uint64_t seed = 0; seed < 200; ++seed) all.push_back(sim::random_scenario(seed));
  std::size_t random = 0, removed = 0;
  for (const auto& s : all) {
    const auto run = sim::run_scenario(s, 0);
    Config cfg;
    const auto a = check::analyze_run(s, run, &cfg);
    std::vector<CandidatePair> kept;
    if (check::keys(a.stages.pruned_instance) != check::brute_instance_removed(a.stages.raw, cfg.instance_rules, &kept))
      return "instance set differs on " + s.id;
    if (check::keys(a.stages.pruned_flow) != check::brute_flow_removed(kept, a.flows)) return "flow set differs on " + s.id;
    random += a.report.random_pairs;
    removed += a.report.pruned_instance + a.report.pruned_flow;
  }
  std::printf("  reduction %zu of %zu pairs (%.1f%%)\n", removed, random,
              random ? 100.0 * static_cast<double>(removed) / static_cast<double>(random) : 0.0);
  return {};
}

std::string isolation() {
  std::vector<sim::Scenario> all;
  for (const auto& id : sim::catalog()) all.push_back(sim::load_catalog(id));
  for (std::uint64_t seed = 0; seed < 25; ++seed) all.push_back(sim::random_scenario(seed));
  std::size_t pairs = 0;
  for (const auto& s : all) {
    const auto run = sim::run_scenario(s, 0);
    Config cfg;
    const auto a = check::analyze_run(s, run, &cfg);
    sim::SimAdapter ad(s);
    for (const auto& p : a.stages.raw) {
      const auto before = ad.dump_state({}).dump();
      const auto res = replay_pair(p, run.trace, ad, cfg.coupled_stores);
      if (res.baseline_state.dump() != res.restored_state.dump() || ad.dump_state({}).dump() != before)
        return s.id + " " + p.a + "/" + p.b;
      ++pairs;
    }
  }
  std::printf("  %zu pairs replayed\n", pairs);
  return {};
}

std::string sql_golden() {
  if (check::kGolden.size() < 30) return "only " + std::to_string(check::kGolden.size()) + " statements";
  const auto rules = PkRules::defaults();
  for (const auto& g : check::kGolden) {
    const auto why = check::golden_mismatch(g, rules);
    if (!why.empty()) return std::string(g.sql) + ": " + why;
  }
  return {};
}

std::string determinism() {
  for (const auto& [id, delays] : {std::pair{"S1", ""}, std::pair{"S2", "jittered"}, std::pair{"S3", ""}}) {
    for (std::uint64_t seed : {0u, 5u}) {
      const auto x = check::full_pipeline(id, true, seed, delays);
      const auto y = check::full_pipeline(id, true, seed, delays);
      if (write_trace_text(x.run.trace) != write_trace_text(y.run.trace)) return std::string(id) + " trace";
      if (analysis_json(x.analysis).dump() != analysis_json(y.analysis).dump()) return std::string(id) + " analysis";
      if (results_json(x.analysis.trace_hash, x.tests).dump() != results_json(y.analysis.trace_hash, y.tests).dump())
        return std::string(id) + " results";
      if (x.summary.dump() != y.summary.dump() || summary_table(x.summary) != summary_table(y.summary))
        return std::string(id) + " summary";
    }
  }
  return {};
}

std::string hb_property() {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = check::random_graph(rng);
    const auto want = check::warshall(g.adj);
    const CausalOrder order(g.fg);
    const auto n = g.ids.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (order.happened_before(g.ids[i], g.ids[j]) != static_cast<bool>(want[i][j]))
          return "closure, trial " + std::to_string(trial);
        if (i == j && order.happened_before(g.ids[i], g.ids[i])) return "reflexive, trial " + std::to_string(trial);
        if (!order.happened_before(g.ids[i], g.ids[j])) continue;
        if (order.happened_before(g.ids[j], g.ids[i])) return "symmetric, trial " + std::to_string(trial);
        for (std::size_t k = 0; k < n; ++k)
          if (order.happened_before(g.ids[j], g.ids[k]) && !order.happened_before(g.ids[i], g.ids[k]))
            return "not transitive, trial " + std::to_string(trial);
      }
    }
  }
  return {};
}

}  // namespace

int main() {
  line("1 published pruning counts satisfy the accounting identity", table_identity);
  line("2 S1-S3 full pipeline: no FN, no FP with whitelist, FPs without it are pure queries, under 60s", full_pipeline);
  line("3 instance and flow pruning equal brute force on S1-S3 and 200 random scenarios", pruning_property);
  line("4 post-restore state is bit-identical for every pair", isolation);
  line("5 SQL golden suite", sql_golden);
  line("6 same seed and config give byte-identical artifacts", determinism);
  line("7 happened-before matches transitive closure on 1000 random graphs", hb_property);
  return failures ? 1 : 0;
}
