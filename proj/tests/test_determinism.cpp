#include <gtest/gtest.h>

#include "flowrace/sim/random_scenario.hpp"
#include "support.hpp"

using namespace flowrace;

namespace {

struct Artifacts {
  std::string trace, analysis, results, summary;
};

Artifacts produce(const std::string& id, std::uint64_t seed, const std::string& delays) {
  const auto r = check::full_pipeline(id, true, seed, delays);
  Artifacts a;
  a.trace = write_trace_text(r.run.trace);
  a.analysis = analysis_json(r.analysis).dump(2);
  a.results = results_json(r.analysis.trace_hash, r.tests).dump(2);
  a.summary = r.summary.dump(2) + summary_table(r.summary);
  return a;
}

}  // namespace

TEST(Determinism, SameSeedSameBytes) {
  const std::pair<const char*, const char*> runs[] = {{"S1", ""}, {"S2", "jittered"}, {"S3", ""},
                                                      {"mq-orders", ""}, {"async-fanout", ""}};
  for (const auto& [id, delays] : runs) {
    for (std::uint64_t seed : {0u, 3u}) {
      SCOPED_TRACE(std::string(id) + " seed " + std::to_string(seed));
      const auto x = produce(id, seed, delays);
      const auto y = produce(id, seed, delays);
      EXPECT_EQ(x.trace, y.trace);
      EXPECT_EQ(x.analysis, y.analysis);
      EXPECT_EQ(x.results, y.results);
      EXPECT_EQ(x.summary, y.summary);
    }
  }
}

TEST(Determinism, TraceSurvivesRoundTripWithSameHash) {
  const auto run = sim::run_scenario(sim::load_catalog("S1"), 0);
  const auto text = write_trace_text(run.trace);
  const auto back = parse_trace_text(text);
  EXPECT_EQ(trace_hash(back), trace_hash(run.trace));
  EXPECT_EQ(analysis_json(analyze(back, {})).dump(), analysis_json(analyze(run.trace, {})).dump());
}

TEST(Determinism, ParallelKernelsDoNotChangeReports) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto s = sim::random_scenario(seed);
    const auto run = sim::run_scenario(s, 0);
    const auto fg = analyze_flows(run.trace);
    const auto acc = extract_all(run.trace, PkRules::defaults());
    EXPECT_EQ(acc, extract_all_serial(run.trace, PkRules::defaults()));
    EXPECT_EQ(enumerate_random_pairs(fg, acc), enumerate_random_pairs_serial(fg, acc));
  }
}
