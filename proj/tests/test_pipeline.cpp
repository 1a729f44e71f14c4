#include <gtest/gtest.h>

#include "support.hpp"

using namespace flowrace;

TEST(PipelineJson, JobsSurviveTheAnalysisDocument) {
  for (const char* id : {"S1", "S2", "S3", "async-fanout"}) {
    SCOPED_TRACE(id);
    const auto s = sim::load_catalog(id);
    const auto run = sim::run_scenario(s, 0);
    const auto a = check::analyze_run(s, run);
    const auto doc = Json::parse(analysis_json(a).dump());
    const auto jobs = jobs_from_json(doc);
    ASSERT_EQ(jobs.size(), a.jobs.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      EXPECT_EQ(jobs[i].pair.a, a.jobs[i].pair.a);
      EXPECT_EQ(jobs[i].pair.b, a.jobs[i].pair.b);
      EXPECT_EQ(jobs[i].a, a.jobs[i].a);
      EXPECT_EQ(jobs[i].b, a.jobs[i].b);
      EXPECT_EQ(jobs[i].scope, a.jobs[i].scope);
      EXPECT_EQ(jobs[i].unreplayable, a.jobs[i].unreplayable);
    }
    const auto& c = doc.at("counts");
    EXPECT_EQ(c.at("random_pairs").get<std::size_t>(), a.report.random_pairs);
    EXPECT_EQ(c.at("needs_test").get<std::size_t>(), a.report.needs_test);
    EXPECT_EQ(doc.at("trace_hash"), trace_hash(run.trace));
  }
}

TEST(PipelineJson, SpecAndScopeRoundTrip) {
  const RequestSpec r{"s1", "svc", Protocol::mq_consume, "CONSUME", "orders", {{"message-id", "m1"}}, "{\"a\":1}"};
  EXPECT_EQ(request_spec_from_json(to_json(r)), r);
  const StoreScope scope{{"a:1", "x"}, {"b:2", ""}};
  EXPECT_EQ(scope_from_json(to_json(scope)), scope);
}

TEST(PipelineJson, UnreplayableRequestsAreSkipped) {
  const auto s = sim::load_catalog("S3");
  auto run = sim::run_scenario(s, 0);
  for (auto& r : run.trace.request_spans) r.request_body.reset();
  const auto a = analyze(run.trace, parse_config(s.config));
  ASSERT_FALSE(a.jobs.empty());
  const auto jobs = jobs_from_json(analysis_json(a));
  for (const auto& j : jobs) EXPECT_FALSE(j.unreplayable.empty());
  sim::SimAdapter ad(s);
  const auto t = run_tests(jobs, ad, {});
  EXPECT_TRUE(t.verdicts.empty());
  EXPECT_EQ(t.campaign.skipped.size(), jobs.size());
  EXPECT_EQ(ad.sends(), 0u);
}

TEST(PipelineJson, SummaryRejectsForeignDocuments) {
  const auto r = check::full_pipeline("S3");
  const auto adoc = analysis_json(r.analysis);
  auto res = results_json(r.analysis.trace_hash, r.tests);
  EXPECT_NO_THROW(summarize(adoc, res));
  res["trace_hash"] = "0000";
  EXPECT_THROW(summarize(adoc, res), InputMismatch);
  res = results_json(r.analysis.trace_hash, r.tests);
  Json gt = {{"trace_hash", "ffff"}, {"racing", Json::array()}};
  EXPECT_THROW(summarize(adoc, res, &gt), InputMismatch);
}

TEST(PipelineJson, SummaryTable) {
  const auto r = check::full_pipeline("S3");
  EXPECT_EQ(r.summary.at("tp").at("text"), "2 (1+1)");
  const auto table = summary_table(r.summary);
  for (const char* col : {"Random", "Instance", "Flow", "Early", "Auto test", "FP", "TP", "FN"})
    EXPECT_NE(table.find(col), std::string::npos) << col;
  EXPECT_NE(table.find("2 (1+1)"), std::string::npos);
}

TEST(PipelineJson, VerdictDocument) {
  const auto r = check::full_pipeline("S1");
  const auto res = results_json(r.analysis.trace_hash, r.tests);
  std::size_t bugs = 0;
  for (const auto& v : res.at("verdicts")) {
    bugs += v.at("is_bug").get<bool>();
    EXPECT_TRUE(v.contains("levels"));
  }
  EXPECT_EQ(bugs, r.summary.at("bugs").at("tested").get<std::size_t>());
  const auto flows = to_json(r.analysis.flows);
  EXPECT_EQ(flows.at("flows").size(), r.analysis.flows.flows.size());
}
