#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

#include "flowrace/pipeline.hpp"
#include "flowrace/sim/adapter.hpp"
#include "flowrace/sim/exhaustive.hpp"

using namespace flowrace;

namespace {

enum Exit { kOk = 0, kBugs = 1, kInput = 2, kRuntime = 3 };

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  auto j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw InputError(path + " is not valid JSON");
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

TraceSet read_traces(const std::vector<std::string>& paths) {
  TraceSet all;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw InputError("cannot open " + p);
    auto ts = parse_trace_file(in);
    all.request_spans.insert(all.request_spans.end(), ts.request_spans.begin(), ts.request_spans.end());
    all.data_spans.insert(all.data_spans.end(), ts.data_spans.begin(), ts.data_spans.end());
    if (paths.size() == 1) all.source_meta = ts.source_meta;
  }
  return all;
}

Config read_config(const std::string& path) { return path.empty() ? Config{} : load_config(path); }

int cmd_simulate(const std::string& scenario, std::uint64_t seed, const std::string& delays, const std::string& out,
                 const std::string& gt_path, const std::string& config_out) {
  const auto s = sim::load_catalog(scenario);
  const auto run = sim::run_scenario(s, seed, delays);
  write_text(out, write_trace_text(run.trace));
  spdlog::info("{}: {} request spans, {} data spans", s.id, run.trace.request_spans.size(), run.trace.data_spans.size());
  if (!config_out.empty()) write_json(config_out, to_json(parse_config(s.config)));
  if (!gt_path.empty()) {
    const auto gt = sim::exhaustive_schedules(s, run);
    auto doc = sim::to_json(gt, run.trace);
    doc["trace_hash"] = trace_hash(run.trace);
    doc["scenario"] = s.id;
    write_json(gt_path, doc);
    spdlog::info("ground truth: {} of {} candidate pairs race", gt.racing.size(), gt.universe.size());
    for (const auto& p : sim::unmatched_patterns(s, run, gt))
      spdlog::warn("declared race {} / {} did not show up in exhaustive search", p.a, p.b);
  }
  return kOk;
}

int cmd_analyze(const std::vector<std::string>& traces, const std::string& config, const std::string& out,
                const std::string& flows_out) {
  const auto ts = read_traces(traces);
  for (const auto& d : validate_trace(ts))
    spdlog::warn("{} {}: {}", to_string(d.kind), d.span_id, d.detail);
  const auto cfg = read_config(config);
  const auto a = analyze(ts, cfg);
  for (const auto& d : a.flows.diagnostics) spdlog::warn("{}", d);
  write_json(out, analysis_json(a));
  if (!flows_out.empty()) write_json(flows_out, to_json(a.flows));
  const auto& r = a.report;
  spdlog::info("random {} instance -{} flow -{} early {} test {}", r.random_pairs, r.pruned_instance, r.pruned_flow,
               r.early_confirmed, r.needs_test);
  return kOk;
}

int cmd_test(const std::string& pairs, const std::string& target, const std::string& config,
             std::optional<std::size_t> max_pairs, std::optional<double> max_seconds, const std::string& out) {
  const auto analysis = read_json(pairs);
  auto cfg = read_config(config);
  if (max_pairs) cfg.budgets.max_pairs = max_pairs;
  if (max_seconds) cfg.budgets.max_seconds = max_seconds;
  if (target.rfind("sim:", 0) != 0) throw InputError("unsupported target '" + target + "' (expected sim:<scenario>)");
  sim::SimAdapter adapter(sim::load_catalog(target.substr(4)));

  const auto run = run_tests(jobs_from_json(analysis), adapter, cfg);
  write_json(out, results_json(analysis.at("trace_hash").get<std::string>(), run));
  std::size_t bugs = 0;
  for (const auto& v : run.verdicts) {
    if (!v.is_bug) continue;
    ++bugs;
    spdlog::warn("bug: {} <-> {}", v.pair.a, v.pair.b);
  }
  for (const auto& s : run.campaign.skipped) spdlog::info("skipped {} <-> {}: {}", s.pair.a, s.pair.b, s.reason);
  if (run.campaign.aborted) {
    spdlog::error("campaign aborted: {}", run.campaign.abort_reason);
    return kRuntime;
  }
  spdlog::info("{} pair(s) tested, {} bug(s)", run.verdicts.size(), bugs);
  return bugs > 0 ? kBugs : kOk;
}

int cmd_report(const std::string& analysis, const std::string& results, const std::string& gt, const std::string& out) {
  const auto a = read_json(analysis);
  const auto r = read_json(results);
  Json g;
  if (!gt.empty()) g = read_json(gt);
  const auto s = summarize(a, r, gt.empty() ? nullptr : &g);
  std::cout << summary_table(s);
  if (!out.empty()) write_json(out, s);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowrace: request-pair concurrency bug detection for microservice traces"};
  app.require_subcommand(1);
  bool verbose = false;
  std::string log_level = "info";
  app.add_flag("-v,--verbose", verbose, "Same as --log-level debug");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* simulate = app.add_subcommand("simulate", "Run a scenario in the simulator and write its trace");
  std::string scenario, delays, sim_out, gt_out, config_out;
  std::uint64_t seed = 0;
  simulate->add_option("--scenario", scenario, "Catalog id or scenario file")->required();
  simulate->add_option("--seed", seed, "Jitter seed");
  simulate->add_option("--delays", delays, "Delay schedule name");
  simulate->add_option("--out", sim_out, "Trace file ('-' for stdout)")->required();
  simulate->add_option("--ground-truth", gt_out, "Also write exhaustive ground truth here");
  simulate->add_option("--emit-config", config_out, "Write the scenario's suggested detector config");

  auto* analyze = app.add_subcommand("analyze", "Build flows, extract entities and find candidate pairs");
  std::vector<std::string> traces;
  std::string config, analyze_out, flows_out;
  analyze->add_option("traces", traces, "Trace files")->required()->check(CLI::ExistingFile);
  analyze->add_option("--config", config, "Detector config (JSON)")->check(CLI::ExistingFile);
  analyze->add_option("--out", analyze_out, "Analysis report")->required();
  analyze->add_option("--emit-flows", flows_out, "Write the flow graph here");

  auto* test = app.add_subcommand("test", "Replay pairs in both orders and judge them");
  std::string pairs, target, test_config, test_out;
  std::optional<std::size_t> budget_pairs;
  std::optional<double> budget_seconds;
  test->add_option("--pairs", pairs, "Analysis report")->required()->check(CLI::ExistingFile);
  test->add_option("--target", target, "Replay target, sim:<scenario>")->required();
  test->add_option("--config", test_config, "Detector config (JSON)")->check(CLI::ExistingFile);
  test->add_option("--budget-pairs", budget_pairs, "Stop after this many pairs");
  test->add_option("--budget-seconds", budget_seconds, "Stop starting pairs after this long");
  test->add_option("--out", test_out, "Results file")->required();

  auto* report = app.add_subcommand("report", "Summarize analysis and test results");
  std::string rep_analysis, rep_results, rep_gt, rep_out;
  report->add_option("--analyze", rep_analysis, "Analysis report")->required()->check(CLI::ExistingFile);
  report->add_option("--results", rep_results, "Test results")->required()->check(CLI::ExistingFile);
  report->add_option("--ground-truth", rep_gt, "Ground truth from simulate")->check(CLI::ExistingFile);
  report->add_option("--out", rep_out, "Summary JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::from_str(log_level));

  try {
    if (*simulate) return cmd_simulate(scenario, seed, delays, sim_out, gt_out, config_out);
    if (*analyze) return cmd_analyze(traces, config, analyze_out, flows_out);
    if (*test) return cmd_test(pairs, target, test_config, budget_pairs, budget_seconds, test_out);
    if (*report) return cmd_report(rep_analysis, rep_results, rep_gt, rep_out);
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kInput;
  } catch (const InputMismatch& e) {
    spdlog::error("{}", e.what());
    return kInput;
  } catch (const TraceError& e) {
    spdlog::error("bad trace: {}", e.what());
    return kInput;
  } catch (const ConfigError& e) {
    spdlog::error("bad config: {}", e.what());
    return kInput;
  } catch (const Json::exception& e) {
    spdlog::error("malformed input: {}", e.what());
    return kInput;
  } catch (const sim::ScenarioDeadlock& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  } catch (const sim::BoundExceeded& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  } catch (const sim::ScenarioError& e) {
    spdlog::error("scenario: {}", e.what());
    return kInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  }
  return kOk;
}
