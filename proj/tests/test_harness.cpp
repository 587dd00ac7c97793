#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "validus/harness.hpp"

using namespace validus;

namespace {

Scenario universal_strong_scenario() {
  Scenario sc;
  sc.n = 4;
  sc.t = 1;
  sc.seed = 3;
  sc.property = ValidityProperty::strong();
  sc.proposals = {1, 1, 1, 1};
  sc.protocol = "universal+auth";
  sc.max_ticks = 10'000;
  return sc;
}

}  // namespace

TEST_CASE("harness: scenario json round-trips byte-identically") {
  auto sc = universal_strong_scenario();
  sc.adversary = "silent@2";
  std::string text = scenario_to_json(sc);
  Scenario back = scenario_from_json(text);
  CHECK(scenario_to_json(back) == text);
  CHECK(back.n == 4);
  CHECK(back.property.has_value());
  CHECK(back.property->kind == PropertyKind::strong);
  CHECK(back.proposals == std::vector<Value>{1, 1, 1, 1});
  CHECK(back.faulty_set() == std::vector<Proc>{2});

  sc.property = ValidityProperty::constant(1);
  text = scenario_to_json(sc);
  back = scenario_from_json(text);
  CHECK(scenario_to_json(back) == text);
  CHECK(back.property->constant_value == 1);
}

TEST_CASE("harness: table property round-trips through json") {
  std::map<std::vector<std::pair<Proc, Value>>, std::set<Value>> entries;
  SystemParams sys{3, 1};
  ValueSpace space{{"0", "1"}, {"0", "1"}};
  for_each_config(sys, space, 2, 3, kDefaultBudget, [&](const InputConfiguration& c) {
    entries[c.key()] = {0, 1};
    return true;
  });
  auto val = ValidityProperty::from_table(entries);

  ValueSpace parsed_space;
  std::string text = property_to_json_text(val, space);
  auto back = property_from_json_text(text, parsed_space);
  CHECK(back.kind == PropertyKind::table);
  CHECK(back.table == val.table);
  CHECK(parsed_space.inputs == space.inputs);
  CHECK(property_to_json_text(back, parsed_space) == text);
}

TEST_CASE("harness: malformed scenarios are rejected") {
  auto sc = universal_strong_scenario();
  std::string good = scenario_to_json(sc);

  CHECK_THROWS_AS((void)scenario_from_json("{not json"), std::invalid_argument);
  std::string wrong_schema = good;
  wrong_schema.replace(wrong_schema.find("validus-scenario-1"), 18, "validus-scenario-9");
  CHECK_THROWS_AS((void)scenario_from_json(wrong_schema), std::invalid_argument);
  std::string extra = good;
  extra.insert(extra.rfind('}') - 1, ",\n  \"surprise\": 1");
  CHECK_THROWS_AS((void)scenario_from_json(extra), std::invalid_argument);
  CHECK_THROWS_AS((void)load_scenario("/nonexistent/scenario.json"), std::invalid_argument);

  Scenario bad = sc;
  bad.protocol = "paxos";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.proposals = {1, 1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.proposals = {1, 1, 1, 7};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.adversary = "gremlins";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.adversary = "silent@2,5";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.property.reset();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("harness: adversary faulty-set defaults") {
  Scenario sc = universal_strong_scenario();
  CHECK(sc.faulty_set().empty());
  sc.adversary = "silent";
  CHECK(sc.faulty_set() == std::vector<Proc>{4});
  sc.adversary = "crash:5@1";
  CHECK(sc.faulty_set() == std::vector<Proc>{1});
  CHECK(sc.adversary_spec().kind == AdversarySpec::crash);
  CHECK(sc.adversary_spec().crash_time == 5);
  sc.n = 10;
  sc.t = 3;
  sc.proposals.assign(10, 1);
  sc.adversary = "lower_bound";
  CHECK(sc.faulty_set() == std::vector<Proc>{9, 10});
}

TEST_CASE("harness: universal scenario runs and judges all-pass") {
  auto r = run_scenario(universal_strong_scenario());
  CHECK(r.verdict.all_pass());
  CHECK(r.verdict.canonical_similarity.has_value());
  REQUIRE(r.metrics.latency.has_value());
  CHECK(*r.metrics.latency == 9);
  for (auto& [p, d] : r.trace.decisions) CHECK(d.second.value == 1);
}

TEST_CASE("harness: raw back ends and plumbing protocols judge sensibly") {
  Scenario sc;
  sc.n = 4;
  sc.t = 1;
  sc.seed = 9;
  sc.proposals = {0, 1, 1, 0};
  sc.max_ticks = 10'000;

  for (const char* name : {"auth", "nonauth", "lowcomm"}) {
    sc.protocol = name;
    sc.adversary = "silent";
    auto r = run_scenario(sc);
    CHECK(r.verdict.all_pass());
    CHECK(r.verdict.notes.empty());
  }
  for (const char* name : {"echo", "slow", "brb", "binary", "binary_sig", "core"}) {
    sc.protocol = name;
    sc.adversary = "none";
    sc.proposals = {1, 1, 1, 1};
    auto r = run_scenario(sc);
    CHECK(r.verdict.all_pass());
  }
  sc.protocol = "dissemination";
  sc.adversary = "silent";
  auto r = run_scenario(sc);
  CHECK(r.verdict.all_pass());
  CHECK(r.verdict.notes.find("not applicable") != std::string::npos);
}

TEST_CASE("harness: trace file round-trips and revalidates") {
  auto sc = universal_strong_scenario();
  sc.adversary = "silent";
  auto r = run_scenario(sc);

  std::string text = trace_to_jsonl(sc, r.trace);
  CHECK(text.substr(0, 30).find(kTraceSchema) != std::string::npos);

  Scenario sc2;
  Trace back = trace_from_jsonl(text, &sc2);
  CHECK(scenario_to_json(sc2) == scenario_to_json(sc));
  CHECK(validate_trace(back).empty());
  CHECK(back.decisions.size() == r.trace.decisions.size());
  for (auto& [p, d] : r.trace.decisions) {
    REQUIRE(back.decisions.count(p));
    CHECK(back.decisions.at(p) == d);
  }

  auto m = count_metrics(back);
  CHECK(m.msgs_after_gst == r.metrics.msgs_after_gst);
  CHECK(m.words_after_gst == r.metrics.words_after_gst);
  CHECK(m.latency == r.metrics.latency);
  auto v = judge(sc2, back);
  CHECK(v.all_pass() == r.verdict.all_pass());

  CHECK(trace_to_jsonl(sc2, back) == text);  // second serialization is identical

  std::string wrong = text;
  wrong.replace(wrong.find("validus-trace-1"), 15, "validus-trace-9");
  CHECK_THROWS_AS((void)trace_from_jsonl(wrong, nullptr), std::invalid_argument);
}

TEST_CASE("harness: metrics csv round-trips including quoted adversaries") {
  BenchRow a{4, 1, "auth", "silent@2,4", 7, 44, 132, 9, true};
  BenchRow b{8, 2, "universal+lowcomm", "none", 1, 0, 0, -1, true};
  std::string text = metrics_csv({a, b});
  CHECK(text.rfind("# validus-metrics-1\n", 0) == 0);
  CHECK(text.find("\"silent@2,4\"") != std::string::npos);

  auto rows = metrics_from_csv(text);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].adversary == "silent@2,4");
  CHECK(rows[0].msgs_after_gst == 44);
  CHECK(rows[1].latency == -1);
  CHECK(metrics_csv(rows) == text);

  CHECK_THROWS_AS((void)metrics_from_csv("# validus-metrics-9\nx\n"), std::invalid_argument);
}

TEST_CASE("harness: lambda csv lists every size-(n-t) configuration") {
  SystemParams sys{4, 1};
  ValueSpace space{{"0", "1"}, {"0", "1"}};
  auto lam = universal_lambda(ValidityProperty::strong(), sys, space);
  std::string text = lambda_csv(*lam, space);
  CHECK(text.rfind("# validus-lambda-1\nconfig_id,config,lambda_value\n", 0) == 0);
  size_t rows = 0;
  for (char c : text) rows += c == '\n';
  CHECK(rows == 2 + 32);  // C(4,3) * 2^3 configurations
  CHECK(text.find("P1:1;P2:1;P3:1,1") != std::string::npos);
}

TEST_CASE("harness: parallel sweep matches the serial reference") {
  std::vector<Scenario> sweep;
  for (uint64_t seed = 0; seed < 12; ++seed) {
    Scenario sc;
    sc.n = 4;
    sc.t = 1;
    sc.seed = seed;
    sc.proposals = {0, 1, 0, 1};
    sc.protocol = (seed % 2) ? "auth" : "universal+auth";
    if (sc.protocol == "universal+auth") sc.property = ValidityProperty::correct_proposal();
    sc.adversary = (seed % 3) ? "silent" : "none";
    sc.schedule = (seed % 3) ? "random" : "immediate";
    sc.gst = (seed % 3) ? 5 : 0;
    sc.max_ticks = 10'000;
    sweep.push_back(std::move(sc));
  }
  auto serial = run_sweep(sweep, false);
  auto parallel = run_sweep(sweep, true);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].msgs_after_gst == parallel[i].msgs_after_gst);
    CHECK(serial[i].words_after_gst == parallel[i].words_after_gst);
    CHECK(serial[i].latency == parallel[i].latency);
    CHECK(serial[i].all_pass);
    CHECK(parallel[i].all_pass);
  }
  CHECK(metrics_csv(serial) == metrics_csv(parallel));
}

TEST_CASE("harness: bench sweep doubles quadratically on the auth back end") {
  auto rows = run_sweep(bench_scenarios("auth", {4, 8}, 1), true);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].all_pass);
  CHECK(rows[1].all_pass);
  auto ratios = doubling_ratios(rows);
  REQUIRE(ratios.size() == 1);
  CHECK(ratios[0] >= 3.0);
  CHECK(ratios[0] <= 5.0);
}

TEST_CASE("harness: budget env override") {
  CHECK(effective_budget() == kDefaultBudget);
  setenv("VALIDUS_BUDGET", "123", 1);
  CHECK(effective_budget() == 123);
  setenv("VALIDUS_BUDGET", "zero", 1);
  CHECK_THROWS_AS((void)effective_budget(), std::invalid_argument);
  unsetenv("VALIDUS_BUDGET");
  CHECK(effective_budget() == kDefaultBudget);
}
