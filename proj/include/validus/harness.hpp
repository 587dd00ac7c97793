#pragma once

// Scenario files, trace / metrics / lambda emission, the protocol factory,
// and the sweep driver: everything the CLI and the experiment tests need to
// go from a JSON description to a judged run.
//
// File formats (all versioned; a version mismatch is a hard error):
//   scenario  JSON        validus-scenario-1
//   trace     JSON lines  validus-trace-1 (header line embeds the scenario)
//   metrics   CSV         validus-metrics-1
//   lambda    CSV         validus-lambda-1
// Values travel as integers (indices into the property's value space); the
// space itself lives in the property object as label lists.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "validus/simnet.hpp"
#include "validus/universal.hpp"

namespace validus {

inline constexpr char kScenarioSchema[] = "validus-scenario-1";
inline constexpr char kTraceSchema[] = "validus-trace-1";
inline constexpr char kMetricsSchema[] = "validus-metrics-1";
inline constexpr char kLambdaSchema[] = "validus-lambda-1";

// Enumeration cap: VALIDUS_BUDGET from the environment, else kDefaultBudget.
uint64_t effective_budget();

// A complete run description. `adversary` is the AdversarySpec text plus an
// optional "@i,j,..." suffix naming the faulty processes; without the suffix
// the last t processes are faulty (the last ceil(t/2) for lower_bound, none
// for "none").
struct Scenario {
  int32_t n = 0;
  int32_t t = 0;
  Tick gst = 0;
  Tick delta = 1;
  uint64_t seed = 0;
  std::optional<ValidityProperty> property;
  ValueSpace space{{"0", "1"}, {"0", "1"}};
  std::vector<Value> proposals;  // one per process, index order
  std::string protocol = "echo";
  std::string adversary = "none";
  std::string schedule = "immediate";
  Tick max_ticks = 100'000;
  CryptoMode crypto_mode = CryptoMode::fast;

  SystemParams sys() const { return {n, t}; }
  AdversarySpec adversary_spec() const;  // suffix stripped
  std::vector<Proc> faulty_set() const;
  InputConfiguration correct_config() const;  // correct processes' proposals
  void validate() const;                      // throws std::invalid_argument
};

// Parsing throws std::invalid_argument on malformed input (including a schema
// version mismatch). Serialization is canonical: parse(serialize(sc)) and
// serialize(parse(text)) round-trip byte-identically for canonical text.
Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& sc);
Scenario load_scenario(const std::string& path);

// Property object shared by scenario files and --property-file: { kind,
// constant?, lo?, hi?, table?, values?, outputs? }. `space` is updated when
// the object carries value labels.
ValidityProperty property_from_json_text(const std::string& text, ValueSpace& space);
std::string property_to_json_text(const ValidityProperty& val, const ValueSpace& space);

// Protocol names: echo, slow, brb, binary, binary_sig, core, auth, nonauth,
// lowcomm, dissemination, universal, universal+auth, universal+nonauth,
// universal+lowcomm (bare "universal" means the auth back end).
bool known_protocol(const std::string& name);
bool protocol_needs_lambda(const std::string& name);

// Builds the per-process automaton factory. `lambda` is required exactly for
// the universal protocols and is shared by all processes.
std::function<std::unique_ptr<Automaton>(Proc)> make_protocol(
    const Scenario& sc, std::shared_ptr<const LambdaTable> lambda);

struct RunResult {
  Trace trace;
  MetricsReport metrics;
  Verdict verdict;
};

// Scenario -> spec -> run -> judge. Throws LambdaUndefined when a universal
// protocol's property has no lambda at (n, t).
RunSpec make_run_spec(const Scenario& sc, std::shared_ptr<const LambdaTable> lambda);
RunResult run_scenario(const Scenario& sc);

// Protocol-appropriate verdict: universal judges against the property
// (canonical similarity added for none/silent adversaries), the raw back
// ends judge Vector Validity, binary protocols judge strong validity,
// plumbing protocols (echo, slow, brb, core, dissemination) judge structure
// only with validity marked not applicable in the notes.
Verdict judge(const Scenario& sc, const Trace& trace);

// Trace files: header line with the schema tag, the embedded scenario and
// the run summary, then one event line per trace line. Probes are never
// serialized. The reader rebuilds a Trace sufficient for validate_trace,
// count_metrics and judge.
std::string trace_to_jsonl(const Scenario& sc, const Trace& trace);
Trace trace_from_jsonl(const std::string& text, Scenario* scenario_out);

struct BenchRow {
  int32_t n = 0;
  int32_t t = 0;
  std::string protocol;
  std::string adversary;
  uint64_t seed = 0;
  uint64_t msgs_after_gst = 0;
  uint64_t words_after_gst = 0;
  int64_t latency = -1;  // -1: no correct process decided
  bool all_pass = false;
};

BenchRow row_from_run(const Scenario& sc, const RunResult& r);
std::string metrics_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> metrics_from_csv(const std::string& text);
std::string lambda_csv(const LambdaTable& table, const ValueSpace& space);

// Runs every scenario and returns rows in input order. The parallel path
// fans scenarios out over OpenMP threads; the serial path is the reference
// the benchmark compares against. Both produce identical rows.
std::vector<BenchRow> run_sweep(const std::vector<Scenario>& scenarios, bool parallel);

// The standard complexity sweep: raw back-end protocol, silent faults on the
// last t = floor((n-1)/3) processes, gst = 0, delta = 1, unanimous ones.
std::vector<Scenario> bench_scenarios(const std::string& protocol,
                                      const std::vector<int32_t>& ns, uint64_t seed);

// Consecutive ratios msgs[i+1] / msgs[i]; the doubling check for n, 2n, 4n.
std::vector<double> doubling_ratios(const std::vector<BenchRow>& rows);

}  // namespace validus
