// Command-line front end: classify properties, run scenarios, sweep
// benchmarks, and re-validate trace files.
//
// Exit codes: 0 success, 1 malformed input or failed re-validation,
// 2 enumeration budget exceeded, 3 benchmark abort (failed verdict or a
// doubling ratio outside the requested band).

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "validus/harness.hpp"

using namespace validus;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Value label_index(const ValueSpace& space, const std::string& label, bool output) {
  Value v = output ? space.output_index(label) : space.input_index(label);
  if (v < 0) throw std::invalid_argument("value label not in the space: " + label);
  return v;
}

ValidityProperty builtin_property(const std::string& text, const ValueSpace& space) {
  if (text == "strong") return ValidityProperty::strong();
  if (text == "weak") return ValidityProperty::weak();
  if (text == "correct_proposal") return ValidityProperty::correct_proposal();
  if (text.rfind("constant:", 0) == 0)
    return ValidityProperty::constant(label_index(space, text.substr(9), true));
  if (text.rfind("interval:", 0) == 0) {
    auto parts = split_commas(text.substr(9));
    if (parts.size() != 2) throw std::invalid_argument("interval takes lo,hi");
    return ValidityProperty::interval(label_index(space, parts[0], true),
                                      label_index(space, parts[1], true));
  }
  throw std::invalid_argument("unknown builtin property: " + text);
}

std::string pass_fail(bool b) { return b ? "pass" : "FAIL"; }

void print_verdict(const Verdict& v) {
  std::cout << "termination: " << pass_fail(v.termination) << "\n";
  std::cout << "agreement: " << pass_fail(v.agreement) << "\n";
  std::cout << "validity: " << pass_fail(v.validity) << "\n";
  if (v.canonical_similarity)
    std::cout << "canonical_similarity: " << pass_fail(*v.canonical_similarity) << "\n";
  if (!v.notes.empty()) std::cout << "notes: " << v.notes << "\n";
}

void print_metrics(const MetricsReport& m) {
  std::cout << "msgs_after_gst: " << m.msgs_after_gst
            << "  words_after_gst: " << m.words_after_gst << "  latency: ";
  if (m.latency) std::cout << *m.latency;
  else std::cout << "none";
  std::cout << "\n";
}

int cmd_classify(const std::string& builtin, const std::string& property_file, int32_t n,
                 int32_t t, const std::string& values, const std::string& outputs,
                 const std::string& out_path) {
  ValueSpace space;
  space.inputs = split_commas(values);
  space.outputs = outputs.empty() ? space.inputs : split_commas(outputs);

  ValidityProperty val;
  if (!property_file.empty()) val = property_from_json_text(read_file(property_file), space);
  else val = builtin_property(builtin, space);

  SystemParams sys{n, t};
  sys.validate();
  space.validate();
  val.validate(sys, space, effective_budget());
  auto report = classify(val, sys, space, effective_budget());

  std::cout << "property: " << val.display(space) << "\n";
  std::cout << "system: n=" << n << " t=" << t << "\n";
  std::cout << "verdict: " << to_string(report.verdict) << "\n";
  if (report.trivial_witness)
    std::cout << "trivial witness: "
              << space.outputs[static_cast<size_t>(*report.trivial_witness)] << "\n";
  std::cout << "similarity condition holds: " << (report.cs_holds ? "yes" : "no") << "\n";
  if (report.cs_counterexample)
    std::cout << "counterexample: " << report.cs_counterexample->display(space) << "\n";
  if (report.lambda) {
    std::cout << "lambda entries: " << report.lambda->entries.size() << "\n";
    if (!out_path.empty()) {
      write_file(out_path, lambda_csv(*report.lambda, space));
      std::cout << "lambda written: " << out_path << "\n";
    }
  }
  if (!report.notes.empty()) std::cout << "notes: " << report.notes << "\n";
  return 0;
}

int cmd_run(const Scenario& sc, const std::string& out_path,
            const std::string& metrics_path) {
  auto r = run_scenario(sc);
  std::cout << "protocol: " << sc.protocol << "  n=" << sc.n << " t=" << sc.t
            << "  adversary=" << sc.adversary << "  seed=" << sc.seed << "\n";
  for (auto& [p, d] : r.trace.decisions)
    std::cout << "P" << p << " decided " << d.second.display() << " at " << d.first
              << (r.trace.is_faulty(p) ? " (faulty)" : "") << "\n";
  if (r.trace.stalled) std::cout << "run stalled before every correct process decided\n";
  if (r.trace.horizon_exceeded) std::cout << "run hit max_ticks\n";
  print_verdict(r.verdict);
  print_metrics(r.metrics);
  if (!out_path.empty()) {
    write_file(out_path, trace_to_jsonl(sc, r.trace));
    std::cout << "trace written: " << out_path << "\n";
  }
  if (!metrics_path.empty()) {
    write_file(metrics_path, metrics_csv({row_from_run(sc, r)}));
    std::cout << "metrics written: " << metrics_path << "\n";
  }
  return 0;
}

int cmd_bench(const std::string& protocol, const std::string& ns_text, uint64_t seed,
              bool serial, const std::string& band, const std::string& out_path) {
  std::vector<int32_t> ns;
  for (const std::string& s : split_commas(ns_text)) ns.push_back(std::stoi(s));
  auto scenarios = bench_scenarios(protocol, ns, seed);
  auto rows = run_sweep(scenarios, !serial);

  for (size_t i = 0; i < rows.size(); ++i) {
    const BenchRow& r = rows[i];
    std::cout << "n=" << r.n << " t=" << r.t << " msgs=" << r.msgs_after_gst
              << " words=" << r.words_after_gst << " latency=" << r.latency
              << " verdict=" << (r.all_pass ? "pass" : "FAIL") << "\n";
    if (!r.all_pass) {
      std::cout << "benchmark aborted: failed verdict in scenario:\n"
                << scenario_to_json(scenarios[i]);
      return 3;
    }
  }
  auto ratios = doubling_ratios(rows);
  bool banded = !band.empty();
  double lo = 0, hi = 0;
  if (banded) {
    auto parts = split_commas(band);
    if (parts.size() != 2) throw std::invalid_argument("--band takes lo,hi");
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
  }
  bool band_ok = true;
  for (size_t i = 0; i < ratios.size(); ++i) {
    std::cout << "ratio msgs(" << rows[i + 1].n << ")/msgs(" << rows[i].n
              << ") = " << ratios[i];
    if (banded && (ratios[i] < lo || ratios[i] > hi)) {
      std::cout << "  OUTSIDE [" << lo << ", " << hi << "]";
      band_ok = false;
    }
    std::cout << "\n";
  }
  if (!out_path.empty()) {
    write_file(out_path, metrics_csv(rows));
    std::cout << "metrics written: " << out_path << "\n";
  }
  if (banded && !band_ok) {
    std::cout << "benchmark aborted: scaling outside the requested band\n";
    return 3;
  }
  return 0;
}

int cmd_check(const std::string& trace_path) {
  Scenario sc;
  Trace tr = trace_from_jsonl(read_file(trace_path), &sc);
  auto anomalies = validate_trace(tr);
  for (const std::string& a : tr.anomalies) std::cout << "recorded anomaly: " << a << "\n";
  for (const std::string& a : anomalies) std::cout << "structural anomaly: " << a << "\n";
  std::cout << "structure: " << pass_fail(anomalies.empty()) << "\n";
  auto v = judge(sc, tr);
  print_verdict(v);
  print_metrics(count_metrics(tr));
  return anomalies.empty() && v.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consensus validity toolkit: classify properties, run scenarios, bench"};
  app.require_subcommand(1);

  auto* classify_cmd = app.add_subcommand("classify", "classify a validity property");
  std::string builtin = "strong", property_file, values = "0,1", outputs, cl_out;
  int32_t n = 4, t = 1;
  classify_cmd->add_option("--builtin", builtin,
                           "strong|weak|correct_proposal|constant:<v>|interval:<lo>,<hi>");
  classify_cmd->add_option("--property-file", property_file, "property JSON file");
  classify_cmd->add_option("--n", n, "process count")->required();
  classify_cmd->add_option("--t", t, "fault bound")->required();
  classify_cmd->add_option("--values", values, "input labels, comma separated");
  classify_cmd->add_option("--outputs", outputs, "output labels (default: inputs)");
  classify_cmd->add_option("--out", cl_out, "lambda CSV path");

  auto* run_cmd = app.add_subcommand("run", "run a scenario file");
  std::string scenario_path, run_out, run_metrics, ov_adversary, ov_protocol, ov_crypto;
  int64_t ov_gst = -1, ov_delta = -1, ov_seed = -1, ov_max_ticks = -1;
  run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run_cmd->add_option("--out", run_out, "trace output path (JSON lines)");
  run_cmd->add_option("--metrics", run_metrics, "metrics CSV path");
  run_cmd->add_option("--gst", ov_gst, "override gst");
  run_cmd->add_option("--delta", ov_delta, "override delta");
  run_cmd->add_option("--seed", ov_seed, "override seed");
  run_cmd->add_option("--max-ticks", ov_max_ticks, "override max_ticks");
  run_cmd->add_option("--adversary", ov_adversary, "override adversary");
  run_cmd->add_option("--protocol", ov_protocol, "override protocol");
  run_cmd->add_option("--crypto-mode", ov_crypto, "override crypto mode (fast|real)");

  auto* bench_cmd = app.add_subcommand("bench", "sweep a protocol over n");
  std::string bench_protocol = "auth", ns_text = "4,8,16", band, bench_out;
  uint64_t bench_seed = 1;
  bool serial = false;
  bench_cmd->add_option("--protocol", bench_protocol, "protocol to sweep");
  bench_cmd->add_option("--ns", ns_text, "process counts, comma separated");
  bench_cmd->add_option("--seed", bench_seed, "sweep seed");
  bench_cmd->add_option("--band", band, "acceptable doubling-ratio band lo,hi");
  bench_cmd->add_option("--out", bench_out, "metrics CSV path");
  bench_cmd->add_flag("--serial", serial, "use the serial reference driver");

  auto* check_cmd = app.add_subcommand("check", "re-validate a trace file");
  std::string trace_path;
  check_cmd->add_option("trace", trace_path, "trace JSON-lines file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (classify_cmd->parsed())
      return cmd_classify(builtin, property_file, n, t, values, outputs, cl_out);
    if (run_cmd->parsed()) {
      Scenario sc = load_scenario(scenario_path);
      if (ov_gst >= 0) sc.gst = ov_gst;
      if (ov_delta >= 0) sc.delta = ov_delta;
      if (ov_seed >= 0) sc.seed = static_cast<uint64_t>(ov_seed);
      if (ov_max_ticks >= 0) sc.max_ticks = ov_max_ticks;
      if (!ov_adversary.empty()) sc.adversary = ov_adversary;
      if (!ov_protocol.empty()) sc.protocol = ov_protocol;
      if (!ov_crypto.empty()) sc.crypto_mode = crypto_mode_from_string(ov_crypto);
      return cmd_run(sc, run_out, run_metrics);
    }
    if (bench_cmd->parsed())
      return cmd_bench(bench_protocol, ns_text, bench_seed, serial, band, bench_out);
    if (check_cmd->parsed()) return cmd_check(trace_path);
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const LambdaUndefined& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "verdict: " << to_string(e.report.verdict) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
