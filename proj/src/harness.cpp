#include "validus/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "validus/broadcast.hpp"
#include "validus/core_consensus.hpp"

namespace validus {

using json = nlohmann::ordered_json;

uint64_t effective_budget() {
  const char* s = std::getenv("VALIDUS_BUDGET");
  if (!s) return kDefaultBudget;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s, &end, 10);
  if (!end || *end != '\0' || v == 0)
    throw std::invalid_argument("VALIDUS_BUDGET must be a positive integer");
  return v;
}

// ---------------------------------------------------------------- scenario

AdversarySpec Scenario::adversary_spec() const {
  return AdversarySpec::parse(adversary.substr(0, adversary.find('@')));
}

std::vector<Proc> Scenario::faulty_set() const {
  auto at = adversary.find('@');
  std::vector<Proc> out;
  if (at != std::string::npos) {
    std::stringstream ss(adversary.substr(at + 1));
    std::string item;
    while (std::getline(ss, item, ','))
      out.push_back(static_cast<Proc>(std::stol(item)));
    return out;
  }
  auto adv = adversary_spec();
  int32_t count = 0;
  if (adv.kind == AdversarySpec::lower_bound) count = (t + 1) / 2;
  else if (adv.kind != AdversarySpec::none) count = t;
  for (int32_t i = n - count + 1; i <= n; ++i) out.push_back(i);
  return out;
}

InputConfiguration Scenario::correct_config() const {
  InputConfiguration c;
  auto faulty = faulty_set();
  for (Proc p = 1; p <= n; ++p)
    if (std::find(faulty.begin(), faulty.end(), p) == faulty.end())
      c.pairs.push_back({p, proposals[p - 1]});
  return c;
}

void Scenario::validate() const {
  sys().validate();
  NetworkParams{gst, delta, seed}.validate();
  space.validate();
  if (!known_protocol(protocol))
    throw std::invalid_argument("unknown protocol: " + protocol);
  if (static_cast<int32_t>(proposals.size()) != n)
    throw std::invalid_argument("need exactly one proposal per process");
  for (Value v : proposals)
    if (v < 0 || v >= static_cast<Value>(space.inputs.size()))
      throw std::invalid_argument("proposal outside the input space");
  auto adv = adversary_spec();  // throws on bad text
  auto faulty = faulty_set();
  int32_t cap = adv.kind == AdversarySpec::lower_bound ? (t + 1) / 2 : t;
  if (static_cast<int32_t>(faulty.size()) > cap)
    throw std::invalid_argument("faulty set larger than the adversary allows");
  for (size_t i = 0; i < faulty.size(); ++i) {
    if (faulty[i] < 1 || faulty[i] > n)
      throw std::invalid_argument("faulty process index out of range");
    if (i > 0 && faulty[i] <= faulty[i - 1])
      throw std::invalid_argument("faulty process list must be strictly increasing");
  }
  (void)SchedulePolicy::from_string(schedule, seed);  // throws on bad text
  if (max_ticks < 1) throw std::invalid_argument("max_ticks must be positive");
  if (property) property->validate(sys(), space, effective_budget());
  if (protocol_needs_lambda(protocol) && !property)
    throw std::invalid_argument("the universal protocol needs a property");
  if ((protocol == "binary" || protocol == "binary_sig"))
    for (Value v : proposals)
      if (v != 0 && v != 1)
        throw std::invalid_argument("binary protocols take proposals in {0,1}");
}

// ---------------------------------------------------------------- property

namespace {

ValueSpace space_from_json(const json& j, const ValueSpace& fallback) {
  ValueSpace space = fallback;
  if (j.contains("values")) space.inputs = j["values"].get<std::vector<std::string>>();
  if (j.contains("outputs")) space.outputs = j["outputs"].get<std::vector<std::string>>();
  else if (j.contains("values")) space.outputs = space.inputs;
  return space;
}

ValidityProperty property_from_json(const json& j, ValueSpace& space) {
  static const std::set<std::string> keys = {"kind", "constant", "lo",
                                             "hi",   "values",   "outputs", "table"};
  for (auto& [k, v] : j.items())
    if (!keys.count(k)) throw std::invalid_argument("unknown property field: " + k);
  space = space_from_json(j, space);
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "strong") return ValidityProperty::strong();
  if (kind == "weak") return ValidityProperty::weak();
  if (kind == "correct_proposal") return ValidityProperty::correct_proposal();
  if (kind == "constant") return ValidityProperty::constant(j.at("constant").get<Value>());
  if (kind == "interval")
    return ValidityProperty::interval(j.at("lo").get<Value>(), j.at("hi").get<Value>());
  if (kind == "table") {
    std::map<std::vector<std::pair<Proc, Value>>, std::set<Value>> entries;
    for (const json& row : j.at("table")) {
      std::vector<std::pair<Proc, Value>> cfg;
      for (const json& pv : row.at("config"))
        cfg.emplace_back(pv.at(0).get<Proc>(), pv.at(1).get<Value>());
      std::set<Value> adm;
      for (const json& v : row.at("admissible")) adm.insert(v.get<Value>());
      if (!entries.emplace(std::move(cfg), std::move(adm)).second)
        throw std::invalid_argument("duplicate table configuration");
    }
    return ValidityProperty::from_table(std::move(entries));
  }
  throw std::invalid_argument("unknown property kind: " + kind);
}

json property_to_json(const ValidityProperty& val, const ValueSpace& space) {
  json j;
  j["kind"] = to_string(val.kind);
  if (val.kind == PropertyKind::constant) j["constant"] = val.constant_value;
  if (val.kind == PropertyKind::interval) {
    j["lo"] = val.lo;
    j["hi"] = val.hi;
  }
  j["values"] = space.inputs;
  j["outputs"] = space.outputs;
  if (val.kind == PropertyKind::table) {
    json rows = json::array();
    for (const auto& [cfg, adm] : val.table) {
      json row;
      row["config"] = json::array();
      for (const auto& [p, v] : cfg) row["config"].push_back({p, v});
      row["admissible"] = adm;
      rows.push_back(std::move(row));
    }
    j["table"] = std::move(rows);
  }
  return j;
}

json scenario_to_json_obj(const Scenario& sc) {
  json j;
  j["schema"] = kScenarioSchema;
  j["n"] = sc.n;
  j["t"] = sc.t;
  j["gst"] = sc.gst;
  j["delta"] = sc.delta;
  j["seed"] = sc.seed;
  j["property"] = sc.property ? property_to_json(*sc.property, sc.space) : json(nullptr);
  j["proposals"] = sc.proposals;
  j["protocol"] = sc.protocol;
  j["adversary"] = sc.adversary;
  j["schedule"] = sc.schedule;
  j["max_ticks"] = sc.max_ticks;
  j["crypto_mode"] = to_string(sc.crypto_mode);
  return j;
}

Scenario scenario_from_json_obj(const json& j) {
  static const std::set<std::string> keys = {
      "schema",   "n",        "t",         "gst",      "delta",
      "seed",     "property", "proposals", "protocol", "adversary",
      "schedule", "max_ticks", "crypto_mode"};
  for (auto& [k, v] : j.items())
    if (!keys.count(k)) throw std::invalid_argument("unknown scenario field: " + k);
  if (j.at("schema").get<std::string>() != kScenarioSchema)
    throw std::invalid_argument("scenario schema mismatch: want " +
                                std::string(kScenarioSchema));
  Scenario sc;
  sc.n = j.at("n").get<int32_t>();
  sc.t = j.at("t").get<int32_t>();
  sc.gst = j.value("gst", sc.gst);
  sc.delta = j.value("delta", sc.delta);
  sc.seed = j.value("seed", sc.seed);
  if (j.contains("property") && !j["property"].is_null())
    sc.property = property_from_json(j["property"], sc.space);
  sc.proposals = j.at("proposals").get<std::vector<Value>>();
  sc.protocol = j.at("protocol").get<std::string>();
  sc.adversary = j.value("adversary", sc.adversary);
  sc.schedule = j.value("schedule", sc.schedule);
  sc.max_ticks = j.value("max_ticks", sc.max_ticks);
  sc.crypto_mode = crypto_mode_from_string(j.value("crypto_mode", "fast"));
  return sc;
}

json parse_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw std::invalid_argument(std::string("malformed JSON in ") + what);
  return j;
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
  return scenario_from_json_obj(parse_text(text, "scenario"));
}

std::string scenario_to_json(const Scenario& sc) {
  return scenario_to_json_obj(sc).dump(2) + "\n";
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

ValidityProperty property_from_json_text(const std::string& text, ValueSpace& space) {
  return property_from_json(parse_text(text, "property"), space);
}

std::string property_to_json_text(const ValidityProperty& val, const ValueSpace& space) {
  return property_to_json(val, space).dump(2) + "\n";
}

// ---------------------------------------------------------------- protocols

namespace {

// smoke protocol: broadcast the proposal, decide it once n-t peers echoed
class EchoAuto : public Automaton {
 public:
  explicit EchoAuto(Value v) : v_(v) {}
  void on_start(Context& ctx) override {
    Msg m;
    m.vals = {v_};
    ctx.broadcast(m);
  }
  void on_message(Context& ctx, const Envelope& env) override {
    if (env.payload.type != MsgType::ping || done_) return;
    heard_.insert(env.sender);
    if (static_cast<int32_t>(heard_.size()) >= ctx.sys().n - ctx.sys().t) {
      done_ = true;
      ctx.decide({Decision::single, v_, {}});
    }
  }

 private:
  Value v_;
  bool done_ = false;
  std::set<Proc> heard_;
};

// every process slow-casts its proposal; all decide P1's value
class SlowAuto : public Automaton {
 public:
  explicit SlowAuto(Value v) : v_(v), slow_(kSlowTagBase) {}
  void on_start(Context& ctx) override {
    Msg m;
    m.pairs = {{ctx.self(), v_}};
    slow_.start(ctx, m);
  }
  void on_timer(Context& ctx, int64_t tag) override { slow_.on_timer(ctx, tag); }
  void on_message(Context& ctx, const Envelope& env) override {
    if (done_ || env.payload.type != MsgType::slow_cast) return;
    if (env.payload.pairs.empty() || env.payload.pairs[0].process != 1) return;
    done_ = true;
    ctx.decide({Decision::single, env.payload.pairs[0].value, {}});
  }

 private:
  Value v_;
  bool done_ = false;
  SlowBroadcaster slow_;
};

// P1 reliably broadcasts its proposal; all decide the delivered value
class BrbAuto : public Automaton {
 public:
  explicit BrbAuto(Value v) : v_(v) {}
  void on_start(Context& ctx) override {
    if (ctx.self() != 1) return;
    Msg content;
    content.pairs = {{1, v_}};
    hub_.broadcast(ctx, 1, content);
  }
  void on_message(Context& ctx, const Envelope& env) override {
    auto d = hub_.on_message(ctx, env);
    if (!d || done_ || d->origin != 1 || d->content.pairs.empty()) return;
    done_ = true;
    ctx.decide({Decision::single, d->content.pairs[0].value, {}});
  }

 private:
  Value v_;
  bool done_ = false;
  BrbHub hub_;
};

class BinaryAuto : public Automaton {
 public:
  explicit BinaryAuto(Value bit) : bit_(bit), bv_(0, kCoreTagBase) {}
  void on_start(Context& ctx) override { bv_.start(ctx, bit_); }
  void on_message(Context& ctx, const Envelope& env) override {
    auto d = bv_.on_message(ctx, env);
    if (d) ctx.decide({Decision::single, *d, {}});
  }
  void on_timer(Context& ctx, int64_t tag) override { bv_.on_timer(ctx, tag); }

 private:
  Value bit_;
  BinaryBv bv_;
};

class BinarySigAuto : public Automaton {
 public:
  explicit BinarySigAuto(Value bit) : bit_(bit) {}
  void on_start(Context& ctx) override { sig_.start(ctx, bit_); }
  void on_message(Context& ctx, const Envelope& env) override {
    auto d = sig_.on_message(ctx, env);
    if (d) ctx.decide({Decision::single, *d, {}});
  }
  void on_timer(Context& ctx, int64_t tag) override { sig_.on_timer(ctx, tag); }

 private:
  Value bit_;
  BinarySig sig_;
};

// bare provable core over value-only pairs; any bit-carrying pair verifies
class CoreAuto : public Automaton {
 public:
  explicit CoreAuto(Value bit)
      : bit_(bit), core_([](const VPPair& p) { return p.bit.has_value() && p.vec.empty(); }) {}
  void on_start(Context& ctx) override {
    VPPair p;
    p.bit = bit_;
    core_.start(ctx, p);
  }
  void on_message(Context& ctx, const Envelope& env) override {
    auto d = core_.on_message(ctx, env);
    if (d && d->bit) ctx.decide({Decision::single, *d->bit, {}});
  }
  void on_timer(Context& ctx, int64_t tag) override { core_.on_timer(ctx, tag); }

 private:
  Value bit_;
  ProvableCore core_;
};

class VectorAuto : public Automaton {
 public:
  VectorAuto(VectorBackend b, Value v) : v_(v), core_(make_vector_core(b)) {}
  void on_start(Context& ctx) override { core_->start(ctx, v_); }
  void on_message(Context& ctx, const Envelope& env) override {
    auto d = core_->on_message(ctx, env);
    if (d) ctx.decide({Decision::vector, 0, *d});
  }
  void on_timer(Context& ctx, int64_t tag) override { core_->on_timer(ctx, tag); }

 private:
  Value v_;
  std::unique_ptr<VectorCore> core_;
};

// dissemination of the single-pair vector [(self, v)]; decides a tag derived
// from the first acquired digest (acquisitions may differ across processes)
class DissAuto : public Automaton {
 public:
  explicit DissAuto(Value v) : v_(v) {}
  void on_start(Context& ctx) override { diss_.disseminate(ctx, {{ctx.self(), v_}}, {}); }
  void on_message(Context& ctx, const Envelope& env) override {
    diss_.on_message(ctx, env);
    if (done_ || !diss_.acquired()) return;
    done_ = true;
    Value tag = static_cast<Value>(digest_probe_tag(diss_.acquired()->first) & 0x3fffffff);
    ctx.decide({Decision::single, tag, {}});
  }
  void on_timer(Context& ctx, int64_t tag) override { diss_.on_timer(ctx, tag); }

 private:
  Value v_;
  bool done_ = false;
  VectorDissemination diss_;
};

std::optional<VectorBackend> universal_backend(const std::string& name) {
  if (name == "universal" || name == "universal+auth") return VectorBackend::auth;
  if (name == "universal+nonauth") return VectorBackend::nonauth;
  if (name == "universal+lowcomm") return VectorBackend::lowcomm;
  return std::nullopt;
}

}  // namespace

bool known_protocol(const std::string& name) {
  static const std::set<std::string> names = {"echo",   "slow",    "brb",
                                              "binary", "binary_sig", "core",
                                              "auth",   "nonauth", "lowcomm",
                                              "dissemination"};
  return names.count(name) > 0 || universal_backend(name).has_value();
}

bool protocol_needs_lambda(const std::string& name) {
  return universal_backend(name).has_value();
}

std::function<std::unique_ptr<Automaton>(Proc)> make_protocol(
    const Scenario& sc, std::shared_ptr<const LambdaTable> lambda) {
  auto vals = sc.proposals;
  const std::string& name = sc.protocol;
  if (auto backend = universal_backend(name)) {
    if (!lambda) throw std::invalid_argument("universal protocol without a lambda table");
    return [vals, b = *backend, lambda](Proc p) {
      return std::make_unique<UniversalAuto>(vals[p - 1], b, lambda);
    };
  }
  return [vals, name](Proc p) -> std::unique_ptr<Automaton> {
    Value v = vals[p - 1];
    if (name == "echo") return std::make_unique<EchoAuto>(v);
    if (name == "slow") return std::make_unique<SlowAuto>(v);
    if (name == "brb") return std::make_unique<BrbAuto>(v);
    if (name == "binary") return std::make_unique<BinaryAuto>(v);
    if (name == "binary_sig") return std::make_unique<BinarySigAuto>(v);
    if (name == "core") return std::make_unique<CoreAuto>(v);
    if (name == "auth") return std::make_unique<VectorAuto>(VectorBackend::auth, v);
    if (name == "nonauth") return std::make_unique<VectorAuto>(VectorBackend::nonauth, v);
    if (name == "lowcomm") return std::make_unique<VectorAuto>(VectorBackend::lowcomm, v);
    if (name == "dissemination") return std::make_unique<DissAuto>(v);
    throw std::invalid_argument("unknown protocol: " + name);
  };
}

// ---------------------------------------------------------------- running

RunSpec make_run_spec(const Scenario& sc, std::shared_ptr<const LambdaTable> lambda) {
  RunSpec spec;
  spec.sys = sc.sys();
  spec.net = {sc.gst, sc.delta, sc.seed};
  spec.schedule = SchedulePolicy::from_string(sc.schedule, sc.seed);
  spec.crypto = std::make_shared<Crypto>(sc.crypto_mode, sc.n, sc.seed);
  spec.max_ticks = sc.max_ticks;
  spec.faulty = sc.faulty_set();
  spec.protocol_name = sc.protocol;
  spec.adversary_name = sc.adversary;
  apply_adversary(spec, sc.adversary_spec(), make_protocol(sc, std::move(lambda)));
  return spec;
}

RunResult run_scenario(const Scenario& sc) {
  sc.validate();
  std::shared_ptr<const LambdaTable> lambda;
  if (protocol_needs_lambda(sc.protocol))
    lambda = universal_lambda(*sc.property, sc.sys(), sc.space, effective_budget());
  RunResult r;
  r.trace = run(make_run_spec(sc, std::move(lambda)));
  r.metrics = count_metrics(r.trace);
  r.verdict = judge(sc, r.trace);
  return r;
}

namespace {

bool vector_valid(const Scenario& sc, const std::vector<Proc>& faulty,
                  const Decision& d) {
  if (d.kind != Decision::vector) return false;
  if (static_cast<int32_t>(d.pairs.size()) != sc.n - sc.t) return false;
  for (size_t i = 0; i < d.pairs.size(); ++i) {
    Proc p = d.pairs[i].process;
    if (p < 1 || p > sc.n) return false;
    if (i > 0 && p <= d.pairs[i - 1].process) return false;
    bool correct = std::find(faulty.begin(), faulty.end(), p) == faulty.end();
    if (correct && d.pairs[i].value != sc.proposals[p - 1]) return false;
  }
  return true;
}

}  // namespace

Verdict judge(const Scenario& sc, const Trace& trace) {
  if (protocol_needs_lambda(sc.protocol)) {
    auto adv = sc.adversary_spec();
    bool canonical =
        adv.kind == AdversarySpec::none || adv.kind == AdversarySpec::silent;
    return check_consensus(trace, *sc.property, sc.correct_config(), sc.sys(), sc.space,
                           canonical, effective_budget());
  }

  Verdict v;
  auto faulty = sc.faulty_set();
  std::vector<Decision> decided;
  bool all = true;
  for (Proc p = 1; p <= sc.n; ++p) {
    if (trace.is_faulty(p)) continue;
    auto it = trace.decisions.find(p);
    if (it == trace.decisions.end()) all = false;
    else decided.push_back(it->second.second);
  }
  v.termination = all && !trace.horizon_exceeded;
  if (!v.termination) v.notes += "not all correct processes decided;";

  bool agree = true;
  for (size_t i = 1; i < decided.size(); ++i)
    if (!(decided[i] == decided[0])) agree = false;

  const std::string& name = sc.protocol;
  if (name == "auth" || name == "nonauth" || name == "lowcomm") {
    v.agreement = agree;
    v.validity = true;
    for (const Decision& d : decided)
      if (!vector_valid(sc, faulty, d)) v.validity = false;
    if (!v.validity) v.notes += "vector validity violated;";
  } else if (name == "binary" || name == "binary_sig") {
    v.agreement = agree;
    std::set<Value> correct_proposals;
    for (Proc p = 1; p <= sc.n; ++p)
      if (!trace.is_faulty(p)) correct_proposals.insert(sc.proposals[p - 1]);
    v.validity = true;
    for (const Decision& d : decided)
      if (d.kind != Decision::single || !correct_proposals.count(d.value))
        v.validity = false;
    if (!v.validity) v.notes += "strong validity violated;";
  } else if (name == "core") {
    v.agreement = agree;
    std::set<Value> proposed(sc.proposals.begin(), sc.proposals.end());
    v.validity = true;
    for (const Decision& d : decided)
      if (d.kind != Decision::single || !proposed.count(d.value)) v.validity = false;
    if (!v.validity) v.notes += "decided value was never proposed;";
  } else if (name == "dissemination") {
    v.agreement = true;  // acquisitions legitimately differ across processes
    v.validity = true;
    v.notes += "agreement/validity not applicable to dissemination;";
  } else {  // echo, slow, brb
    v.agreement = agree;
    v.validity = true;
    v.notes += "validity not applicable to " + name + ";";
  }
  return v;
}

// ---------------------------------------------------------------- trace io

namespace {

MsgType msg_type_from_string(const std::string& s) {
  static const std::map<std::string, MsgType> index = [] {
    std::map<std::string, MsgType> m;
    for (int i = 0; i <= static_cast<int>(MsgType::add_share); ++i)
      m[to_string(static_cast<MsgType>(i))] = static_cast<MsgType>(i);
    return m;
  }();
  auto it = index.find(s);
  if (it == index.end()) throw std::invalid_argument("unknown message type: " + s);
  return it->second;
}

json decision_to_json(const Decision& d) {
  if (d.kind == Decision::single) return d.value;
  json vec = json::array();
  for (const auto& pp : d.pairs) vec.push_back({pp.process, pp.value});
  return vec;
}

Decision decision_from_json(const json& j) {
  Decision d;
  if (j.is_array()) {
    d.kind = Decision::vector;
    for (const json& pv : j) d.pairs.push_back({pv.at(0).get<Proc>(), pv.at(1).get<Value>()});
  } else {
    d.kind = Decision::single;
    d.value = j.get<Value>();
  }
  return d;
}

}  // namespace

std::string trace_to_jsonl(const Scenario& sc, const Trace& trace) {
  std::map<uint64_t, Tick> scheduled;  // timers and starts share the seq counter
  for (const Envelope& e : trace.envelopes) scheduled[e.seq] = e.deliver_time;
  std::string out;
  json head;
  head["schema"] = kTraceSchema;
  head["scenario"] = scenario_to_json_obj(sc);
  head["end_time"] = trace.end_time;
  head["stalled"] = trace.stalled;
  head["horizon_exceeded"] = trace.horizon_exceeded;
  head["anomalies"] = trace.anomalies;
  out += head.dump() + "\n";

  for (const TraceLine& l : trace.lines) {
    json j;
    j["t"] = l.t;
    j["proc"] = l.proc;
    switch (l.kind) {
      case TraceLine::start:
        j["kind"] = "start";
        break;
      case TraceLine::send: {
        j["kind"] = "send";
        j["to"] = l.to;
        j["msg_type"] = to_string(l.mtype);
        j["words"] = l.words;
        j["seq"] = l.seq;
        j["at"] = scheduled.at(l.seq);  // scheduled delivery
        break;
      }
      case TraceLine::deliver:
        j["kind"] = "deliver";
        j["from"] = l.from;
        j["msg_type"] = to_string(l.mtype);
        j["words"] = l.words;
        j["seq"] = l.seq;
        break;
      case TraceLine::decide: {
        j["kind"] = "decide";
        auto it = trace.decisions.find(l.proc);
        if (it != trace.decisions.end() && it->second.first == l.t)
          j["value"] = decision_to_json(it->second.second);
        else
          j["value"] = l.value;  // anomalous duplicate, kept as display text
        break;
      }
    }
    out += j.dump() + "\n";
  }
  return out;
}

Trace trace_from_jsonl(const std::string& text, Scenario* scenario_out) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw std::invalid_argument("empty trace file");
  json head = parse_text(line, "trace header");
  if (!head.contains("schema") || head["schema"].get<std::string>() != kTraceSchema)
    throw std::invalid_argument("trace schema mismatch: want " + std::string(kTraceSchema));
  Scenario sc = scenario_from_json_obj(head.at("scenario"));
  if (scenario_out) *scenario_out = sc;

  Trace tr;
  tr.sys = sc.sys();
  tr.net = {sc.gst, sc.delta, sc.seed};
  tr.protocol = sc.protocol;
  tr.adversary = sc.adversary;
  tr.crypto_mode = sc.crypto_mode;
  tr.faulty = sc.faulty_set();
  tr.end_time = head.value("end_time", 0);
  tr.stalled = head.value("stalled", false);
  tr.horizon_exceeded = head.value("horizon_exceeded", false);
  tr.anomalies = head.value("anomalies", std::vector<std::string>{});

  std::map<uint64_t, Envelope> envelopes;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    json j = parse_text(line, "trace line");
    TraceLine l;
    l.t = j.at("t").get<Tick>();
    l.proc = j.at("proc").get<Proc>();
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "start") {
      l.kind = TraceLine::start;
    } else if (kind == "send") {
      l.kind = TraceLine::send;
      l.from = l.proc;
      l.to = j.at("to").get<Proc>();
      l.mtype = msg_type_from_string(j.at("msg_type").get<std::string>());
      l.words = j.at("words").get<uint32_t>();
      l.seq = j.at("seq").get<uint64_t>();
      Envelope e;
      e.seq = l.seq;
      e.sender = l.proc;
      e.receiver = l.to;
      e.payload.type = l.mtype;
      e.send_time = l.t;
      e.deliver_time = j.at("at").get<Tick>();
      e.words = l.words;
      envelopes[e.seq] = e;
    } else if (kind == "deliver") {
      l.kind = TraceLine::deliver;
      l.from = j.at("from").get<Proc>();
      l.to = l.proc;
      l.mtype = msg_type_from_string(j.at("msg_type").get<std::string>());
      l.words = j.at("words").get<uint32_t>();
      l.seq = j.at("seq").get<uint64_t>();
    } else if (kind == "decide") {
      l.kind = TraceLine::decide;
      if (!j.at("value").is_string()) {
        Decision d = decision_from_json(j["value"]);
        l.value = d.display();
        if (!tr.decisions.count(l.proc)) tr.decisions[l.proc] = {l.t, d};
      } else {
        l.value = j["value"].get<std::string>();
      }
    } else {
      throw std::invalid_argument("unknown trace line kind: " + kind);
    }
    tr.lines.push_back(std::move(l));
  }
  for (auto& [seq, e] : envelopes) tr.envelopes.push_back(std::move(e));
  return tr;
}

// ---------------------------------------------------------------- csv

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

BenchRow row_from_run(const Scenario& sc, const RunResult& r) {
  BenchRow row;
  row.n = sc.n;
  row.t = sc.t;
  row.protocol = sc.protocol;
  row.adversary = sc.adversary;
  row.seed = sc.seed;
  row.msgs_after_gst = r.metrics.msgs_after_gst;
  row.words_after_gst = r.metrics.words_after_gst;
  row.latency = r.metrics.latency ? static_cast<int64_t>(*r.metrics.latency) : -1;
  row.all_pass = r.verdict.all_pass();
  return row;
}

std::string metrics_csv(const std::vector<BenchRow>& rows) {
  std::string out = "# ";
  out += kMetricsSchema;
  out += "\nn,t,protocol,adversary,seed,msgs_after_gst,words_after_gst,latency\n";
  for (const BenchRow& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.t) + "," + csv_quote(r.protocol) +
           "," + csv_quote(r.adversary) + "," + std::to_string(r.seed) + "," +
           std::to_string(r.msgs_after_gst) + "," + std::to_string(r.words_after_gst) + "," +
           (r.latency < 0 ? std::string() : std::to_string(r.latency)) + "\n";
  }
  return out;
}

std::vector<BenchRow> metrics_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != std::string("# ") + kMetricsSchema)
    throw std::invalid_argument("metrics schema mismatch: want " +
                                std::string(kMetricsSchema));
  if (!std::getline(ss, line) ||
      line != "n,t,protocol,adversary,seed,msgs_after_gst,words_after_gst,latency")
    throw std::invalid_argument("metrics header mismatch");
  std::vector<BenchRow> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    auto f = csv_split(line);
    if (f.size() != 8) throw std::invalid_argument("metrics row needs 8 fields");
    BenchRow r;
    r.n = std::stoi(f[0]);
    r.t = std::stoi(f[1]);
    r.protocol = f[2];
    r.adversary = f[3];
    r.seed = std::stoull(f[4]);
    r.msgs_after_gst = std::stoull(f[5]);
    r.words_after_gst = std::stoull(f[6]);
    r.latency = f[7].empty() ? -1 : std::stoll(f[7]);
    r.all_pass = true;  // verdicts gate emission and are not serialized
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string lambda_csv(const LambdaTable& table, const ValueSpace& space) {
  std::string out = "# ";
  out += kLambdaSchema;
  out += "\nconfig_id,config,lambda_value\n";
  for (size_t i = 0; i < table.entries.size(); ++i) {
    const auto& [c, v] = table.entries[i];
    out += std::to_string(i) + "," + csv_quote(c.display(space)) + "," +
           space.outputs[static_cast<size_t>(v)] + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- sweeps

std::vector<BenchRow> run_sweep(const std::vector<Scenario>& scenarios, bool parallel) {
  std::vector<BenchRow> rows(scenarios.size());
  if (parallel) {
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (size_t i = 0; i < scenarios.size(); ++i) {
      try {
        rows[i] = row_from_run(scenarios[i], run_scenario(scenarios[i]));
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
  } else {
    for (size_t i = 0; i < scenarios.size(); ++i)
      rows[i] = row_from_run(scenarios[i], run_scenario(scenarios[i]));
  }
  return rows;
}

std::vector<Scenario> bench_scenarios(const std::string& protocol,
                                      const std::vector<int32_t>& ns, uint64_t seed) {
  std::vector<Scenario> out;
  for (int32_t n : ns) {
    Scenario sc;
    sc.n = n;
    sc.t = std::max(1, (n - 1) / 3);
    sc.gst = 0;
    sc.delta = 1;
    sc.seed = seed;
    sc.proposals.assign(static_cast<size_t>(n), 1);
    sc.protocol = protocol;
    sc.adversary = "silent";
    sc.schedule = "immediate";
    sc.max_ticks = 500'000;
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<double> doubling_ratios(const std::vector<BenchRow>& rows) {
  std::vector<double> out;
  for (size_t i = 1; i < rows.size(); ++i)
    out.push_back(static_cast<double>(rows[i].msgs_after_gst) /
                  static_cast<double>(std::max<uint64_t>(1, rows[i - 1].msgs_after_gst)));
  return out;
}

}  // namespace validus
