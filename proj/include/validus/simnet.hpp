#pragma once

// Deterministic discrete-event network simulator for a partially synchronous
// system: before GST a pluggable policy picks per-envelope delays within
// [send, gst+delta]; from GST on, every envelope is delivered exactly delta
// ticks after it is sent (the worst case the bound allows, which makes
// latency measurements tight and runs reproducible).

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "validus/crypto.hpp"
#include "validus/message.hpp"
#include "validus/validity.hpp"

namespace validus {

struct NetworkParams {
  Tick gst = 0;
  Tick delta = 1;
  uint64_t seed = 0;

  void validate() const;
};

struct Envelope {
  uint64_t seq = 0;  // global send order, also the tie-break identity
  Proc sender = 0;
  Proc receiver = 0;
  Msg payload;
  Tick send_time = 0;
  Tick deliver_time = 0;
  uint32_t words = 0;
};

struct SchedulePolicy {
  enum Kind { immediate, max_delay, random, partition } kind = immediate;
  uint64_t seed = 0;                     // random
  std::vector<std::vector<Proc>> groups; // partition: cross-group waits until gst+delta

  static SchedulePolicy from_string(const std::string& s, uint64_t seed);
  std::string display() const;
};

class Context;

// A protocol instance for one process, driven by the simulator.
class Automaton {
 public:
  virtual ~Automaton() = default;
  virtual void on_start(Context& ctx) = 0;
  virtual void on_message(Context& ctx, const Envelope& env) = 0;
  virtual void on_timer(Context& ctx, int64_t tag) { (void)ctx; (void)tag; }
};

// Protocol-level observations recorded alongside the trace; used by test
// assertions, never serialized.
struct Probe {
  Tick t = 0;
  Proc proc = 0;
  std::string what;
  int64_t a = 0;
  int64_t b = 0;
};

struct TraceLine {
  enum Kind { start, send, deliver, decide } kind = start;
  Tick t = 0;
  Proc proc = 0;           // acting process (sender / receiver / decider)
  Proc from = 0, to = 0;   // send + deliver
  MsgType mtype = MsgType::ping;
  uint32_t words = 0;
  uint64_t seq = 0;
  std::string value;       // decide only
};

struct Trace {
  SystemParams sys;
  NetworkParams net;
  std::string protocol = "unknown";
  std::string adversary = "none";
  CryptoMode crypto_mode = CryptoMode::fast;
  std::vector<Proc> faulty;

  std::vector<TraceLine> lines;                      // processing order
  std::vector<Envelope> envelopes;                   // send order; seqs are sparse
  std::map<Proc, std::pair<Tick, Decision>> decisions;
  std::vector<std::string> anomalies;                // e.g. second decide
  std::vector<Probe> probes;
  bool horizon_exceeded = false;
  bool stalled = false;  // queue quiesced before every correct process decided
  Tick end_time = 0;

  bool is_faulty(Proc p) const;
};

struct RunSpec {
  SystemParams sys;
  NetworkParams net;
  SchedulePolicy schedule;
  std::shared_ptr<Crypto> crypto;  // built by the caller, shared with closures
  Tick max_ticks = 1'000'000;
  bool run_to_horizon = false;  // disable the all-decided early stop
  std::vector<Proc> faulty;
  std::string protocol_name = "unknown";
  std::string adversary_name = "none";

  std::function<std::unique_ptr<Automaton>(Proc)> make_automaton;

  // Adversary hooks. send_filter may mutate the outgoing message (an owner
  // re-signing its own payload); returning false drops the send entirely.
  // deliver_filter returning false delivers the envelope but hides it from
  // the receiving automaton.
  std::function<bool(Proc sender, Tick now, Proc to, Msg&)> send_filter;
  std::function<bool(const Envelope&)> deliver_filter;

  void validate() const;
};

class Simulator;

// Simulator services exposed to automata.
class Context {
 public:
  Proc self() const { return self_; }
  Tick now() const;
  const SystemParams& sys() const;
  const NetworkParams& net() const;
  Tick delta() const { return net().delta; }
  Crypto& crypto();

  void send(Proc to, const Msg& m);
  void broadcast(const Msg& m);  // P_1..P_n including self
  void set_timer(Tick delay, int64_t tag);  // tag must be > 0
  void decide(const Decision& d);
  void probe(const std::string& what, int64_t a = 0, int64_t b = 0);

 private:
  friend class Simulator;
  Context(Simulator& sim, Proc self) : sim_(sim), self_(self) {}
  Simulator& sim_;
  Proc self_;
};

Trace run(const RunSpec& spec);

struct MetricsReport {
  uint64_t msgs_after_gst = 0;
  uint64_t words_after_gst = 0;
  std::map<Proc, std::pair<Tick, Decision>> decisions;
  std::optional<Tick> latency;  // max correct decision time - gst
};

MetricsReport count_metrics(const Trace& trace);

// Structural validation: delivery bounds, send-before-deliver, per-process
// time monotonicity, start-first, unique decisions. Empty result = valid.
std::vector<std::string> validate_trace(const Trace& trace);

struct Verdict {
  bool termination = false;
  bool agreement = false;
  bool validity = false;
  std::optional<bool> canonical_similarity;
  std::string notes;

  bool all_pass() const {
    return termination && agreement && validity &&
           (!canonical_similarity || *canonical_similarity);
  }
};

// Single-value consensus check against a validity property. `canonical`
// additionally requires the decided value to be admissible in every
// configuration similar to c.
Verdict check_consensus(const Trace& trace, const ValidityProperty& val,
                        const InputConfiguration& c, const SystemParams& sys,
                        const ValueSpace& space, bool canonical, uint64_t budget);

// Adversary construction shared by the harness and the tests.
struct AdversarySpec {
  enum Kind { none, silent, crash, equivocate_leader, lower_bound } kind = none;
  Tick crash_time = 0;  // crash
  Value fixed_value = 0;  // lower_bound group proposal v*

  static AdversarySpec parse(const std::string& text);
  std::string display() const;
};

// Installs make_automaton and the filters for the adversary. `base` builds
// the protocol automaton (also used for faulty processes that "behave
// correctly except..."). spec.faulty and spec.crypto must already be set;
// lower_bound requires gst=0 and spec.faulty = the last ceil(t/2) indices.
void apply_adversary(RunSpec& spec, const AdversarySpec& adv,
                     const std::function<std::unique_ptr<Automaton>(Proc)>& base);

}  // namespace validus
