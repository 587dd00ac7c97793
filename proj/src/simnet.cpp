#include "validus/simnet.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

namespace validus {

void NetworkParams::validate() const {
  if (delta < 1) throw std::invalid_argument("delta must be >= 1 tick");
  if (gst < 0) throw std::invalid_argument("gst must be >= 0");
}

SchedulePolicy SchedulePolicy::from_string(const std::string& s, uint64_t seed) {
  SchedulePolicy p;
  p.seed = seed;
  if (s == "immediate" || s.empty()) {
    p.kind = immediate;
  } else if (s == "max_delay") {
    p.kind = max_delay;
  } else if (s == "random") {
    p.kind = random;
  } else if (s.rfind("partition:", 0) == 0) {
    p.kind = partition;
    std::string body = s.substr(10);
    std::stringstream gs(body);
    std::string group;
    while (std::getline(gs, group, '|')) {
      std::vector<Proc> members;
      std::stringstream ms(group);
      std::string m;
      while (std::getline(ms, m, ',')) members.push_back(static_cast<Proc>(std::stol(m)));
      if (!members.empty()) p.groups.push_back(std::move(members));
    }
  } else {
    throw std::invalid_argument("unknown schedule policy: " + s);
  }
  return p;
}

std::string SchedulePolicy::display() const {
  switch (kind) {
    case immediate: return "immediate";
    case max_delay: return "max_delay";
    case random: return "random";
    case partition: {
      std::string out = "partition:";
      for (size_t g = 0; g < groups.size(); ++g) {
        if (g) out += "|";
        for (size_t i = 0; i < groups[g].size(); ++i) {
          if (i) out += ",";
          out += std::to_string(groups[g][i]);
        }
      }
      return out;
    }
  }
  return "immediate";
}

void RunSpec::validate() const {
  sys.validate();
  net.validate();
  if (!crypto) throw std::invalid_argument("run spec has no crypto instance");
  if (crypto->n() != sys.n) throw std::invalid_argument("crypto key count differs from n");
  if (!make_automaton) throw std::invalid_argument("run spec has no automaton factory");
  if (static_cast<int32_t>(faulty.size()) > sys.t)
    throw std::invalid_argument("more faulty processes than the fault bound t");
  for (size_t i = 0; i < faulty.size(); ++i) {
    if (faulty[i] < 1 || faulty[i] > sys.n)
      throw std::invalid_argument("faulty process index out of range");
    if (i > 0 && faulty[i] <= faulty[i - 1])
      throw std::invalid_argument("faulty process list must be strictly increasing");
  }
  if (max_ticks < 1) throw std::invalid_argument("max_ticks must be positive");
}

bool Trace::is_faulty(Proc p) const {
  return std::find(faulty.begin(), faulty.end(), p) != faulty.end();
}

namespace {

struct QEvent {
  Tick time = 0;
  Proc proc = 0;
  uint64_t seq = 0;
  enum Kind { start, deliver, timer, heartbeat } kind = start;
  size_t env_index = 0;  // deliver
  int64_t tag = 0;       // timer

  // min-heap on (time, proc, seq)
  friend bool operator>(const QEvent& a, const QEvent& b) {
    if (a.time != b.time) return a.time > b.time;
    if (a.proc != b.proc) return a.proc > b.proc;
    return a.seq > b.seq;
  }
};

}  // namespace

class Simulator {
 public:
  explicit Simulator(const RunSpec& spec) : spec_(spec) {
    spec_.validate();
    trace_.sys = spec.sys;
    trace_.net = spec.net;
    trace_.protocol = spec.protocol_name;
    trace_.adversary = spec.adversary_name;
    trace_.crypto_mode = spec.crypto->mode();
    trace_.faulty = spec.faulty;
    group_of_.assign(static_cast<size_t>(spec.sys.n) + 1, -1);
    for (size_t g = 0; g < spec.schedule.groups.size(); ++g)
      for (Proc p : spec.schedule.groups[g])
        if (p >= 1 && p <= spec.sys.n) group_of_[static_cast<size_t>(p)] = static_cast<int>(g);
    states_.resize(static_cast<size_t>(spec.sys.n) + 1);
    for (Proc p = 1; p <= spec.sys.n; ++p) states_[static_cast<size_t>(p)].automaton = spec.make_automaton(p);
    undecided_correct_ = spec.sys.n - static_cast<int32_t>(spec.faulty.size());
  }

  Trace run() {
    for (Proc p = 1; p <= spec_.sys.n; ++p) queue_.push({0, p, next_seq_++, QEvent::start});
    for (Proc p = 1; p <= spec_.sys.n; ++p)
      queue_.push({spec_.net.delta, p, next_seq_++, QEvent::heartbeat});

    while (!queue_.empty() && !stop_) {
      QEvent e = queue_.top();
      queue_.pop();
      if (e.time > spec_.max_ticks) {
        trace_.horizon_exceeded = undecided_correct_ > 0;
        break;
      }
      now_ = e.time;
      Context ctx(*this, e.proc);
      auto& st = states_[static_cast<size_t>(e.proc)];
      switch (e.kind) {
        case QEvent::start:
          trace_.lines.push_back({TraceLine::start, now_, e.proc, 0, 0, MsgType::ping, 0, 0, ""});
          st.automaton->on_start(ctx);
          break;
        case QEvent::deliver: {
          pending_delivers_--;
          // Copy: handlers send while holding the envelope, and a send can
          // reallocate trace_.envelopes under a reference into it.
          Envelope env = trace_.envelopes[e.env_index];
          trace_.lines.push_back({TraceLine::deliver, now_, env.receiver, env.sender,
                                  env.receiver, env.payload.type, env.words, env.seq, ""});
          if (spec_.deliver_filter && !spec_.deliver_filter(env)) break;
          st.automaton->on_message(ctx, env);
          break;
        }
        case QEvent::timer:
          pending_timers_--;
          st.automaton->on_timer(ctx, e.tag);
          break;
        case QEvent::heartbeat:
          // Heartbeats only keep the clock alive; once no protocol event can
          // ever fire again the run has quiesced.
          if (!spec_.run_to_horizon && pending_delivers_ == 0 && pending_timers_ == 0) {
            trace_.stalled = undecided_correct_ > 0;
            stop_ = true;
            break;
          }
          queue_.push({now_ + spec_.net.delta, e.proc, next_seq_++, QEvent::heartbeat});
          break;
      }
    }
    trace_.end_time = now_;
    return std::move(trace_);
  }

 private:
  friend class Context;

  struct ProcState {
    std::unique_ptr<Automaton> automaton;
    bool decided = false;
  };

  Tick deliver_time_for(uint64_t seq, Proc sender, Proc receiver, Tick send_time) const {
    if (send_time >= spec_.net.gst) return send_time + spec_.net.delta;
    Tick latest = spec_.net.gst + spec_.net.delta;
    switch (spec_.schedule.kind) {
      case SchedulePolicy::immediate: return send_time;
      case SchedulePolicy::max_delay: return latest;
      case SchedulePolicy::random: {
        uint64_t span = static_cast<uint64_t>(latest - send_time) + 1;
        uint64_t h = mix64(mix64(spec_.schedule.seed, seq),
                           mix64(static_cast<uint64_t>(sender), static_cast<uint64_t>(receiver)));
        return send_time + static_cast<Tick>(h % span);
      }
      case SchedulePolicy::partition: {
        int ga = group_of_[static_cast<size_t>(sender)];
        int gb = group_of_[static_cast<size_t>(receiver)];
        bool same = sender == receiver || (ga >= 0 && ga == gb);
        return same ? std::min(send_time + spec_.net.delta, latest) : latest;
      }
    }
    return latest;
  }

  void do_send(Proc from, Proc to, Msg m) {
    if (to < 1 || to > spec_.sys.n) throw std::invalid_argument("send target out of range");
    if (spec_.send_filter && !spec_.send_filter(from, now_, to, m)) return;
    Envelope env;
    env.seq = next_seq_++;
    env.sender = from;
    env.receiver = to;
    env.send_time = now_;
    env.words = m.words();
    env.payload = std::move(m);
    env.deliver_time = deliver_time_for(env.seq, from, to, now_);
    trace_.lines.push_back({TraceLine::send, now_, from, from, to, env.payload.type, env.words,
                            env.seq, ""});
    queue_.push({env.deliver_time, to, env.seq, QEvent::deliver, trace_.envelopes.size()});
    trace_.envelopes.push_back(std::move(env));
    pending_delivers_++;
  }

  void do_set_timer(Proc who, Tick delay, int64_t tag) {
    if (delay < 0) throw std::invalid_argument("timer delay must be >= 0");
    if (tag <= 0) throw std::invalid_argument("timer tags must be positive");
    queue_.push({now_ + delay, who, next_seq_++, QEvent::timer, 0, tag});
    pending_timers_++;
  }

  void do_decide(Proc who, const Decision& d) {
    auto& st = states_[static_cast<size_t>(who)];
    if (st.decided) {
      trace_.anomalies.push_back("P" + std::to_string(who) + " decided a second time at tick " +
                                 std::to_string(now_));
      return;
    }
    st.decided = true;
    trace_.decisions[who] = {now_, d};
    trace_.lines.push_back({TraceLine::decide, now_, who, 0, 0, MsgType::ping, 0, 0, d.display()});
    if (!trace_.is_faulty(who)) {
      undecided_correct_--;
      if (undecided_correct_ == 0 && !spec_.run_to_horizon) stop_ = true;
    }
  }

  const RunSpec& spec_;
  Trace trace_;
  std::priority_queue<QEvent, std::vector<QEvent>, std::greater<QEvent>> queue_;
  std::vector<ProcState> states_;
  std::vector<int> group_of_;
  uint64_t next_seq_ = 1;
  Tick now_ = 0;
  size_t pending_delivers_ = 0;
  size_t pending_timers_ = 0;
  int32_t undecided_correct_ = 0;
  bool stop_ = false;
};

Tick Context::now() const { return sim_.now_; }
const SystemParams& Context::sys() const { return sim_.spec_.sys; }
const NetworkParams& Context::net() const { return sim_.spec_.net; }
Crypto& Context::crypto() { return *sim_.spec_.crypto; }
void Context::send(Proc to, const Msg& m) { sim_.do_send(self_, to, m); }
void Context::broadcast(const Msg& m) {
  for (Proc p = 1; p <= sim_.spec_.sys.n; ++p) sim_.do_send(self_, p, m);
}
void Context::set_timer(Tick delay, int64_t tag) { sim_.do_set_timer(self_, delay, tag); }
void Context::decide(const Decision& d) { sim_.do_decide(self_, d); }
void Context::probe(const std::string& what, int64_t a, int64_t b) {
  sim_.trace_.probes.push_back({sim_.now_, self_, what, a, b});
}

Trace run(const RunSpec& spec) { return Simulator(spec).run(); }

MetricsReport count_metrics(const Trace& trace) {
  MetricsReport r;
  for (const Envelope& e : trace.envelopes) {
    if (trace.is_faulty(e.sender) || e.send_time < trace.net.gst) continue;
    r.msgs_after_gst += 1;
    r.words_after_gst += e.words;
  }
  r.decisions = trace.decisions;
  Tick last = -1;
  bool all = true;
  for (Proc p = 1; p <= trace.sys.n; ++p) {
    if (trace.is_faulty(p)) continue;
    auto it = trace.decisions.find(p);
    if (it == trace.decisions.end()) {
      all = false;
      break;
    }
    last = std::max(last, it->second.first);
  }
  if (all) r.latency = std::max<Tick>(0, last - trace.net.gst);
  return r;
}

std::vector<std::string> validate_trace(const Trace& trace) {
  std::vector<std::string> bad;
  auto complain = [&](const std::string& s) {
    if (bad.size() < 50) bad.push_back(s);
  };

  std::map<uint64_t, const Envelope*> by_seq;
  for (const Envelope& e : trace.envelopes) {
    by_seq[e.seq] = &e;
    Tick bound = std::max(e.send_time, trace.net.gst) + trace.net.delta;
    if (e.deliver_time > bound)
      complain("envelope " + std::to_string(e.seq) + " delivered after the bound");
    if (e.deliver_time < e.send_time)
      complain("envelope " + std::to_string(e.seq) + " delivered before it was sent");
  }

  std::map<Proc, Tick> last_time;
  std::map<Proc, bool> started;
  std::map<Proc, int> decided;
  std::set<uint64_t> sent, delivered;
  Tick global = 0;
  for (const TraceLine& l : trace.lines) {
    if (l.t < global) complain("trace time went backwards");
    global = std::max(global, l.t);
    auto it = last_time.find(l.proc);
    if (it != last_time.end() && l.t < it->second)
      complain("per-process time went backwards for P" + std::to_string(l.proc));
    last_time[l.proc] = l.t;
    if (l.kind == TraceLine::start) {
      started[l.proc] = true;
    } else if (!started[l.proc]) {
      complain("P" + std::to_string(l.proc) + " acted before its start event");
    }
    switch (l.kind) {
      case TraceLine::start:
        break;
      case TraceLine::send:
        sent.insert(l.seq);
        break;
      case TraceLine::deliver: {
        if (!sent.count(l.seq))
          complain("delivery of envelope " + std::to_string(l.seq) + " with no prior send");
        if (delivered.count(l.seq))
          complain("envelope " + std::to_string(l.seq) + " delivered twice");
        delivered.insert(l.seq);
        auto e = by_seq.find(l.seq);
        if (e == by_seq.end())
          complain("delivery references unknown envelope");
        else if (e->second->deliver_time != l.t)
          complain("delivery time disagrees with the envelope");
        break;
      }
      case TraceLine::decide:
        if (++decided[l.proc] > 1) complain("P" + std::to_string(l.proc) + " decided twice");
        break;
    }
  }
  // a process with no lines at all is fine: the run may stop before an idle
  // (faulty) process's start event is reached
  return bad;
}

Verdict check_consensus(const Trace& trace, const ValidityProperty& val,
                        const InputConfiguration& c, const SystemParams& sys,
                        const ValueSpace& space, bool canonical, uint64_t budget) {
  Verdict v;
  std::vector<Value> decided;
  bool all_decided = true;
  bool single_kind = true;
  for (Proc p = 1; p <= sys.n; ++p) {
    if (trace.is_faulty(p)) continue;
    auto it = trace.decisions.find(p);
    if (it == trace.decisions.end()) {
      all_decided = false;
      continue;
    }
    if (it->second.second.kind != Decision::single) {
      single_kind = false;
      continue;
    }
    decided.push_back(it->second.second.value);
  }
  v.termination = all_decided && single_kind && !trace.horizon_exceeded;
  v.agreement = true;
  for (size_t i = 1; i < decided.size(); ++i)
    if (decided[i] != decided[0]) v.agreement = false;
  v.validity = single_kind;
  for (Value d : decided)
    if (!admissible(val, c, d, sys, space)) v.validity = false;
  if (!single_kind) v.notes += "non-value decision present;";
  if (canonical && !decided.empty()) {
    bool ok = true;
    std::set<Value> uniq(decided.begin(), decided.end());
    for (Value d : uniq) {
      bool everywhere = true;
      for_each_similar(c, sys, space, budget, [&](const InputConfiguration& cc) {
        if (!admissible(val, cc, d, sys, space)) {
          everywhere = false;
          return false;
        }
        return true;
      });
      if (!everywhere) ok = false;
    }
    v.canonical_similarity = ok;
  }
  if (!v.termination) v.notes += "not all correct processes decided;";
  if (!v.agreement) v.notes += "decisions disagree;";
  if (!v.validity) v.notes += "decision violates the validity property;";
  return v;
}

namespace {

class SilentAutomaton : public Automaton {
 public:
  void on_start(Context&) override {}
  void on_message(Context&, const Envelope&) override {}
};

bool in_list(const std::vector<Proc>& v, Proc p) {
  return std::find(v.begin(), v.end(), p) != v.end();
}

}  // namespace

AdversarySpec AdversarySpec::parse(const std::string& text) {
  AdversarySpec a;
  if (text.empty() || text == "none") {
    a.kind = none;
  } else if (text == "silent") {
    a.kind = silent;
  } else if (text.rfind("crash:", 0) == 0) {
    a.kind = crash;
    a.crash_time = std::stoll(text.substr(6));
  } else if (text.rfind("crash_at(", 0) == 0 && text.back() == ')') {
    a.kind = crash;
    a.crash_time = std::stoll(text.substr(9, text.size() - 10));
  } else if (text == "equivocate_leader") {
    a.kind = equivocate_leader;
  } else if (text == "lower_bound") {
    a.kind = lower_bound;
  } else if (text.rfind("lower_bound:", 0) == 0) {
    a.kind = lower_bound;
    a.fixed_value = static_cast<Value>(std::stol(text.substr(12)));
  } else {
    throw std::invalid_argument("unknown adversary: " + text);
  }
  return a;
}

std::string AdversarySpec::display() const {
  switch (kind) {
    case none: return "none";
    case silent: return "silent";
    case crash: return "crash:" + std::to_string(crash_time);
    case equivocate_leader: return "equivocate_leader";
    case lower_bound: return "lower_bound:" + std::to_string(fixed_value);
  }
  return "none";
}

void apply_adversary(RunSpec& spec, const AdversarySpec& adv,
                     const std::function<std::unique_ptr<Automaton>(Proc)>& base) {
  std::vector<Proc> faulty = spec.faulty;
  switch (adv.kind) {
    case AdversarySpec::none:
      spec.make_automaton = base;
      break;
    case AdversarySpec::silent:
      spec.make_automaton = [base, faulty](Proc p) -> std::unique_ptr<Automaton> {
        if (in_list(faulty, p)) return std::make_unique<SilentAutomaton>();
        return base(p);
      };
      break;
    case AdversarySpec::crash: {
      spec.make_automaton = base;
      Tick T = adv.crash_time;
      spec.send_filter = [faulty, T](Proc sender, Tick now, Proc, Msg&) {
        return !(in_list(faulty, sender) && now > T);
      };
      break;
    }
    case AdversarySpec::equivocate_leader: {
      spec.make_automaton = base;
      auto crypto = spec.crypto;
      spec.send_filter = [faulty, crypto](Proc sender, Tick, Proc to, Msg& m) {
        if (!in_list(faulty, sender)) return true;
        if (to % 2 == 0) return true;  // even receivers see the original
        // certificate-bearing payloads cannot be forged; equivocate by omission
        if (m.tsig || m.qc) return false;
        // otherwise flip the carried value/bit and re-sign as ourselves
        if (!m.pairs.empty())
          m.pairs[0].value = m.pairs[0].value == 0 ? 1 : 0;
        else if (!m.vals.empty())
          m.vals[0] = m.vals[0] == 0 ? 1 : 0;
        else
          m.b ^= 1;
        if (m.sig) {
          m.sig.reset();
          m.sig = crypto->sign(sender, m.bytes_for_signing());
        }
        return true;
      };
      break;
    }
    case AdversarySpec::lower_bound: {
      if (spec.net.gst != 0)
        throw std::invalid_argument("the lower-bound adversary runs with gst=0");
      int32_t expect = (spec.sys.t + 1) / 2;
      if (static_cast<int32_t>(faulty.size()) != expect)
        throw std::invalid_argument("lower_bound needs exactly ceil(t/2) faulty processes");
      spec.make_automaton = base;
      spec.send_filter = [faulty](Proc sender, Tick, Proc to, Msg&) {
        return !(in_list(faulty, sender) && in_list(faulty, to) && sender != to);
      };
      auto dropped = std::make_shared<std::map<Proc, int32_t>>();
      spec.deliver_filter = [faulty, expect, dropped](const Envelope& e) {
        if (!in_list(faulty, e.receiver) || e.sender == e.receiver) return true;
        auto& count = (*dropped)[e.receiver];
        if (count < expect) {
          count++;
          return false;
        }
        return true;
      };
      break;
    }
  }
}

}  // namespace validus
