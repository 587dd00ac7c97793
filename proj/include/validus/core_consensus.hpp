#pragma once

// The two consensus engines everything else builds on:
//
//  * ProvableCore: leader-based, three-phase (prepare/precommit/commit),
//    certificate-locking consensus over opaque value-proof pairs. Votes flow
//    replica->leader and proposals leader->replicas, so each view costs O(n)
//    messages. View v times out after 10*delta*2^(v-1) ticks from entry;
//    since every process starts at tick 0 and views advance only by timeout,
//    correct processes run views in lockstep. Decisions spread by a DECIDE
//    broadcast plus a one-shot relay (to everyone except self and source).
//
//  * BinaryBv: signature-free binary consensus (binding-value broadcast with
//    per-round rotating coordinator and a round-parity fallback). Decides b
//    in round r only when r mod 2 = b, which keeps deciders and continuers
//    aligned.
//
//  * BinarySig: binary consensus over ProvableCore; each bit is justified by
//    t+1 distinct proposal signatures, which an adversary controlling at
//    most t processes cannot forge for a bit no correct process proposed.
//
// Timer tags: ProvableCore uses tag_base + view, BinaryBv tag_base + round.

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>

#include "validus/simnet.hpp"

namespace validus {

constexpr int64_t kCoreTagBase = 100;

// Opaque value-proof pair: exactly one value part (vector, bit, or digest)
// plus whatever proof the instantiation uses.
struct VPPair {
  std::vector<ProcessProposal> vec;
  std::optional<Value> bit;
  std::optional<Digest> dig;
  std::optional<ThresholdSig> vtsig;               // proof: threshold signature
  std::vector<std::pair<Proc, Signature>> sigs;    // proof: signature set

  Bytes value_bytes() const;  // canonical encoding of the value part only
  void write_to(Msg& m) const;
  static VPPair read_from(const Msg& m);

  friend bool operator==(const VPPair& a, const VPPair& b) {
    return a.value_bytes() == b.value_bytes();
  }
};

using VerifyFn = std::function<bool(const VPPair&)>;

// Canonical bytes of a signed proposal statement "process j proposes v".
Bytes proposal_bytes(Proc j, Value v);
Signature sign_proposal(const Crypto& crypto, Proc j, Value v);
bool verify_signed_proposal(const Crypto& crypto, Proc j, Value v, const Signature& sig);

Digest pair_digest(const Crypto& crypto, const VPPair& pair);
// First eight digest bytes as a probe-friendly non-negative integer.
int64_t digest_probe_tag(const Digest& d);
Digest phase_digest(const Crypto& crypto, int32_t phase, int64_t view, const Digest& value_digest);
bool verify_qc(const Crypto& crypto, const QCData& qc, int32_t expected_phase, int32_t quorum);

Proc core_leader(int64_t view, int32_t n);
Tick core_view_timeout(int64_t view, Tick delta);

class ProvableCore {
 public:
  ProvableCore(VerifyFn verify, int64_t tag_base = kCoreTagBase)
      : verify_(std::move(verify)), tag_base_(tag_base) {}

  void start(Context& ctx, VPPair own);
  std::optional<VPPair> on_message(Context& ctx, const Envelope& env);
  bool on_timer(Context& ctx, int64_t tag);
  bool done() const { return done_; }
  int64_t view() const { return view_; }

 private:
  struct LeaderState {
    std::set<Proc> nv_senders;
    std::optional<QCData> best_qc;
    VPPair best_pair;
    bool have_pair = false;
    bool proposed = false;
    VPPair proposal_pair;
    Digest prop_digest;
    std::array<std::set<Proc>, 4> voters;       // indexed by phase
    std::array<std::vector<PartialSig>, 4> votes;
    std::array<bool, 4> qc_done{};
  };

  void enter_view(Context& ctx, int64_t v);
  void maybe_propose(Context& ctx, int64_t v);
  std::optional<VPPair> handle_vote(Context& ctx, const Envelope& env, int32_t phase);
  std::optional<VPPair> handle_decide(Context& ctx, const Envelope& env);
  void send_vote(Context& ctx, int64_t v, int32_t phase, const Digest& d);

  VerifyFn verify_;
  int64_t tag_base_;
  VPPair own_;
  bool started_ = false;
  bool done_ = false;
  int64_t view_ = 0;
  std::optional<QCData> prepare_high_;
  VPPair prepare_pair_;                      // pair certified by prepare_high_
  std::optional<QCData> locked_;
  std::map<int64_t, LeaderState> lead_;
  std::map<int64_t, VPPair> view_pair_;      // valid pair proposed in a view
  std::map<int64_t, Digest> view_digest_;
  std::map<int64_t, std::array<bool, 4>> voted_;
};

// One instance of signature-free binary consensus. Multiple instances
// coexist by carrying the instance id in Msg::orig.
class BinaryBv {
 public:
  BinaryBv(int64_t instance, int64_t tag_base) : instance_(instance), tag_base_(tag_base) {}

  void start(Context& ctx, Value b);
  std::optional<Value> on_message(Context& ctx, const Envelope& env);
  bool on_timer(Context& ctx, int64_t tag);

  bool started() const { return started_; }
  bool decided() const { return decided_; }
  Value decision() const { return decision_; }
  int64_t instance() const { return instance_; }
  int64_t round() const { return round_; }

 private:
  struct Round {
    std::array<std::set<Proc>, 2> est_from;
    std::array<bool, 2> est_sent{};
    std::array<bool, 2> bin{};
    bool coord_sent = false;
    std::optional<Value> coord_val;
    bool aux_sent = false;
    bool timer_set = false;
    bool timed_out = false;
    std::map<Proc, std::vector<Value>> aux;
    bool advanced = false;
  };

  Round& rnd(int64_t r) { return rounds_[r]; }
  void send_est(Context& ctx, int64_t r, Value w);
  void add_bin(Context& ctx, int64_t r, Value w);
  void maybe_aux(Context& ctx, int64_t r);
  void eval(Context& ctx);  // values / decide / advance for the current round
  void enter_round(Context& ctx, int64_t r);
  Msg base_msg(MsgType type, int64_t r) const;

  int64_t instance_;
  int64_t tag_base_;
  bool started_ = false;
  bool decided_ = false;
  Value decision_ = 0;
  bool decision_fresh_ = false;
  Value est_ = 0;
  int64_t round_ = 0;
  std::map<int64_t, Round> rounds_;
};

// Binary consensus over the provable core with (t+1)-signature justification.
class BinarySig {
 public:
  explicit BinarySig(int64_t tag_base = kCoreTagBase);

  void start(Context& ctx, Value b);
  std::optional<Value> on_message(Context& ctx, const Envelope& env);
  bool on_timer(Context& ctx, int64_t tag);
  bool decided() const { return decided_; }

 private:
  ProvableCore core_;
  bool started_ = false;
  bool core_started_ = false;
  bool decided_ = false;
  Value own_bit_ = 0;
  std::map<Proc, std::pair<Value, Signature>> gathered_;
};

}  // namespace validus
