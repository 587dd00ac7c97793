#pragma once

// Vector consensus: deciding a common input configuration of exactly n-t
// process-proposal pairs whose correct-process entries equal those processes'
// actual proposals (Vector Validity). Three interchangeable engines:
//
//  * AuthVectorCore (auth): gather the first n-t signed proposals, run the
//    provable core directly over (vector, signature-set) pairs. O(n^2)
//    messages after GST.
//
//  * NonauthVectorCore (nonauth): signature-free. Reliably broadcast the
//    proposal, run one binary instance per process; propose 1 for delivered
//    proposals, flip to proposing 0 everywhere else once n-t instances have
//    decided 1, then decide the n-t lowest-index 1-deciders.
//
//  * LowcommVectorCore (lowcomm): gather as in auth, but push the vector
//    through the staggered dissemination layer and run the core over
//    (digest, threshold-signature) certificates only; vectors travel the
//    quadratic-word dissemination path, never the core.
//
// Plus the two supporting layers lowcomm rests on:
//
//  * VectorDissemination: staggered broadcast of the vector, STORED
//    acknowledgements carrying partial signatures over its digest, CONFIRM
//    with the combined threshold signature. Every correct process acquires a
//    certified digest; at least t+1 correct processes cache its preimage.
//
//  * AddFallback: holders of a vector matching a validator digest broadcast
//    it once; everyone else accepts the first matching preimage.
//
// Timer tags: the core keeps kCoreTagBase + view, the slow broadcast uses
// kSlowTagBase + j, binary instance j uses kBinTagStride * j + round.

#include <map>
#include <memory>
#include <set>

#include "validus/broadcast.hpp"
#include "validus/core_consensus.hpp"

namespace validus {

constexpr int64_t kSlowTagBase = 400;
constexpr int64_t kBinTagStride = 4096;

Bytes vector_bytes(const std::vector<ProcessProposal>& vec);
Digest vector_digest(const Crypto& crypto, const std::vector<ProcessProposal>& vec);

// True iff every pair (P_j, v_j) in vec is covered by a valid signed
// proposal from P_j in sigs.
bool verify_vector_proof(const Crypto& crypto, const std::vector<ProcessProposal>& vec,
                         const std::vector<std::pair<Proc, Signature>>& sigs);

// Full check for a decidable vector: exactly n-t pairs, strictly increasing
// process indices within 1..n, proof valid.
bool valid_vector(const Crypto& crypto, const SystemParams& sys,
                  const std::vector<ProcessProposal>& vec,
                  const std::vector<std::pair<Proc, Signature>>& sigs);

enum class VectorBackend { auth, nonauth, lowcomm };

std::string to_string(VectorBackend b);
VectorBackend vector_backend_from_string(const std::string& s);

// Common face of the three engines, so callers can swap back ends.
class VectorCore {
 public:
  virtual ~VectorCore() = default;
  virtual void start(Context& ctx, Value proposal) = 0;
  // Returns the decided vector exactly once.
  virtual std::optional<std::vector<ProcessProposal>> on_message(Context& ctx,
                                                                 const Envelope& env) = 0;
  virtual bool on_timer(Context& ctx, int64_t tag) = 0;
  virtual bool decided() const = 0;
};

std::unique_ptr<VectorCore> make_vector_core(VectorBackend b);

class AuthVectorCore final : public VectorCore {
 public:
  void start(Context& ctx, Value proposal) override;
  std::optional<std::vector<ProcessProposal>> on_message(Context& ctx,
                                                         const Envelope& env) override;
  bool on_timer(Context& ctx, int64_t tag) override;
  bool decided() const override { return decided_; }

 private:
  ProvableCore core_{[](const VPPair&) { return false; }};
  bool started_ = false;
  bool core_started_ = false;
  bool decided_ = false;
  std::map<Proc, std::pair<Value, Signature>> gathered_;
};

// Staggered dissemination of one vector per process. The owner calls
// disseminate() once; every process feeds all messages through on_message().
// `accept` filters incoming vector payloads before they are cached and
// acknowledged (lowcomm rejects vectors without a valid proof here).
class VectorDissemination {
 public:
  using Accept = std::function<bool(Context&, const Msg&)>;

  explicit VectorDissemination(int64_t tag_base = kSlowTagBase)
      : slow_(tag_base) {}

  void set_accept(Accept accept) { accept_ = std::move(accept); }

  void disseminate(Context& ctx, std::vector<ProcessProposal> vec,
                   std::vector<std::pair<Proc, Signature>> sigs);

  // True when the envelope belonged to the dissemination layer.
  bool on_message(Context& ctx, const Envelope& env);
  bool on_timer(Context& ctx, int64_t tag);

  const std::optional<std::pair<Digest, ThresholdSig>>& acquired() const { return acquired_; }
  const std::vector<ProcessProposal>* preimage(const Digest& d) const;

 private:
  void acquire(Context& ctx, const Digest& d, const ThresholdSig& ts);

  Accept accept_;
  SlowBroadcaster slow_;
  bool disseminating_ = false;
  bool combined_ = false;
  bool confirm_sent_ = false;
  Digest own_digest_;
  std::vector<PartialSig> stored_;
  std::map<Digest, std::vector<ProcessProposal>> cache_;
  std::optional<std::pair<Digest, ThresholdSig>> acquired_;
};

// Naive retrieval fallback: holders broadcast, everyone accepts the first
// preimage of the validator digest. Needs t+1 correct holders.
class AddFallback {
 public:
  // vec = nullopt inputs "no preimage held".
  std::optional<std::vector<ProcessProposal>> input(
      Context& ctx, std::optional<std::vector<ProcessProposal>> vec, const Digest& validator);
  std::optional<std::vector<ProcessProposal>> on_message(Context& ctx, const Envelope& env);

 private:
  bool input_ = false;
  bool output_done_ = false;
  Digest validator_;
  std::map<Digest, std::vector<ProcessProposal>> pending_;
};

class LowcommVectorCore final : public VectorCore {
 public:
  void start(Context& ctx, Value proposal) override;
  std::optional<std::vector<ProcessProposal>> on_message(Context& ctx,
                                                         const Envelope& env) override;
  bool on_timer(Context& ctx, int64_t tag) override;
  bool decided() const override { return decided_; }

 private:
  std::optional<std::vector<ProcessProposal>> after_event(Context& ctx);

  ProvableCore core_{[](const VPPair&) { return false; }};
  VectorDissemination diss_;
  AddFallback add_;
  bool started_ = false;
  bool diss_started_ = false;
  bool core_started_ = false;
  bool decided_ = false;
  std::map<Proc, std::pair<Value, Signature>> gathered_;
  std::optional<Digest> target_;  // digest certified by the core decision
};

class NonauthVectorCore final : public VectorCore {
 public:
  void start(Context& ctx, Value proposal) override;
  std::optional<std::vector<ProcessProposal>> on_message(Context& ctx,
                                                         const Envelope& env) override;
  bool on_timer(Context& ctx, int64_t tag) override;
  bool decided() const override { return decided_; }

 private:
  void ensure_instances(Context& ctx);
  void propose_to(Context& ctx, Proc j, Value b);
  void sweep_bits(Context& ctx);

  BrbHub brb_;
  std::vector<std::unique_ptr<BinaryBv>> bins_;  // index j-1 drives instance j
  bool started_ = false;
  bool phase_one_ = true;
  bool decided_ = false;
  std::map<Proc, Value> delivered_;
  std::set<Proc> proposed_;
  std::map<Proc, Value> bits_;
};

}  // namespace validus
