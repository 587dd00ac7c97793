#pragma once

// Wire messages shared by every protocol in the suite, with canonical
// serialization (for signing) and word accounting.
//
// Word accounting: a value, a signature, a threshold signature, and a digest
// each cost one word; a vector of k entries costs k words; a certificate
// costs two (digest + aggregate). Every envelope costs at least one word.

#include <optional>
#include <string>
#include <vector>

#include "validus/crypto.hpp"
#include "validus/validity.hpp"

namespace validus {

enum class MsgType {
  ping,           // test/diagnostic payload
  brb_send,       // reliable broadcast, sender announcement
  brb_echo,
  brb_ready,
  slow_cast,      // staggered broadcast payload
  proposal,       // signed proposal (vector building)
  new_view,       // leader-based core: view change carrying highest prepare cert
  propose,
  vote_prepare,
  precommit,
  vote_precommit,
  commit,
  vote_commit,
  decide_relay,
  bv_val,         // binary core: binding value broadcast
  bv_coord,
  bv_aux,
  stored,         // dissemination: storage acknowledgement
  confirm,
  add_share,      // retrieval fallback share
};

std::string to_string(MsgType t);

// Phase tags used inside certificates.
enum : int32_t { kPhasePrepare = 1, kPhasePrecommit = 2, kPhaseCommit = 3 };

// Certificate: an (n-t)-threshold signature over (phase, view, digest).
struct QCData {
  int32_t phase = 0;
  int64_t view = 0;
  Digest digest;
  ThresholdSig tsig;

  friend bool operator==(const QCData& x, const QCData& y) {
    return x.phase == y.phase && x.view == y.view && x.digest == y.digest && x.tsig == y.tsig;
  }
};

struct Msg {
  MsgType type = MsgType::ping;
  Proc orig = 0;   // logical originator where it differs from the envelope sender
  int64_t a = 0;   // view / round / stage, meaning fixed per type
  int64_t b = 0;   // small auxiliary integer (bit, phase, index)
  std::vector<ProcessProposal> pairs;  // vector payload
  std::vector<Value> vals;             // small value-set payload
  std::optional<Digest> digest;
  std::optional<Signature> sig;        // signature over bytes_for_signing()
  std::optional<ThresholdSig> tsig;
  std::vector<std::pair<Proc, Signature>> sigset;  // justification signature set
  std::optional<QCData> qc;

  uint32_t words() const;
  // Canonical encoding of everything except `sig` itself.
  Bytes bytes_for_signing() const;
};

void put_tsig(Bytes& b, const ThresholdSig& ts);
void put_qc(Bytes& b, const QCData& qc);

// What a process finally decides: a single value or a proposal vector.
struct Decision {
  enum Kind { single, vector } kind = single;
  Value value = 0;
  std::vector<ProcessProposal> pairs;

  std::string display() const;

  friend bool operator==(const Decision& a, const Decision& b) {
    return a.kind == b.kind && a.value == b.value && a.pairs == b.pairs;
  }
};

}  // namespace validus
