#pragma once

// Broadcast building blocks embedded inside protocol automata: best-effort
// broadcast, Byzantine reliable broadcast (echo quorum ceil((n+t+1)/2), ready
// amplification t+1, delivery 2t+1), and the staggered slow broadcast whose
// inter-send gap grows exponentially with the sender index.

#include <map>
#include <optional>
#include <set>

#include "validus/simnet.hpp"

namespace validus {

// Best-effort broadcast: one envelope per process, self included. No
// guarantees when the sender is faulty.
inline void beb_broadcast(Context& ctx, const Msg& m) { ctx.broadcast(m); }

struct BrbDelivery {
  Proc origin = 0;
  int64_t instance = 0;
  Msg content;
};

// All reliable-broadcast instances for one process, keyed by (origin,
// instance). The broadcast content is carried in the payload fields of the
// wire message; type/orig/a are overwritten for routing.
class BrbHub {
 public:
  void broadcast(Context& ctx, int64_t instance, Msg content);

  // Feed every incoming envelope; returns a delivery the first time the
  // ready quorum is reached for an instance. Non-BRB messages return nullopt.
  std::optional<BrbDelivery> on_message(Context& ctx, const Envelope& env);

 private:
  struct Instance {
    bool echoed = false;
    bool readied = false;
    bool delivered = false;
    std::map<Digest, std::set<Proc>> echoes, readies;
    std::map<Digest, Msg> contents;
  };
  std::map<std::pair<Proc, int64_t>, Instance> inst_;
};

// Sends a payload to P_1..P_n in index order with exactly delta * n^(i-1)
// ticks between consecutive sends, i being the sender index.
class SlowBroadcaster {
 public:
  explicit SlowBroadcaster(int64_t tag_base) : tag_base_(tag_base) {}

  static Tick gap(int32_t n, Proc i, Tick delta);

  void start(Context& ctx, Msg content);
  void stop() { active_ = false; }  // remaining sends are abandoned
  bool on_timer(Context& ctx, int64_t tag);  // true when the tag was ours

 private:
  int64_t tag_base_;
  Msg content_;
  bool active_ = false;
};

}  // namespace validus
