#include "validus/core_consensus.hpp"

#include <algorithm>

namespace validus {

Bytes VPPair::value_bytes() const {
  Bytes b;
  put_u32(b, static_cast<uint32_t>(vec.size()));
  for (const auto& pp : vec) {
    put_i32(b, pp.process);
    put_i32(b, pp.value);
  }
  put_u8(b, bit ? 1 : 0);
  put_i32(b, bit ? *bit : 0);
  put_u8(b, dig ? 1 : 0);
  if (dig) put_digest(b, *dig);
  return b;
}

void VPPair::write_to(Msg& m) const {
  m.pairs = vec;
  m.vals.clear();
  if (bit) m.vals.push_back(*bit);
  m.digest = dig;
  m.tsig = vtsig;
  m.sigset = sigs;
}

VPPair VPPair::read_from(const Msg& m) {
  VPPair p;
  p.vec = m.pairs;
  if (!m.vals.empty()) p.bit = m.vals.front();
  p.dig = m.digest;
  p.vtsig = m.tsig;
  p.sigs = m.sigset;
  return p;
}

Bytes proposal_bytes(Proc j, Value v) {
  Msg m;
  m.type = MsgType::proposal;
  m.orig = j;
  m.vals = {v};
  return m.bytes_for_signing();
}

Signature sign_proposal(const Crypto& crypto, Proc j, Value v) {
  return crypto.sign(j, proposal_bytes(j, v));
}

bool verify_signed_proposal(const Crypto& crypto, Proc j, Value v, const Signature& sig) {
  return crypto.verify(j, proposal_bytes(j, v), sig);
}

Digest pair_digest(const Crypto& crypto, const VPPair& pair) {
  return crypto.hash(pair.value_bytes());
}

Digest phase_digest(const Crypto& crypto, int32_t phase, int64_t view, const Digest& value_digest) {
  Bytes b;
  put_i32(b, phase);
  put_i64(b, view);
  put_digest(b, value_digest);
  return crypto.hash(b);
}

bool verify_qc(const Crypto& crypto, const QCData& qc, int32_t expected_phase, int32_t quorum) {
  if (qc.phase != expected_phase) return false;
  if (qc.tsig.digest != phase_digest(crypto, qc.phase, qc.view, qc.digest)) return false;
  return crypto.verify_threshold(qc.tsig, static_cast<size_t>(quorum));
}

Proc core_leader(int64_t view, int32_t n) {
  return static_cast<Proc>((view - 1) % n) + 1;
}

int64_t digest_probe_tag(const Digest& d) {
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(d.bytes[i]) << (8 * i);
  return static_cast<int64_t>(x >> 1);
}

Tick core_view_timeout(int64_t view, Tick delta) {
  int64_t shift = std::min<int64_t>(view - 1, 40);
  return 10 * delta * (int64_t{1} << shift);
}

// ---------------------------------------------------------------- ProvableCore

void ProvableCore::start(Context& ctx, VPPair own) {
  own_ = std::move(own);
  started_ = true;
  enter_view(ctx, 1);
}

void ProvableCore::enter_view(Context& ctx, int64_t v) {
  view_ = v;
  ctx.probe("core_view", v);
  Msg nv;
  nv.type = MsgType::new_view;
  nv.a = v;
  if (prepare_high_) {
    prepare_pair_.write_to(nv);
    nv.qc = *prepare_high_;
  } else {
    own_.write_to(nv);
  }
  ctx.send(core_leader(v, ctx.sys().n), nv);
  ctx.set_timer(core_view_timeout(v, ctx.delta()), tag_base_ + v);
  if (core_leader(v, ctx.sys().n) == ctx.self()) maybe_propose(ctx, v);  // buffered entries
}

bool ProvableCore::on_timer(Context& ctx, int64_t tag) {
  if (tag <= tag_base_ || tag > tag_base_ + view_ + 1) return false;
  if (!done_ && started_ && tag == tag_base_ + view_) enter_view(ctx, view_ + 1);
  return true;
}

void ProvableCore::send_vote(Context& ctx, int64_t v, int32_t phase, const Digest& d) {
  Msg vote;
  vote.type = phase == kPhasePrepare    ? MsgType::vote_prepare
              : phase == kPhasePrecommit ? MsgType::vote_precommit
                                         : MsgType::vote_commit;
  vote.a = v;
  vote.b = phase;
  vote.digest = d;
  PartialSig ps = ctx.crypto().partial_sign(ctx.self(), phase_digest(ctx.crypto(), phase, v, d));
  vote.sig = ps.sig;
  ctx.send(core_leader(v, ctx.sys().n), vote);
  voted_[v][phase] = true;
}

std::optional<VPPair> ProvableCore::on_message(Context& ctx, const Envelope& env) {
  if (!started_) return std::nullopt;
  const Msg& m = env.payload;
  const int32_t n = ctx.sys().n;
  const int32_t quorum = ctx.sys().n - ctx.sys().t;

  switch (m.type) {
    case MsgType::new_view: {
      if (done_ || m.a < view_ || ctx.self() != core_leader(m.a, n)) break;
      LeaderState& ls = lead_[m.a];
      if (ls.proposed || ls.nv_senders.count(env.sender)) break;
      ls.nv_senders.insert(env.sender);
      VPPair pair = VPPair::read_from(m);
      bool pair_ok = verify_(pair);
      if (m.qc && pair_ok && verify_qc(ctx.crypto(), *m.qc, kPhasePrepare, quorum) &&
          m.qc->digest == pair_digest(ctx.crypto(), pair)) {
        if (!ls.best_qc || m.qc->view > ls.best_qc->view) {
          ls.best_qc = *m.qc;
          ls.best_pair = pair;
          ls.have_pair = true;
        }
      } else if (pair_ok && !ls.best_qc && !ls.have_pair) {
        ls.best_pair = pair;
        ls.have_pair = true;
      }
      maybe_propose(ctx, m.a);
      break;
    }
    case MsgType::propose: {
      if (done_) break;
      const int64_t v = m.a;
      if (v != view_ || env.sender != core_leader(v, n)) break;  // current view only
      if (view_pair_.count(v)) break;  // first proposal per view only
      VPPair pair = VPPair::read_from(m);
      if (!verify_(pair)) break;
      Digest d = pair_digest(ctx.crypto(), pair);
      view_pair_[v] = pair;
      view_digest_[v] = d;
      // the justify certificate must certify this very pair, or it cannot
      // override a lock
      bool justified = m.qc && m.qc->digest == d && m.qc->view < v &&
                       verify_qc(ctx.crypto(), *m.qc, kPhasePrepare, quorum);
      bool safe = !locked_ || d == locked_->digest ||
                  (justified && m.qc->view >= locked_->view);
      if (safe && !voted_[v][kPhasePrepare]) send_vote(ctx, v, kPhasePrepare, d);
      break;
    }
    case MsgType::vote_prepare:
      return handle_vote(ctx, env, kPhasePrepare);
    case MsgType::vote_precommit:
      return handle_vote(ctx, env, kPhasePrecommit);
    case MsgType::vote_commit:
      return handle_vote(ctx, env, kPhaseCommit);
    case MsgType::precommit: {
      if (done_) break;
      const int64_t v = m.a;
      if (v != view_ || env.sender != core_leader(v, n) || !m.qc) break;
      if (!verify_qc(ctx.crypto(), *m.qc, kPhasePrepare, quorum) || m.qc->view != v) break;
      auto it = view_pair_.find(v);
      if (it == view_pair_.end() || view_digest_[v] != m.qc->digest) break;
      if (!prepare_high_ || m.qc->view > prepare_high_->view) {
        prepare_high_ = *m.qc;
        prepare_pair_ = it->second;
      }
      if (!voted_[v][kPhasePrecommit]) send_vote(ctx, v, kPhasePrecommit, m.qc->digest);
      break;
    }
    case MsgType::commit: {
      if (done_) break;
      const int64_t v = m.a;
      if (v != view_ || env.sender != core_leader(v, n) || !m.qc) break;
      if (!verify_qc(ctx.crypto(), *m.qc, kPhasePrecommit, quorum) || m.qc->view != v) break;
      if (!view_pair_.count(v) || view_digest_[v] != m.qc->digest) break;
      if (!locked_ || m.qc->view >= locked_->view) {
        locked_ = *m.qc;
        ctx.probe("core_lock", v);
      }
      if (!voted_[v][kPhaseCommit]) send_vote(ctx, v, kPhaseCommit, m.qc->digest);
      break;
    }
    case MsgType::decide_relay:
      return handle_decide(ctx, env);
    default:
      break;
  }
  return std::nullopt;
}

void ProvableCore::maybe_propose(Context& ctx, int64_t v) {
  if (v != view_) return;  // propose only once the view is current
  LeaderState& ls = lead_[v];
  if (ls.proposed || !ls.have_pair) return;
  if (static_cast<int32_t>(ls.nv_senders.size()) < ctx.sys().n - ctx.sys().t) return;
  ls.proposed = true;
  ls.proposal_pair = ls.best_pair;
  ls.prop_digest = pair_digest(ctx.crypto(), ls.proposal_pair);
  Msg p;
  p.type = MsgType::propose;
  p.a = v;
  ls.proposal_pair.write_to(p);
  if (ls.best_qc) p.qc = *ls.best_qc;
  ctx.broadcast(p);
}

std::optional<VPPair> ProvableCore::handle_vote(Context& ctx, const Envelope& env, int32_t phase) {
  const Msg& m = env.payload;
  const int64_t v = m.a;
  if (done_ || v != view_ || ctx.self() != core_leader(v, ctx.sys().n)) return std::nullopt;
  if (m.b != phase || !m.digest || !m.sig) return std::nullopt;
  LeaderState& ls = lead_[v];
  if (!ls.proposed || ls.qc_done[phase] || *m.digest != ls.prop_digest) return std::nullopt;
  if (ls.voters[phase].count(env.sender)) return std::nullopt;
  PartialSig ps{env.sender, phase_digest(ctx.crypto(), phase, v, *m.digest), *m.sig};
  if (!ctx.crypto().verify_partial(ps)) return std::nullopt;
  ls.voters[phase].insert(env.sender);
  ls.votes[phase].push_back(ps);
  const size_t quorum = static_cast<size_t>(ctx.sys().n - ctx.sys().t);
  if (ls.votes[phase].size() < quorum) return std::nullopt;
  ls.qc_done[phase] = true;
  QCData qc{phase, v, ls.prop_digest, ctx.crypto().combine(ls.votes[phase], quorum)};
  ctx.probe("core_qc", v, phase);
  ctx.probe("core_qcd", v, digest_probe_tag(ls.prop_digest));
  if (phase == kPhasePrepare) {
    if (!prepare_high_ || v > prepare_high_->view) {
      prepare_high_ = qc;
      prepare_pair_ = ls.proposal_pair;
    }
    Msg out;
    out.type = MsgType::precommit;
    out.a = v;
    out.qc = qc;
    ctx.broadcast(out);
  } else if (phase == kPhasePrecommit) {
    Msg out;
    out.type = MsgType::commit;
    out.a = v;
    out.qc = qc;
    ctx.broadcast(out);
  } else {
    Msg out;
    out.type = MsgType::decide_relay;
    out.a = v;
    ls.proposal_pair.write_to(out);
    out.qc = qc;
    ctx.broadcast(out);
    done_ = true;
    ctx.probe("core_decide", v, digest_probe_tag(ls.prop_digest));
    return ls.proposal_pair;
  }
  return std::nullopt;
}

std::optional<VPPair> ProvableCore::handle_decide(Context& ctx, const Envelope& env) {
  if (done_) return std::nullopt;
  const Msg& m = env.payload;
  if (!m.qc || !verify_qc(ctx.crypto(), *m.qc, kPhaseCommit, ctx.sys().n - ctx.sys().t))
    return std::nullopt;
  VPPair pair = VPPair::read_from(m);
  if (pair_digest(ctx.crypto(), pair) != m.qc->digest || !verify_(pair)) return std::nullopt;
  done_ = true;
  ctx.probe("core_decide", m.qc->view, digest_probe_tag(m.qc->digest));
  Msg relay = m;
  for (Proc p = 1; p <= ctx.sys().n; ++p)
    if (p != ctx.self() && p != env.sender) ctx.send(p, relay);
  return pair;
}

// ---------------------------------------------------------------- BinaryBv

Msg BinaryBv::base_msg(MsgType type, int64_t r) const {
  Msg m;
  m.type = type;
  m.orig = static_cast<Proc>(instance_);
  m.a = r;
  return m;
}

void BinaryBv::start(Context& ctx, Value b) {
  started_ = true;
  est_ = b;
  enter_round(ctx, 1);
  eval(ctx);
}

void BinaryBv::enter_round(Context& ctx, int64_t r) {
  round_ = r;
  Round& rd = rnd(r);
  send_est(ctx, r, est_);
  if (!rd.timer_set) {
    rd.timer_set = true;
    ctx.set_timer(2 * ctx.delta() * (r + 2), tag_base_ + r);
  }
  maybe_aux(ctx, r);
}

void BinaryBv::send_est(Context& ctx, int64_t r, Value w) {
  Round& rd = rnd(r);
  if (w < 0 || w > 1 || rd.est_sent[w]) return;
  rd.est_sent[w] = true;
  Msg m = base_msg(MsgType::bv_val, r);
  m.vals = {w};
  ctx.broadcast(m);
}

void BinaryBv::add_bin(Context& ctx, int64_t r, Value w) {
  Round& rd = rnd(r);
  if (rd.bin[w]) return;
  rd.bin[w] = true;
  ctx.probe("bv_bin", instance_ * 1000 + r, w);
  // the round's coordinator announces the first value it sees
  if (ctx.self() == static_cast<Proc>((r - 1) % ctx.sys().n) + 1 && !rd.coord_sent) {
    rd.coord_sent = true;
    Msg m = base_msg(MsgType::bv_coord, r);
    m.vals = {w};
    ctx.broadcast(m);
  }
  maybe_aux(ctx, r);
  if (started_ && r == round_) eval(ctx);
}

void BinaryBv::maybe_aux(Context& ctx, int64_t r) {
  if (!started_ || r > round_) return;
  Round& rd = rnd(r);
  if (rd.aux_sent) return;
  std::vector<Value> payload;
  if (rd.coord_val && rd.bin[*rd.coord_val]) {
    payload = {*rd.coord_val};
  } else if (rd.timed_out) {
    if (rd.bin[0]) payload.push_back(0);
    if (rd.bin[1]) payload.push_back(1);
    if (payload.empty()) return;
  } else {
    return;
  }
  rd.aux_sent = true;
  Msg m = base_msg(MsgType::bv_aux, r);
  m.vals = payload;
  ctx.broadcast(m);
}

bool BinaryBv::on_timer(Context& ctx, int64_t tag) {
  int64_t r = tag - tag_base_;
  if (r < 1 || !rounds_.count(r)) return false;
  Round& rd = rnd(r);
  rd.timed_out = true;
  maybe_aux(ctx, r);
  return true;
}

std::optional<Value> BinaryBv::on_message(Context& ctx, const Envelope& env) {
  const Msg& m = env.payload;
  if (m.orig != static_cast<Proc>(instance_)) return std::nullopt;
  const int64_t r = m.a;
  if (r < 1 || m.vals.empty()) return std::nullopt;
  decision_fresh_ = false;

  switch (m.type) {
    case MsgType::bv_val: {
      Value w = m.vals.front();
      if (w < 0 || w > 1) break;
      Round& rd = rnd(r);
      if (!rd.est_from[w].insert(env.sender).second) break;
      int32_t cnt = static_cast<int32_t>(rd.est_from[w].size());
      if (cnt >= ctx.sys().t + 1) send_est(ctx, r, w);  // amplify
      if (cnt >= 2 * ctx.sys().t + 1) add_bin(ctx, r, w);
      break;
    }
    case MsgType::bv_coord: {
      if (env.sender != static_cast<Proc>((r - 1) % ctx.sys().n) + 1) break;
      Value w = m.vals.front();
      if (w < 0 || w > 1) break;
      Round& rd = rnd(r);
      if (!rd.coord_val) {
        rd.coord_val = w;
        maybe_aux(ctx, r);
      }
      break;
    }
    case MsgType::bv_aux: {
      Round& rd = rnd(r);
      if (rd.aux.count(env.sender)) break;
      std::vector<Value> s;
      for (Value w : m.vals)
        if (w >= 0 && w <= 1) s.push_back(w);
      if (s.empty()) break;
      rd.aux[env.sender] = s;
      if (started_ && r == round_) eval(ctx);
      break;
    }
    default:
      break;
  }
  if (decision_fresh_) {
    decision_fresh_ = false;
    return decision_;
  }
  return std::nullopt;
}

void BinaryBv::eval(Context& ctx) {
  for (;;) {
    Round& rd = rnd(round_);
    if (rd.advanced) return;
    maybe_aux(ctx, round_);
    // senders whose reported sets are confirmed by our own binding values
    std::array<bool, 2> uni{};
    int32_t qualifying = 0;
    for (const auto& [sender, set] : rd.aux) {
      bool ok = true;
      for (Value w : set)
        if (!rd.bin[w]) ok = false;
      if (!ok) continue;
      ++qualifying;
      for (Value w : set) uni[w] = true;
    }
    if (qualifying < ctx.sys().n - ctx.sys().t || (!uni[0] && !uni[1])) return;
    const Value parity = static_cast<Value>(round_ & 1);
    if (uni[0] != uni[1]) {
      const Value b = uni[1] ? 1 : 0;
      est_ = b;
      if (b == parity && !decided_) {
        decided_ = true;
        decision_ = b;
        decision_fresh_ = true;
        ctx.probe("bv_decide", instance_, b);
      }
    } else {
      est_ = parity;
    }
    rd.advanced = true;
    ctx.probe("bv_round", instance_, round_ + 1);
    enter_round(ctx, round_ + 1);
  }
}

// ---------------------------------------------------------------- BinarySig

BinarySig::BinarySig(int64_t tag_base) : core_([](const VPPair&) { return false; }, tag_base) {}

void BinarySig::start(Context& ctx, Value b) {
  started_ = true;
  own_bit_ = b;
  // rebind the verifier now that the crypto handle exists
  const int32_t t = ctx.sys().t;
  Crypto* crypto = &ctx.crypto();
  core_ = ProvableCore(
      [crypto, t](const VPPair& p) {
        if (!p.bit || *p.bit < 0 || *p.bit > 1) return false;
        std::set<Proc> seen;
        for (const auto& [j, sig] : p.sigs) {
          if (!verify_signed_proposal(*crypto, j, *p.bit, sig)) return false;
          seen.insert(j);
        }
        return static_cast<int32_t>(seen.size()) >= t + 1;
      },
      kCoreTagBase);
  Msg m;
  m.type = MsgType::proposal;
  m.orig = ctx.self();
  m.vals = {b};
  m.sig = sign_proposal(ctx.crypto(), ctx.self(), b);
  ctx.broadcast(m);
}

std::optional<Value> BinarySig::on_message(Context& ctx, const Envelope& env) {
  const Msg& m = env.payload;
  if (m.type == MsgType::proposal) {
    if (!started_ || core_started_) return std::nullopt;
    if (m.orig != env.sender || m.vals.size() != 1 || !m.sig) return std::nullopt;
    Value b = m.vals.front();
    if (b < 0 || b > 1 || gathered_.count(env.sender)) return std::nullopt;
    if (!verify_signed_proposal(ctx.crypto(), env.sender, b, *m.sig)) return std::nullopt;
    gathered_[env.sender] = {b, *m.sig};
    if (static_cast<int32_t>(gathered_.size()) < ctx.sys().n - ctx.sys().t) return std::nullopt;
    // n-t >= 2t+1 signatures over two bits: one bit has t+1 of them
    std::array<std::vector<std::pair<Proc, Signature>>, 2> by_bit;
    for (const auto& [j, bs] : gathered_) by_bit[bs.first].push_back({j, bs.second});
    Value chosen = own_bit_;
    if (static_cast<int32_t>(by_bit[chosen].size()) < ctx.sys().t + 1) chosen = 1 - chosen;
    VPPair pair;
    pair.bit = chosen;
    pair.sigs = by_bit[chosen];
    core_started_ = true;
    core_.start(ctx, pair);
    return std::nullopt;
  }
  if (!core_started_) return std::nullopt;
  auto decided = core_.on_message(ctx, env);
  if (decided && decided->bit) {
    decided_ = true;
    return *decided->bit;
  }
  return std::nullopt;
}

bool BinarySig::on_timer(Context& ctx, int64_t tag) {
  if (!core_started_) return false;
  return core_.on_timer(ctx, tag);
}

}  // namespace validus
