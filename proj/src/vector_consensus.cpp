#include "validus/vector_consensus.hpp"

#include <algorithm>
#include <stdexcept>

namespace validus {

Bytes vector_bytes(const std::vector<ProcessProposal>& vec) {
  Bytes b;
  put_u32(b, static_cast<uint32_t>(vec.size()));
  for (const auto& pp : vec) {
    put_i32(b, pp.process);
    put_i32(b, pp.value);
  }
  return b;
}

Digest vector_digest(const Crypto& crypto, const std::vector<ProcessProposal>& vec) {
  return crypto.hash(vector_bytes(vec));
}

bool verify_vector_proof(const Crypto& crypto, const std::vector<ProcessProposal>& vec,
                         const std::vector<std::pair<Proc, Signature>>& sigs) {
  std::map<Proc, const Signature*> by_proc;
  for (const auto& [j, sig] : sigs) by_proc.emplace(j, &sig);
  for (const auto& pp : vec) {
    auto it = by_proc.find(pp.process);
    if (it == by_proc.end()) return false;
    if (!verify_signed_proposal(crypto, pp.process, pp.value, *it->second)) return false;
  }
  return true;
}

bool valid_vector(const Crypto& crypto, const SystemParams& sys,
                  const std::vector<ProcessProposal>& vec,
                  const std::vector<std::pair<Proc, Signature>>& sigs) {
  if (static_cast<int32_t>(vec.size()) != sys.n - sys.t) return false;
  Proc prev = 0;
  for (const auto& pp : vec) {
    if (pp.process <= prev || pp.process > sys.n) return false;
    prev = pp.process;
  }
  return verify_vector_proof(crypto, vec, sigs);
}

std::string to_string(VectorBackend b) {
  switch (b) {
    case VectorBackend::auth: return "auth";
    case VectorBackend::nonauth: return "nonauth";
    case VectorBackend::lowcomm: return "lowcomm";
  }
  return "auth";
}

VectorBackend vector_backend_from_string(const std::string& s) {
  if (s == "auth") return VectorBackend::auth;
  if (s == "nonauth") return VectorBackend::nonauth;
  if (s == "lowcomm") return VectorBackend::lowcomm;
  throw std::invalid_argument("unknown vector backend: " + s);
}

std::unique_ptr<VectorCore> make_vector_core(VectorBackend b) {
  switch (b) {
    case VectorBackend::auth: return std::make_unique<AuthVectorCore>();
    case VectorBackend::nonauth: return std::make_unique<NonauthVectorCore>();
    case VectorBackend::lowcomm: return std::make_unique<LowcommVectorCore>();
  }
  return nullptr;
}

// ------------------------------------------------------------- AuthVectorCore

void AuthVectorCore::start(Context& ctx, Value proposal) {
  started_ = true;
  const SystemParams sys = ctx.sys();
  Crypto* crypto = &ctx.crypto();
  core_ = ProvableCore(
      [crypto, sys](const VPPair& p) {
        return !p.bit && !p.dig && valid_vector(*crypto, sys, p.vec, p.sigs);
      },
      kCoreTagBase);
  Msg m;
  m.type = MsgType::proposal;
  m.orig = ctx.self();
  m.vals = {proposal};
  m.sig = sign_proposal(ctx.crypto(), ctx.self(), proposal);
  ctx.broadcast(m);
}

std::optional<std::vector<ProcessProposal>> AuthVectorCore::on_message(Context& ctx,
                                                                       const Envelope& env) {
  const Msg& m = env.payload;
  const int32_t quorum = ctx.sys().n - ctx.sys().t;
  if (m.type == MsgType::proposal) {
    if (!started_ || core_started_) return std::nullopt;
    if (m.orig != env.sender || m.vals.size() != 1 || !m.sig) return std::nullopt;
    if (gathered_.count(env.sender)) return std::nullopt;
    if (!verify_signed_proposal(ctx.crypto(), env.sender, m.vals.front(), *m.sig))
      return std::nullopt;
    gathered_[env.sender] = {m.vals.front(), *m.sig};
    if (static_cast<int32_t>(gathered_.size()) < quorum) return std::nullopt;
    VPPair pair;
    for (const auto& [j, vs] : gathered_) {
      pair.vec.push_back({j, vs.first});
      pair.sigs.push_back({j, vs.second});
    }
    core_started_ = true;
    core_.start(ctx, pair);
    return std::nullopt;
  }
  if (!core_started_) return std::nullopt;
  auto d = core_.on_message(ctx, env);
  if (d && !decided_) {
    decided_ = true;
    return d->vec;
  }
  return std::nullopt;
}

bool AuthVectorCore::on_timer(Context& ctx, int64_t tag) {
  if (!core_started_) return false;
  return core_.on_timer(ctx, tag);
}

// -------------------------------------------------------- VectorDissemination

void VectorDissemination::disseminate(Context& ctx, std::vector<ProcessProposal> vec,
                                      std::vector<std::pair<Proc, Signature>> sigs) {
  if (disseminating_) throw std::logic_error("disseminate called twice");
  disseminating_ = true;
  own_digest_ = vector_digest(ctx.crypto(), vec);
  if (!cache_.count(own_digest_)) {
    ctx.probe("cache", digest_probe_tag(own_digest_));
    cache_.emplace(own_digest_, vec);
  }
  Msg m;
  m.pairs = std::move(vec);
  m.sigset = std::move(sigs);
  slow_.start(ctx, m);
}

const std::vector<ProcessProposal>* VectorDissemination::preimage(const Digest& d) const {
  auto it = cache_.find(d);
  return it == cache_.end() ? nullptr : &it->second;
}

void VectorDissemination::acquire(Context& ctx, const Digest& d, const ThresholdSig& ts) {
  acquired_ = {d, ts};
  ctx.probe("acquire", digest_probe_tag(d));
  slow_.stop();
}

bool VectorDissemination::on_message(Context& ctx, const Envelope& env) {
  const Msg& m = env.payload;
  const size_t quorum = static_cast<size_t>(ctx.sys().n - ctx.sys().t);
  switch (m.type) {
    case MsgType::slow_cast: {
      if (m.pairs.empty()) return true;
      if (accept_ && !accept_(ctx, m)) return true;
      Digest h = vector_digest(ctx.crypto(), m.pairs);
      if (!cache_.count(h)) {
        ctx.probe("cache", digest_probe_tag(h));
        cache_.emplace(h, m.pairs);
      }
      // storage acknowledgement: digest + partial signature, two words
      Msg r;
      r.type = MsgType::stored;
      r.digest = h;
      r.sig = ctx.crypto().partial_sign(ctx.self(), h).sig;
      ctx.send(env.sender, r);
      return true;
    }
    case MsgType::stored: {
      if (!disseminating_ || combined_ || acquired_) return true;
      if (!m.digest || !m.sig || *m.digest != own_digest_) return true;
      PartialSig ps{env.sender, own_digest_, *m.sig};
      if (!ctx.crypto().verify_partial(ps)) return true;  // forged partials never count
      for (const auto& have : stored_)
        if (have.signer == env.sender) return true;
      stored_.push_back(ps);
      if (stored_.size() < quorum) return true;
      combined_ = true;
      ThresholdSig ts = ctx.crypto().combine(stored_, quorum);
      Msg c;
      c.type = MsgType::confirm;
      c.digest = own_digest_;
      c.tsig = ts;
      confirm_sent_ = true;
      ctx.broadcast(c);
      acquire(ctx, own_digest_, ts);
      return true;
    }
    case MsgType::confirm: {
      if (!m.digest || !m.tsig) return true;
      if (m.tsig->digest != *m.digest) return true;
      if (!ctx.crypto().verify_threshold(*m.tsig, quorum)) return true;
      if (!acquired_) acquire(ctx, *m.digest, *m.tsig);
      if (!confirm_sent_) {
        confirm_sent_ = true;
        Msg c;
        c.type = MsgType::confirm;
        c.digest = *m.digest;
        c.tsig = *m.tsig;
        ctx.broadcast(c);
      }
      return true;
    }
    default:
      return false;
  }
}

bool VectorDissemination::on_timer(Context& ctx, int64_t tag) {
  return slow_.on_timer(ctx, tag);
}

// ---------------------------------------------------------------- AddFallback

std::optional<std::vector<ProcessProposal>> AddFallback::input(
    Context& ctx, std::optional<std::vector<ProcessProposal>> vec, const Digest& validator) {
  if (input_) return std::nullopt;
  input_ = true;
  validator_ = validator;
  if (vec && vector_digest(ctx.crypto(), *vec) == validator) {
    Msg m;
    m.type = MsgType::add_share;
    m.digest = validator;
    m.pairs = *vec;
    ctx.broadcast(m);
    output_done_ = true;
    return vec;
  }
  auto it = pending_.find(validator);
  if (it != pending_.end()) {
    output_done_ = true;
    return it->second;
  }
  return std::nullopt;
}

std::optional<std::vector<ProcessProposal>> AddFallback::on_message(Context& ctx,
                                                                    const Envelope& env) {
  const Msg& m = env.payload;
  if (m.type != MsgType::add_share || !m.digest || m.pairs.empty()) return std::nullopt;
  if (vector_digest(ctx.crypto(), m.pairs) != *m.digest) return std::nullopt;
  if (!input_) {
    pending_.emplace(*m.digest, m.pairs);  // keep the first preimage per digest
    return std::nullopt;
  }
  if (!output_done_ && *m.digest == validator_) {
    output_done_ = true;
    return m.pairs;
  }
  return std::nullopt;
}

// ---------------------------------------------------------- LowcommVectorCore

void LowcommVectorCore::start(Context& ctx, Value proposal) {
  started_ = true;
  const SystemParams sys = ctx.sys();
  const size_t quorum = static_cast<size_t>(sys.n - sys.t);
  Crypto* crypto = &ctx.crypto();
  // the core carries only (digest, threshold signature) certificates
  core_ = ProvableCore(
      [crypto, quorum](const VPPair& p) {
        return p.vec.empty() && !p.bit && p.dig && p.vtsig && p.vtsig->digest == *p.dig &&
               crypto->verify_threshold(*p.vtsig, quorum);
      },
      kCoreTagBase);
  // vectors without a valid proof are never cached or acknowledged
  diss_.set_accept([crypto, sys](Context& c, const Msg& m) {
    (void)c;
    return valid_vector(*crypto, sys, m.pairs, m.sigset);
  });
  Msg m;
  m.type = MsgType::proposal;
  m.orig = ctx.self();
  m.vals = {proposal};
  m.sig = sign_proposal(ctx.crypto(), ctx.self(), proposal);
  ctx.broadcast(m);
}

std::optional<std::vector<ProcessProposal>> LowcommVectorCore::after_event(Context& ctx) {
  if (started_ && !core_started_ && diss_.acquired()) {
    core_started_ = true;
    VPPair p;
    p.dig = diss_.acquired()->first;
    p.vtsig = diss_.acquired()->second;
    core_.start(ctx, p);
  }
  return std::nullopt;
}

std::optional<std::vector<ProcessProposal>> LowcommVectorCore::on_message(Context& ctx,
                                                                          const Envelope& env) {
  const Msg& m = env.payload;
  const int32_t quorum = ctx.sys().n - ctx.sys().t;
  switch (m.type) {
    case MsgType::proposal: {
      if (!started_ || diss_started_) return std::nullopt;
      if (m.orig != env.sender || m.vals.size() != 1 || !m.sig) return std::nullopt;
      if (gathered_.count(env.sender)) return std::nullopt;
      if (!verify_signed_proposal(ctx.crypto(), env.sender, m.vals.front(), *m.sig))
        return std::nullopt;
      gathered_[env.sender] = {m.vals.front(), *m.sig};
      if (static_cast<int32_t>(gathered_.size()) < quorum) return std::nullopt;
      std::vector<ProcessProposal> vec;
      std::vector<std::pair<Proc, Signature>> sigs;
      for (const auto& [j, vs] : gathered_) {
        vec.push_back({j, vs.first});
        sigs.push_back({j, vs.second});
      }
      diss_started_ = true;
      diss_.disseminate(ctx, std::move(vec), std::move(sigs));
      return after_event(ctx);
    }
    case MsgType::slow_cast:
    case MsgType::stored:
    case MsgType::confirm:
      diss_.on_message(ctx, env);
      return after_event(ctx);
    case MsgType::add_share: {
      auto out = add_.on_message(ctx, env);
      if (out && !decided_) {
        decided_ = true;
        return out;
      }
      return std::nullopt;
    }
    default: {
      if (!core_started_) return std::nullopt;
      auto d = core_.on_message(ctx, env);
      if (!d || !d->dig || target_) return std::nullopt;
      target_ = *d->dig;
      ctx.probe("lowcomm_core", digest_probe_tag(*target_));
      // holders feed the preimage into the retrieval fallback, others wait
      std::optional<std::vector<ProcessProposal>> held;
      if (const auto* pre = diss_.preimage(*target_)) held = *pre;
      auto out = add_.input(ctx, std::move(held), *target_);
      if (out && !decided_) {
        decided_ = true;
        return out;
      }
      return std::nullopt;
    }
  }
}

bool LowcommVectorCore::on_timer(Context& ctx, int64_t tag) {
  bool used = diss_.on_timer(ctx, tag);
  if (core_started_ && core_.on_timer(ctx, tag)) used = true;
  return used;
}

// -------------------------------------------------------- NonauthVectorCore

void NonauthVectorCore::ensure_instances(Context& ctx) {
  if (!bins_.empty()) return;
  for (Proc j = 1; j <= ctx.sys().n; ++j)
    bins_.push_back(std::make_unique<BinaryBv>(j, kBinTagStride * j));
}

void NonauthVectorCore::propose_to(Context& ctx, Proc j, Value b) {
  proposed_.insert(j);
  bins_[j - 1]->start(ctx, b);
}

void NonauthVectorCore::start(Context& ctx, Value proposal) {
  started_ = true;
  ensure_instances(ctx);
  Msg c;
  c.vals = {proposal};
  brb_.broadcast(ctx, 0, c);
  // deliveries that raced ahead of our start
  for (const auto& [j, v] : delivered_) {
    (void)v;
    if (phase_one_ && !proposed_.count(j)) propose_to(ctx, j, 1);
  }
  sweep_bits(ctx);
}

void NonauthVectorCore::sweep_bits(Context& ctx) {
  for (;;) {
    bool changed = false;
    for (Proc j = 1; j <= ctx.sys().n; ++j) {
      if (bins_[j - 1]->decided() && !bits_.count(j)) {
        bits_[j] = bins_[j - 1]->decision();
        changed = true;
      }
    }
    if (started_ && phase_one_) {
      int32_t ones = 0;
      for (const auto& [j, b] : bits_)
        if (b == 1) ++ones;
      if (ones >= ctx.sys().n - ctx.sys().t) {
        // second phase: vote down everything not yet proposed to
        phase_one_ = false;
        changed = true;
        for (Proc k = 1; k <= ctx.sys().n; ++k)
          if (!proposed_.count(k)) propose_to(ctx, k, 0);
      }
    }
    if (!changed) return;
  }
}

std::optional<std::vector<ProcessProposal>> NonauthVectorCore::on_message(Context& ctx,
                                                                          const Envelope& env) {
  ensure_instances(ctx);
  const Msg& m = env.payload;
  switch (m.type) {
    case MsgType::brb_send:
    case MsgType::brb_echo:
    case MsgType::brb_ready: {
      auto d = brb_.on_message(ctx, env);
      if (d && d->instance == 0 && !d->content.vals.empty() && !delivered_.count(d->origin)) {
        delivered_[d->origin] = d->content.vals.front();
        if (started_ && phase_one_ && !proposed_.count(d->origin))
          propose_to(ctx, d->origin, 1);
      }
      break;
    }
    case MsgType::bv_val:
    case MsgType::bv_coord:
    case MsgType::bv_aux: {
      Proc j = m.orig;
      if (j >= 1 && j <= ctx.sys().n) bins_[j - 1]->on_message(ctx, env);
      break;
    }
    default:
      return std::nullopt;
  }
  sweep_bits(ctx);
  if (decided_ || !started_) return std::nullopt;
  if (bits_.size() != bins_.size()) return std::nullopt;
  const size_t quorum = static_cast<size_t>(ctx.sys().n - ctx.sys().t);
  std::vector<Proc> ones;
  for (const auto& [j, b] : bits_)
    if (b == 1) ones.push_back(j);  // ascending index: the common order
  if (ones.size() < quorum) return std::nullopt;
  std::vector<ProcessProposal> vec;
  for (size_t k = 0; k < quorum; ++k) {
    auto it = delivered_.find(ones[k]);
    if (it == delivered_.end()) return std::nullopt;  // totality will catch up
    vec.push_back({ones[k], it->second});
  }
  decided_ = true;
  return vec;
}

bool NonauthVectorCore::on_timer(Context& ctx, int64_t tag) {
  if (bins_.empty()) return false;
  Proc j = static_cast<Proc>(tag / kBinTagStride);
  if (j < 1 || j > ctx.sys().n) return false;
  return bins_[j - 1]->on_timer(ctx, tag);
}

}  // namespace validus
