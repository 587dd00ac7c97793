#include "validus/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>

namespace validus {

std::string to_string(CryptoMode m) { return m == CryptoMode::fast ? "fast" : "real"; }

CryptoMode crypto_mode_from_string(const std::string& s) {
  if (s == "fast") return CryptoMode::fast;
  if (s == "real") return CryptoMode::real;
  throw std::invalid_argument("unknown crypto mode: " + s);
}

std::string Digest::hex() const {
  static const char* k = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (uint8_t b : bytes) {
    out.push_back(k[b >> 4]);
    out.push_back(k[b & 0xf]);
  }
  return out;
}

namespace {

// 4-lane mixing hash for fast mode. Not cryptographic; used only where the
// simulation is a closed world and verification is honest bookkeeping.
Digest fast_hash(const Bytes& data) {
  uint64_t lane[4] = {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                      0x082efa98ec4e6c89ULL};
  size_t i = 0;
  while (i < data.size()) {
    uint64_t w = 0;
    size_t take = std::min<size_t>(8, data.size() - i);
    std::memcpy(&w, data.data() + i, take);
    i += take;
    for (int l = 0; l < 4; ++l) lane[l] = mix64(lane[l], w + static_cast<uint64_t>(l));
  }
  for (int l = 0; l < 4; ++l) lane[l] = mix64(lane[l], data.size() * 2 + 1);
  Digest d;
  for (int l = 0; l < 4; ++l)
    for (int b = 0; b < 8; ++b) d.bytes[static_cast<size_t>(l * 8 + b)] =
        static_cast<uint8_t>(lane[l] >> (8 * b));
  return d;
}

uint64_t fast_tag(uint64_t key, const Bytes& msg) {
  Digest h = fast_hash(msg);
  uint64_t acc = key;
  for (int l = 0; l < 4; ++l) {
    uint64_t w = 0;
    std::memcpy(&w, h.bytes.data() + l * 8, 8);
    acc = mix64(acc, w);
  }
  return acc;
}

struct EvpKey {
  EVP_PKEY* p = nullptr;
  ~EvpKey() { EVP_PKEY_free(p); }
  EvpKey() = default;
  EvpKey(EvpKey&& o) noexcept : p(o.p) { o.p = nullptr; }
  EvpKey(const EvpKey&) = delete;
};

struct MdCtx {
  EVP_MD_CTX* p;
  MdCtx() : p(EVP_MD_CTX_new()) {
    if (!p) throw std::runtime_error("EVP_MD_CTX_new failed");
  }
  ~MdCtx() { EVP_MD_CTX_free(p); }
};

Bytes digest_domain(const Digest& d) {
  Bytes m;
  put_str(m, "thresh-partial");
  put_digest(m, d);
  return m;
}

}  // namespace

struct Crypto::Impl {
  std::vector<EvpKey> priv;  // index 0 unused; processes are 1-based
  std::vector<EvpKey> pub;
  std::vector<uint64_t> fast_sk;
};

Crypto::Crypto(CryptoMode mode, int32_t n, uint64_t seed)
    : mode_(mode), n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 1) throw std::invalid_argument("crypto requires n >= 1");
  if (mode_ == CryptoMode::fast) {
    impl_->fast_sk.resize(static_cast<size_t>(n) + 1);
    for (int32_t i = 1; i <= n; ++i)
      impl_->fast_sk[static_cast<size_t>(i)] = mix64(seed, 0x5ec5ec00ULL + static_cast<uint64_t>(i));
    return;
  }
  impl_->priv.resize(static_cast<size_t>(n) + 1);
  impl_->pub.resize(static_cast<size_t>(n) + 1);
  for (int32_t i = 1; i <= n; ++i) {
    SplitMix64 rng(mix64(seed, 0xed255190ULL + static_cast<uint64_t>(i)));
    uint8_t raw[32];
    for (int w = 0; w < 4; ++w) {
      uint64_t r = rng.next();
      for (int b = 0; b < 8; ++b) raw[w * 8 + b] = static_cast<uint8_t>(r >> (8 * b));
    }
    EVP_PKEY* sk = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, raw, 32);
    if (!sk) throw std::runtime_error("ed25519 private key construction failed");
    impl_->priv[static_cast<size_t>(i)].p = sk;
    uint8_t pubraw[32];
    size_t publen = sizeof pubraw;
    if (EVP_PKEY_get_raw_public_key(sk, pubraw, &publen) != 1)
      throw std::runtime_error("ed25519 public key extraction failed");
    EVP_PKEY* pk = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pubraw, publen);
    if (!pk) throw std::runtime_error("ed25519 public key construction failed");
    impl_->pub[static_cast<size_t>(i)].p = pk;
  }
}

Crypto::~Crypto() = default;

Digest Crypto::hash(const Bytes& data) const {
  if (mode_ == CryptoMode::fast) return fast_hash(data);
  Digest d;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != 32)
    throw std::runtime_error("sha256 failed");
  return d;
}

Signature Crypto::sign(Proc signer, const Bytes& msg) const {
  if (signer < 1 || signer > n_) throw std::out_of_range("signer out of range");
  Signature s;
  if (mode_ == CryptoMode::fast) {
    uint64_t tag = fast_tag(impl_->fast_sk[static_cast<size_t>(signer)], msg);
    for (int b = 0; b < 8; ++b) s.bytes.push_back(static_cast<uint8_t>(tag >> (8 * b)));
    return s;
  }
  MdCtx ctx;
  if (EVP_DigestSignInit(ctx.p, nullptr, nullptr, nullptr,
                         impl_->priv[static_cast<size_t>(signer)].p) != 1)
    throw std::runtime_error("sign init failed");
  size_t siglen = 64;
  s.bytes.resize(siglen);
  if (EVP_DigestSign(ctx.p, s.bytes.data(), &siglen, msg.data(), msg.size()) != 1)
    throw std::runtime_error("sign failed");
  s.bytes.resize(siglen);
  return s;
}

bool Crypto::verify(Proc signer, const Bytes& msg, const Signature& sig) const {
  if (signer < 1 || signer > n_) return false;
  if (mode_ == CryptoMode::fast) {
    if (sig.bytes.size() != 8) return false;
    uint64_t tag = fast_tag(impl_->fast_sk[static_cast<size_t>(signer)], msg);
    uint64_t got = 0;
    std::memcpy(&got, sig.bytes.data(), 8);
    return got == tag;
  }
  MdCtx ctx;
  if (EVP_DigestVerifyInit(ctx.p, nullptr, nullptr, nullptr,
                           impl_->pub[static_cast<size_t>(signer)].p) != 1)
    throw std::runtime_error("verify init failed");
  return EVP_DigestVerify(ctx.p, sig.bytes.data(), sig.bytes.size(), msg.data(), msg.size()) == 1;
}

PartialSig Crypto::partial_sign(Proc signer, const Digest& d) const {
  return {signer, d, sign(signer, digest_domain(d))};
}

bool Crypto::verify_partial(const PartialSig& p) const {
  return verify(p.signer, digest_domain(p.digest), p.sig);
}

ThresholdSig Crypto::combine(const std::vector<PartialSig>& partials, size_t k) const {
  if (partials.size() < k)
    throw CombineError(CombineError::insufficient_partials,
                       "need " + std::to_string(k) + " partials, got " +
                           std::to_string(partials.size()));
  for (size_t i = 1; i < partials.size(); ++i)
    if (partials[i].digest != partials[0].digest)
      throw CombineError(CombineError::mixed_digests, "partials cover more than one digest");
  std::vector<PartialSig> sorted = partials;
  std::sort(sorted.begin(), sorted.end(),
            [](const PartialSig& a, const PartialSig& b) { return a.signer < b.signer; });
  ThresholdSig ts;
  ts.digest = sorted[0].digest;
  for (auto& p : sorted) {
    if (!ts.parts.empty() && ts.parts.back().first == p.signer)
      throw CombineError(CombineError::invalid_partial,
                         "duplicate partial from P" + std::to_string(p.signer));
    if (!verify_partial(p))
      throw CombineError(CombineError::invalid_partial,
                         "partial from P" + std::to_string(p.signer) + " does not verify");
    ts.parts.emplace_back(p.signer, p.sig);
    if (ts.parts.size() == k) break;
  }
  return ts;
}

bool Crypto::verify_threshold(const ThresholdSig& ts, size_t k) const {
  if (ts.parts.size() < k) return false;
  for (size_t i = 0; i < ts.parts.size(); ++i) {
    if (i > 0 && ts.parts[i].first <= ts.parts[i - 1].first) return false;
    if (!verify_partial({ts.parts[i].first, ts.digest, ts.parts[i].second})) return false;
  }
  return true;
}

}  // namespace validus
