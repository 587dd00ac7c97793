#pragma once

// Hashing, per-process signatures, and (n-t)-threshold signatures.
//
// Two modes share one API:
//   real: SHA-256 digests and Ed25519 signatures (OpenSSL), with per-process
//         keys derived deterministically from the scenario seed.
//   fast: keyed 64-bit tags and a 4-lane mixing hash. Deterministic and
//         cheap, but only schedule-honest: it detects accidental corruption
//         and forged bytes in tests, not a cryptographic adversary.
//
// Threshold signatures are emulated as canonicalized multi-signature sets
// over a digest; they count as one word in the message accounting.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "validus/common.hpp"

namespace validus {

enum class CryptoMode { fast, real };

std::string to_string(CryptoMode m);
CryptoMode crypto_mode_from_string(const std::string& s);

struct Digest {
  std::array<uint8_t, 32> bytes{};

  friend bool operator==(const Digest& a, const Digest& b) { return a.bytes == b.bytes; }
  friend bool operator!=(const Digest& a, const Digest& b) { return !(a == b); }
  friend bool operator<(const Digest& a, const Digest& b) { return a.bytes < b.bytes; }
  std::string hex() const;
};

struct Signature {
  Bytes bytes;

  friend bool operator==(const Signature& a, const Signature& b) { return a.bytes == b.bytes; }
  friend bool operator<(const Signature& a, const Signature& b) { return a.bytes < b.bytes; }
};

struct PartialSig {
  Proc signer = 0;
  Digest digest;
  Signature sig;
};

// k distinct valid partials over one digest, sorted by signer.
struct ThresholdSig {
  Digest digest;
  std::vector<std::pair<Proc, Signature>> parts;

  friend bool operator==(const ThresholdSig& a, const ThresholdSig& b) {
    return a.digest == b.digest && a.parts == b.parts;
  }
};

struct CombineError : std::runtime_error {
  enum Kind { insufficient_partials, mixed_digests, invalid_partial } kind;
  CombineError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

class Crypto {
 public:
  // Keys for processes P_1..P_n, derived from the seed; two instances built
  // with the same arguments are interchangeable.
  Crypto(CryptoMode mode, int32_t n, uint64_t seed);
  ~Crypto();
  Crypto(const Crypto&) = delete;
  Crypto& operator=(const Crypto&) = delete;

  CryptoMode mode() const { return mode_; }
  int32_t n() const { return n_; }

  Digest hash(const Bytes& data) const;

  Signature sign(Proc signer, const Bytes& msg) const;
  bool verify(Proc signer, const Bytes& msg, const Signature& sig) const;

  PartialSig partial_sign(Proc signer, const Digest& d) const;
  bool verify_partial(const PartialSig& p) const;

  // Requires exactly >= k partials, all over one digest, all valid, distinct
  // signers. Throws CombineError otherwise. The result keeps the first k in
  // signer order.
  ThresholdSig combine(const std::vector<PartialSig>& partials, size_t k) const;
  bool verify_threshold(const ThresholdSig& ts, size_t k) const;

 private:
  struct Impl;
  CryptoMode mode_;
  int32_t n_;
  std::unique_ptr<Impl> impl_;
};

// Serialization of a digest used inside signed payloads.
inline void put_digest(Bytes& b, const Digest& d) {
  b.insert(b.end(), d.bytes.begin(), d.bytes.end());
}

}  // namespace validus
