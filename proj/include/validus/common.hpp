#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace validus {

using Tick = int64_t;

// Process identifiers are 1-based indices, matching the P_1..P_n convention
// used throughout the protocol descriptions.
using Proc = int32_t;

using Bytes = std::vector<uint8_t>;

// Raised when an enumeration would exceed the configured budget.
struct BudgetExceeded : std::runtime_error {
  uint64_t requested;
  uint64_t budget;
  BudgetExceeded(uint64_t req, uint64_t cap)
      : std::runtime_error("enumeration budget exceeded: need " + std::to_string(req) +
                           " configurations, budget is " + std::to_string(cap)),
        requested(req), budget(cap) {}
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- deterministic little-endian serialization helpers ---

inline void put_u8(Bytes& b, uint8_t v) { b.push_back(v); }

inline void put_u32(Bytes& b, uint32_t v) {
  b.push_back(static_cast<uint8_t>(v));
  b.push_back(static_cast<uint8_t>(v >> 8));
  b.push_back(static_cast<uint8_t>(v >> 16));
  b.push_back(static_cast<uint8_t>(v >> 24));
}

inline void put_u64(Bytes& b, uint64_t v) {
  put_u32(b, static_cast<uint32_t>(v));
  put_u32(b, static_cast<uint32_t>(v >> 32));
}

inline void put_i32(Bytes& b, int32_t v) { put_u32(b, static_cast<uint32_t>(v)); }
inline void put_i64(Bytes& b, int64_t v) { put_u64(b, static_cast<uint64_t>(v)); }

inline void put_bytes(Bytes& b, const Bytes& v) {
  put_u32(b, static_cast<uint32_t>(v.size()));
  b.insert(b.end(), v.begin(), v.end());
}

inline void put_str(Bytes& b, const std::string& s) {
  put_u32(b, static_cast<uint32_t>(s.size()));
  b.insert(b.end(), s.begin(), s.end());
}

// --- deterministic RNG ---
// splitmix64: tiny, well-known, and fully specified, so simulation results do
// not depend on standard-library distribution internals.

struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [0, bound) by rejection; bound must be > 0.
  uint64_t below(uint64_t bound) {
    uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }
  // Uniform in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }
};

// Stateless mixing of several 64-bit words into one, used to derive
// independent deterministic streams (per process, per envelope, ...).
inline uint64_t mix64(uint64_t a, uint64_t b) {
  SplitMix64 m(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
  return m.next();
}

}  // namespace validus
