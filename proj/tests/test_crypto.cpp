#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "validus/crypto.hpp"

using namespace validus;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST_CASE("mode names round trip") {
  CHECK(to_string(CryptoMode::fast) == "fast");
  CHECK(to_string(CryptoMode::real) == "real");
  CHECK(crypto_mode_from_string("fast") == CryptoMode::fast);
  CHECK(crypto_mode_from_string("real") == CryptoMode::real);
  CHECK_THROWS_AS(crypto_mode_from_string("none"), std::invalid_argument);
}

TEST_CASE("hashing is deterministic and matches pinned digests") {
  Crypto fast(CryptoMode::fast, 4, 1);
  Crypto real(CryptoMode::real, 4, 1);

  CHECK(fast.hash(bytes_of("x")) == fast.hash(bytes_of("x")));
  CHECK(real.hash(bytes_of("x")) == real.hash(bytes_of("x")));

  // published sha-256 vectors
  CHECK(real.hash({}).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(real.hash(bytes_of("abc")).hex() ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  // frozen fast-mode empty-input digest
  CHECK(fast.hash({}).hex() == "6e3f27ebf371d9ef6d85dd832e338c430e2f14e7ed35e13d9cd455948567a678");
}

TEST_CASE("no digest collisions across a protocol-shaped corpus") {
  for (CryptoMode mode : {CryptoMode::fast, CryptoMode::real}) {
    Crypto c(mode, 4, 1);
    std::set<Digest> seen;
    for (int type = 0; type < 10; ++type)
      for (int view = 0; view < 50; ++view)
        for (int proc = 1; proc <= 20; ++proc) {
          Bytes m;
          put_u8(m, static_cast<uint8_t>(type));
          put_u32(m, static_cast<uint32_t>(view));
          put_i32(m, proc);
          seen.insert(c.hash(m));
        }
    CHECK(seen.size() == 10u * 50u * 20u);
  }
}

TEST_CASE("signature round trip, tampering, signer binding") {
  for (CryptoMode mode : {CryptoMode::fast, CryptoMode::real}) {
    CAPTURE(to_string(mode));
    Crypto c(mode, 4, 7);
    for (Proc p = 1; p <= 4; ++p) {
      Bytes m = bytes_of("view=3;value=1;from=" + std::to_string(p));
      auto sig = c.sign(p, m);
      CHECK(c.verify(p, m, sig));

      Bytes m2 = m;
      m2.back() ^= 1;
      CHECK_FALSE(c.verify(p, m2, sig));

      CHECK_FALSE(c.verify(p % 4 + 1, m, sig));

      auto bad = sig;
      bad.bytes[0] ^= 0x40;
      CHECK_FALSE(c.verify(p, m, bad));
      bad = sig;
      bad.bytes.pop_back();
      CHECK_FALSE(c.verify(p, m, bad));
    }
    CHECK_THROWS_AS(c.sign(0, bytes_of("m")), std::out_of_range);
    CHECK_THROWS_AS(c.sign(5, bytes_of("m")), std::out_of_range);
    CHECK_FALSE(c.verify(5, bytes_of("m"), Signature{}));
  }
}

TEST_CASE("keys derive deterministically from the seed") {
  for (CryptoMode mode : {CryptoMode::fast, CryptoMode::real}) {
    Crypto a(mode, 4, 42), b(mode, 4, 42), other(mode, 4, 43);
    Bytes m = bytes_of("payload");
    CHECK(a.sign(2, m) == b.sign(2, m));
    CHECK(b.verify(2, m, a.sign(2, m)));
    CHECK_FALSE(other.verify(2, m, a.sign(2, m)));
  }
}

TEST_CASE("threshold combine and verification") {
  for (CryptoMode mode : {CryptoMode::fast, CryptoMode::real}) {
    CAPTURE(to_string(mode));
    Crypto c(mode, 4, 9);
    Digest d = c.hash(bytes_of("decided-vector"));
    Digest d2 = c.hash(bytes_of("something-else"));

    std::vector<PartialSig> parts;
    for (Proc p = 1; p <= 3; ++p) parts.push_back(c.partial_sign(p, d));
    for (auto& p : parts) CHECK(c.verify_partial(p));

    auto ts = c.combine(parts, 3);
    CHECK(c.verify_threshold(ts, 3));
    CHECK(ts.parts.size() == 3);

    // too few partials
    try {
      c.combine({parts[0], parts[1]}, 3);
      FAIL("expected CombineError");
    } catch (const CombineError& e) {
      CHECK(e.kind == CombineError::insufficient_partials);
    }

    // one partial over a different digest
    try {
      c.combine({parts[0], parts[1], c.partial_sign(3, d2)}, 3);
      FAIL("expected CombineError");
    } catch (const CombineError& e) {
      CHECK(e.kind == CombineError::mixed_digests);
    }

    // duplicate signer
    try {
      c.combine({parts[0], parts[0], parts[1]}, 3);
      FAIL("expected CombineError");
    } catch (const CombineError& e) {
      CHECK(e.kind == CombineError::invalid_partial);
    }

    // forged partial
    auto forged = parts[2];
    forged.sig.bytes[3] ^= 0x11;
    try {
      c.combine({parts[0], parts[1], forged}, 3);
      FAIL("expected CombineError");
    } catch (const CombineError& e) {
      CHECK(e.kind == CombineError::invalid_partial);
    }

    // four partials collapse to the first three in signer order
    auto parts4 = parts;
    parts4.push_back(c.partial_sign(4, d));
    auto ts3 = c.combine(parts4, 3);
    CHECK(ts3.parts.size() == 3);
    CHECK(ts3.parts.back().first == 3);
    CHECK(c.verify_threshold(ts3, 3));

    // threshold checks bind the digest and every part
    auto wrong = ts;
    wrong.digest = d2;
    CHECK_FALSE(c.verify_threshold(wrong, 3));
    auto swapped = ts;
    swapped.parts[1].second.bytes[0] ^= 1;
    CHECK_FALSE(c.verify_threshold(swapped, 3));
    CHECK_FALSE(c.verify_threshold(ts, 4));
    auto unsorted = ts;
    std::swap(unsorted.parts[0], unsorted.parts[2]);
    CHECK_FALSE(c.verify_threshold(unsorted, 3));
  }
}
