#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "hydroqkd/crypto.hpp"
#include "hydroqkd/error.hpp"

using namespace hydroqkd;
using namespace hydroqkd::crypto;

namespace {

BitString random_bits(std::mt19937_64& gen, std::size_t n) {
  BitString b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, gen() & 1);
  return b;
}

bool disjoint_and_ordered(const std::vector<Allocation>& ledger) {
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    if (ledger[i].end_bit <= ledger[i].start_bit) return false;
    for (std::size_t j = 0; j < i; ++j)
      if (ledger[i].start_bit < ledger[j].end_bit && ledger[j].start_bit < ledger[i].end_bit) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("otp worked example") {
  KeyStore store({encode_ascii7("key")});
  const auto ct = otp_encrypt(encode_ascii7("dam"), store);
  CHECK(ct.bits == BitString::parse("0001111 0000100 0010100"));
  CHECK(ct.key_range.start_bit == 0);
  CHECK(ct.key_range.end_bit == 21);
  CHECK(store.remaining() == 0);
  CHECK(decode_ascii7(otp_decrypt(ct.bits, store.bits_of(ct.key_range))) == "dam");
  CHECK(otp_decrypt(BitString::parse("0001111"), BitString::parse("1101011")) == BitString::parse("1100100"));
}

TEST_CASE("otp trivial cases") {
  KeyStore store({BitString::parse("1011")});
  const auto ct = otp_encrypt(BitString(), store);
  CHECK(ct.bits.empty());
  CHECK(store.consumed_offset() == 0);
  CHECK(store.ledger().empty());

  const BitString k = BitString::parse("1011001");
  CHECK(otp_decrypt(BitString(7), k) == k);
  const BitString c = BitString::parse("0110100");
  CHECK(bit_xor(bit_xor(c, k), k) == c);
  CHECK_THROWS_AS(otp_decrypt(BitString(6), k), LengthMismatch);
}

TEST_CASE("exhaustion is atomic") {
  KeyStore store({BitString(21)});
  otp_encrypt(BitString(15), store);
  const auto before = store.ledger();
  try {
    otp_encrypt(BitString(7), store);
    FAIL("expected KeyExhausted");
  } catch (const KeyExhausted& e) {
    CHECK(e.requested() == 7);
    CHECK(e.available() == 6);
  }
  CHECK(store.consumed_offset() == 15);
  CHECK(store.ledger() == before);
  CHECK_NOTHROW(otp_encrypt(BitString(6), store));
}

TEST_CASE("randomized operations never reuse key bits") {
  std::mt19937_64 gen(2024);
  KeyStore store;
  for (int i = 0; i < 40; ++i) store.add_block(random_bits(gen, 500));
  Authenticator auth(store);
  std::size_t failures = 0;
  for (int op = 0; op < 1000; ++op) {
    const std::size_t before = store.consumed_offset();
    const auto ledger_before = store.ledger().size();
    try {
      if (gen() % 3 == 0) {
        auth.tag(random_bits(gen, gen() % 200), from_u64(gen()));
      } else {
        otp_encrypt(random_bits(gen, gen() % 60), store);
      }
    } catch (const KeyExhausted&) {
      ++failures;
      CHECK(store.consumed_offset() == before);
      CHECK(store.ledger().size() == ledger_before);
    }
  }
  CHECK(failures > 0);
  CHECK(disjoint_and_ordered(store.ledger()));
  std::size_t covered = 0;
  for (const auto& a : store.ledger()) covered += a.size();
  CHECK(covered == store.consumed_offset());
}

TEST_CASE("one-time pad is a bijection on keys") {
  std::mt19937_64 gen(99);
  for (std::size_t n = 1; n <= 12; ++n) {
    const BitString message = random_bits(gen, n);
    std::vector<char> seen(std::size_t{1} << n, 0);
    for (std::uint64_t k = 0; k < (std::uint64_t{1} << n); ++k) {
      BitString key(n);
      for (std::size_t i = 0; i < n; ++i) key.set(i, (k >> i) & 1);
      const BitString c = otp_decrypt(message, key);
      std::uint64_t v = 0;
      for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t{c[i]} << i;
      ++seen[v];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](char c) { return c == 1; }));
  }
}

TEST_CASE("key file round trip") {
  std::mt19937_64 gen(4);
  std::vector<BitString> blocks{BitString::parse("11110000"), random_bits(gen, 21), random_bits(gen, 1000)};
  CHECK(format_key_block(BitString::parse("11110000")) == "f0");
  CHECK(format_key_block(BitString::parse("101")) == "a/3");
  std::stringstream ss;
  write_key_file(ss, blocks);
  CHECK(read_key_file(ss) == blocks);
  std::stringstream blank("\nf0\n\n");
  CHECK(read_key_file(blank) == std::vector<BitString>{BitString::parse("11110000")});
  CHECK_THROWS(parse_key_block("zz"));
  CHECK_THROWS(parse_key_block("f/9"));
}

TEST_CASE("ledger replay") {
  KeyStore store({BitString(100)});
  store.allocate(10, "otp");
  store.allocate(20, "auth-mask");
  std::stringstream ss;
  for (const auto& a : store.ledger()) ss << format_ledger_entry(a) << '\n';
  const auto entries = read_ledger(ss);
  CHECK(entries == store.ledger());

  KeyStore copy({BitString(100)});
  copy.replay(entries);
  CHECK(copy.consumed_offset() == 30);
  REQUIRE(copy.find(10, 30) != nullptr);
  CHECK(copy.find(10, 30)->purpose == "auth-mask");
  CHECK(copy.find(5, 30) == nullptr);

  KeyStore gap({BitString(100)});
  CHECK_THROWS_AS(gap.replay({{"otp", 5, 10, 0}}), LedgerConflict);
  KeyStore overflow({BitString(10)});
  CHECK_THROWS_AS(overflow.replay({{"otp", 0, 11, 0}}), LedgerConflict);
  CHECK_THROWS_AS(store.bits_of({"otp", 40, 50, 9}), LedgerConflict);
}

TEST_CASE("gf64 arithmetic") {
  CHECK(gf64_mul(1, 0xdeadbeefcafef00dULL) == 0xdeadbeefcafef00dULL);
  CHECK(gf64_mul(0, 12345) == 0);
  // x * x^63 = x^64 = x^4 + x^3 + x + 1.
  CHECK(gf64_mul(2, std::uint64_t{1} << 63) == 0x1B);
  CHECK(gf64_mul(std::uint64_t{1} << 32, std::uint64_t{1} << 32) == 0x1B);
  std::mt19937_64 gen(8);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t a = gen(), b = gen(), c = gen();
    CHECK(gf64_mul(a, b) == gf64_mul(b, a));
    CHECK(gf64_mul(a, b ^ c) == (gf64_mul(a, b) ^ gf64_mul(a, c)));
    CHECK(gf64_mul(gf64_mul(a, b), c) == gf64_mul(a, gf64_mul(b, c)));
  }
}

TEST_CASE("authentication tags") {
  std::mt19937_64 gen(31);
  KeyStore store;
  store.add_block(random_bits(gen, 64 * 40));
  Authenticator auth(store);
  const BitString msg = random_bits(gen, 100);
  const BitString nonce = from_u64(77);
  const auto m = auth.tag(msg, nonce);
  CHECK(m.tag.size() == kTagBits);
  CHECK(verify(m, store, auth.hash_key_range()));
  CHECK(compute_tag(msg, nonce, store.bits_of(auth.hash_key_range()), store.bits_of(m.mask_range)) == m.tag);

  const auto offset = store.consumed_offset();
  CHECK_THROWS_AS(auth.tag(msg, nonce), NonceReuse);
  CHECK(store.consumed_offset() == offset);
}

TEST_CASE("distinct messages give distinct tags under fixed keys") {
  std::mt19937_64 gen(55);
  const BitString hk = random_bits(gen, 64), mask = random_bits(gen, 64), nonce = random_bits(gen, 64);
  std::set<std::string> messages, tags;
  while (messages.size() < 1000) messages.insert(random_bits(gen, 1 + gen() % 300).to_string());
  for (const auto& s : messages) tags.insert(compute_tag(BitString::parse(s), nonce, hk, mask).to_string());
  CHECK(tags.size() == 1000);
}

TEST_CASE("single payload bit flips are rejected") {
  std::mt19937_64 gen(56);
  KeyStore store;
  store.add_block(random_bits(gen, 64 * 1100));
  Authenticator auth(store);
  int rejected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const BitString msg = random_bits(gen, 8 + gen() % 56);
    auto m = auth.tag(msg, from_u64(static_cast<std::uint64_t>(trial)));
    REQUIRE(verify(m, store, auth.hash_key_range()));
    m.payload.flip(gen() % msg.size());
    rejected += !verify(m, store, auth.hash_key_range());
  }
  CHECK(rejected == 1000);
}

TEST_CASE("plan mode") {
  CHECK(plan_mode(100000, 50000) == Mode::OTP);
  CHECK(plan_mode(50000, 100000) == Mode::AUTH_ONLY);
  CHECK(plan_mode(50000, 50000) == Mode::AUTH_ONLY);
  CHECK(mode_name(Mode::OTP) == "OTP");
  CHECK_THROWS(plan_mode(-1, 5));
}
