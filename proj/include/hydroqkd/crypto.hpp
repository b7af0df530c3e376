#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "hydroqkd/bitops.hpp"

namespace hydroqkd::crypto {

struct Allocation {
  std::string purpose;
  std::size_t start_bit = 0;  // inclusive
  std::size_t end_bit = 0;    // exclusive
  std::uint64_t timestamp = 0;  // logical clock: allocation sequence number

  std::size_t size() const { return end_bit - start_bit; }
  friend bool operator==(const Allocation&, const Allocation&) = default;
};

// Use-once key material. Bits are handed out strictly in order; every
// allocation is recorded in an append-only ledger and no bit index is ever
// allocated twice. Single writer.
class KeyStore {
 public:
  KeyStore() = default;
  explicit KeyStore(std::vector<BitString> blocks);

  void add_block(const BitString& block);

  std::size_t total_bits() const noexcept { return material_.size(); }
  std::size_t consumed_offset() const noexcept { return consumed_; }
  std::size_t remaining() const noexcept { return material_.size() - consumed_; }

  // All-or-nothing: throws KeyExhausted and leaves the store unchanged when
  // fewer than `bits` remain.
  Allocation allocate(std::size_t bits, std::string purpose);

  // Key bits of an already-allocated range.
  BitString bits_of(const Allocation& a) const;

  const std::vector<Allocation>& ledger() const noexcept { return ledger_; }
  const std::vector<BitString>& blocks() const noexcept { return blocks_; }

  // Re-applies a persisted ledger. Entries must be contiguous from bit 0,
  // in order and inside the material; anything else is a LedgerConflict.
  void replay(const std::vector<Allocation>& entries);

  // The recorded allocation exactly covering [start, end), if any.
  const Allocation* find(std::size_t start_bit, std::size_t end_bit) const;

 private:
  std::vector<BitString> blocks_;
  BitString material_;
  std::size_t consumed_ = 0;
  std::uint64_t clock_ = 0;
  std::vector<Allocation> ledger_;
};

// Key file: one block per line, lowercase hex, bits MSB-first. A block whose
// length is not a multiple of four carries a "/<bits>" suffix.
std::string format_key_block(const BitString& block);
BitString parse_key_block(const std::string& line);
void write_key_file(std::ostream& out, const std::vector<BitString>& blocks);
std::vector<BitString> read_key_file(std::istream& in);

// Ledger file: "purpose,start_bit,end_bit,timestamp" per line; '#' lines ignored.
std::string format_ledger_entry(const Allocation& a);
std::vector<Allocation> read_ledger(std::istream& in);

struct OtpCiphertext {
  BitString bits;
  Allocation key_range;
};

OtpCiphertext otp_encrypt(const BitString& message, KeyStore& store);
BitString otp_decrypt(const BitString& ciphertext, const BitString& key_bits);

inline constexpr std::size_t kTagBits = 64;
inline constexpr std::size_t kNonceBits = 64;

// Carry-less product in GF(2^64) modulo x^64 + x^4 + x^3 + x + 1.
std::uint64_t gf64_mul(std::uint64_t a, std::uint64_t b);

// Polynomial-evaluation hash of the bit string at the point `key`. The bits
// are split into 64-bit blocks (last one zero-padded) followed by a length
// block, and evaluated by Horner's rule.
std::uint64_t poly_hash(const BitString& message, std::uint64_t key);

std::uint64_t to_u64(const BitString& bits);  // exactly 64 bits, MSB first
BitString from_u64(std::uint64_t v);

struct AuthenticatedMessage {
  BitString payload;
  BitString nonce;
  BitString tag;
  Allocation mask_range;
};

// tag = poly_hash(nonce || message, hash_key) XOR mask. Pure recomputation path.
BitString compute_tag(const BitString& message, const BitString& nonce, const BitString& hash_key,
                      const BitString& mask);

// Holds the session hash key and the nonce log. Each tag consumes 64 fresh
// mask bits from the store; the hash key is drawn once at construction.
class Authenticator {
 public:
  explicit Authenticator(KeyStore& store);

  // Throws NonceReuse for a nonce already seen in this session and
  // KeyExhausted when no mask bits remain; neither changes any state.
  AuthenticatedMessage tag(const BitString& message, const BitString& nonce);

  const Allocation& hash_key_range() const noexcept { return hash_key_range_; }

 private:
  KeyStore& store_;
  Allocation hash_key_range_;
  BitString hash_key_;
  std::set<std::uint64_t> nonces_;
};

// Verifier side: reads the hash key and mask from its copy of the store.
bool verify(const AuthenticatedMessage& msg, const KeyStore& store, const Allocation& hash_key_range);

enum class Mode { OTP, AUTH_ONLY };

// OTP iff the key rate strictly exceeds the bandwidth to protect.
Mode plan_mode(double skr_bps, double required_bandwidth_bps);

std::string_view mode_name(Mode m);

}  // namespace hydroqkd::crypto
