#include "hydroqkd/crypto.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "hydroqkd/error.hpp"

namespace hydroqkd::crypto {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& field, const std::string& what) {
  std::size_t v = 0;
  const auto* end = field.data() + field.size();
  const auto r = std::from_chars(field.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end) throw LedgerConflict("malformed " + what + ": '" + field + "'");
  return v;
}

}  // namespace

KeyStore::KeyStore(std::vector<BitString> blocks) {
  for (const auto& b : blocks) add_block(b);
}

void KeyStore::add_block(const BitString& block) {
  blocks_.push_back(block);
  material_.append(block);
}

Allocation KeyStore::allocate(std::size_t bits, std::string purpose) {
  if (bits > remaining()) throw KeyExhausted(bits, remaining());
  Allocation a{std::move(purpose), consumed_, consumed_ + bits, clock_};
  ledger_.push_back(a);
  consumed_ += bits;
  ++clock_;
  return a;
}

BitString KeyStore::bits_of(const Allocation& a) const {
  if (a.end_bit < a.start_bit || a.end_bit > consumed_) {
    throw LedgerConflict("range [" + std::to_string(a.start_bit) + ", " + std::to_string(a.end_bit) +
                         ") has not been allocated");
  }
  return material_.slice(a.start_bit, a.size());
}

void KeyStore::replay(const std::vector<Allocation>& entries) {
  std::size_t offset = consumed_;
  std::uint64_t clock = clock_;
  for (const auto& e : entries) {
    if (e.start_bit != offset || e.end_bit < e.start_bit) {
      throw LedgerConflict("ledger entry [" + std::to_string(e.start_bit) + ", " + std::to_string(e.end_bit) +
                           ") is not contiguous with offset " + std::to_string(offset));
    }
    if (e.end_bit > material_.size()) {
      throw LedgerConflict("ledger entry ends at bit " + std::to_string(e.end_bit) + " beyond key material of " +
                           std::to_string(material_.size()) + " bits");
    }
    offset = e.end_bit;
    clock = std::max(clock, e.timestamp + 1);
  }
  ledger_.insert(ledger_.end(), entries.begin(), entries.end());
  consumed_ = offset;
  clock_ = clock;
}

const Allocation* KeyStore::find(std::size_t start_bit, std::size_t end_bit) const {
  for (const auto& a : ledger_) {
    if (a.start_bit == start_bit && a.end_bit == end_bit) return &a;
  }
  return nullptr;
}

std::string format_key_block(const BitString& block) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < block.size(); i += 4) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      nibble <<= 1;
      if (i + b < block.size() && block[i + b]) nibble |= 1;
    }
    out.push_back(kHex[nibble]);
  }
  if (block.size() % 4 != 0) out += "/" + std::to_string(block.size());
  return out;
}

BitString parse_key_block(const std::string& raw) {
  const std::string line = trim(raw);
  const auto slash = line.find('/');
  const std::string hex = line.substr(0, slash);
  BitString bits;
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char c = hex[i];
    unsigned v = 0;
    if (c >= '0' && c <= '9') {
      v = static_cast<unsigned>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v = static_cast<unsigned>(c - 'a' + 10);
    } else {
      throw EncodingError("key file: invalid hex digit at column " + std::to_string(i), i);
    }
    for (int b = 3; b >= 0; --b) bits.push_back(((v >> b) & 1U) != 0);
  }
  if (slash != std::string::npos) {
    std::size_t n = 0;
    const std::string len = line.substr(slash + 1);
    const auto r = std::from_chars(len.data(), len.data() + len.size(), n);
    if (r.ec != std::errc{} || r.ptr != len.data() + len.size() || n > bits.size() || n + 4 <= bits.size()) {
      throw EncodingError("key file: invalid bit-length suffix '" + len + "'", slash);
    }
    bits = bits.slice(0, n);
  }
  return bits;
}

void write_key_file(std::ostream& out, const std::vector<BitString>& blocks) {
  for (const auto& b : blocks) out << format_key_block(b) << '\n';
}

std::vector<BitString> read_key_file(std::istream& in) {
  std::vector<BitString> blocks;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    blocks.push_back(parse_key_block(line));
  }
  return blocks;
}

std::string format_ledger_entry(const Allocation& a) {
  return a.purpose + "," + std::to_string(a.start_bit) + "," + std::to_string(a.end_bit) + "," +
         std::to_string(a.timestamp);
}

std::vector<Allocation> read_ledger(std::istream& in) {
  std::vector<Allocation> entries;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 4) throw LedgerConflict("malformed ledger line: '" + line + "'");
    Allocation a;
    a.purpose = fields[0];
    a.start_bit = parse_size(fields[1], "start_bit");
    a.end_bit = parse_size(fields[2], "end_bit");
    a.timestamp = parse_size(fields[3], "timestamp");
    entries.push_back(std::move(a));
  }
  return entries;
}

OtpCiphertext otp_encrypt(const BitString& message, KeyStore& store) {
  if (message.empty()) return {BitString{}, Allocation{"otp", store.consumed_offset(), store.consumed_offset(), 0}};
  const Allocation a = store.allocate(message.size(), "otp");
  return {bit_xor(message, store.bits_of(a)), a};
}

BitString otp_decrypt(const BitString& ciphertext, const BitString& key_bits) { return bit_xor(ciphertext, key_bits); }

std::uint64_t gf64_mul(std::uint64_t a, std::uint64_t b) {
  constexpr std::uint64_t kReduce = 0x1B;  // x^4 + x^3 + x + 1
  std::uint64_t r = 0;
  while (b != 0) {
    if (b & 1) r ^= a;
    b >>= 1;
    const bool carry = (a >> 63) != 0;
    a <<= 1;
    if (carry) a ^= kReduce;
  }
  return r;
}

std::uint64_t poly_hash(const BitString& message, std::uint64_t key) {
  const auto words = message.pack64();
  std::uint64_t acc = 0;
  for (std::uint64_t w : words) acc = gf64_mul(acc ^ w, key);
  acc = gf64_mul(acc ^ static_cast<std::uint64_t>(message.size()), key);
  return acc;
}

std::uint64_t to_u64(const BitString& bits) {
  if (bits.size() != 64) throw LengthMismatch(bits.size(), 64);
  return bits.pack64()[0];
}

BitString from_u64(std::uint64_t v) {
  BitString b;
  b.reserve(64);
  for (int i = 63; i >= 0; --i) b.push_back(((v >> i) & 1U) != 0);
  return b;
}

BitString compute_tag(const BitString& message, const BitString& nonce, const BitString& hash_key,
                      const BitString& mask) {
  if (nonce.size() != kNonceBits) throw LengthMismatch(nonce.size(), kNonceBits);
  BitString input = nonce;
  input.append(message);
  return from_u64(poly_hash(input, to_u64(hash_key)) ^ to_u64(mask));
}

Authenticator::Authenticator(KeyStore& store)
    : store_(store), hash_key_range_(store.allocate(kTagBits, "auth-hash-key")), hash_key_(store.bits_of(hash_key_range_)) {}

AuthenticatedMessage Authenticator::tag(const BitString& message, const BitString& nonce) {
  const std::uint64_t n = to_u64(nonce);
  if (nonces_.contains(n)) throw NonceReuse("nonce already used in this session");
  const Allocation mask = store_.allocate(kTagBits, "auth-mask");
  nonces_.insert(n);
  return {message, nonce, compute_tag(message, nonce, hash_key_, store_.bits_of(mask)), mask};
}

bool verify(const AuthenticatedMessage& msg, const KeyStore& store, const Allocation& hash_key_range) {
  if (msg.tag.size() != kTagBits || msg.nonce.size() != kNonceBits) return false;
  return compute_tag(msg.payload, msg.nonce, store.bits_of(hash_key_range), store.bits_of(msg.mask_range)) == msg.tag;
}

Mode plan_mode(double skr_bps, double required_bandwidth_bps) {
  if (!(skr_bps >= 0.0) || !(required_bandwidth_bps >= 0.0)) {
    throw DomainError("plan_mode: rates must be >= 0");
  }
  return skr_bps > required_bandwidth_bps ? Mode::OTP : Mode::AUTH_ONLY;
}

std::string_view mode_name(Mode m) { return m == Mode::OTP ? "OTP" : "AUTH_ONLY"; }

}  // namespace hydroqkd::crypto
