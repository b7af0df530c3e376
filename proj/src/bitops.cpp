#include "hydroqkd/bitops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "hydroqkd/error.hpp"

namespace hydroqkd {

BitString::BitString(std::initializer_list<int> bits) {
  bits_.reserve(bits.size());
  for (int b : bits) {
    if (b != 0 && b != 1) throw DomainError("bit value must be 0 or 1");
    bits_.push_back(static_cast<std::uint8_t>(b));
  }
}

BitString BitString::parse(std::string_view text) {
  BitString out;
  out.reserve(text.size());
  bool last_space = true;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '0' || c == '1') {
      out.push_back(c == '1');
      last_space = false;
    } else if (c == ' ' && !last_space && i + 1 < text.size()) {
      last_space = true;
    } else {
      throw EncodingError("invalid bit character at position " + std::to_string(i), i);
    }
  }
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bits) {
  BitString out;
  out.reserve(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw EncodingError("bit value out of range", i);
    out.push_back(bits[i] != 0);
  }
  return out;
}

bool BitString::at(std::size_t i) const { return bits_.at(i) != 0; }

void BitString::append(const BitString& other) {
  bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
}

BitString BitString::slice(std::size_t offset, std::size_t length) const {
  if (offset > size() || length > size() - offset) {
    throw DomainError("slice [" + std::to_string(offset) + ", +" + std::to_string(length) +
                      ") outside bit string of length " + std::to_string(size()));
  }
  BitString out;
  out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(offset),
                   bits_.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return out;
}

std::size_t BitString::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::uint64_t> BitString::pack64() const {
  std::vector<std::uint64_t> words((size() + 63) / 64, 0);
  for (std::size_t i = 0; i < size(); ++i) {
    if (bits_[i]) words[i / 64] |= std::uint64_t{1} << (63 - i % 64);
  }
  return words;
}

std::string BitString::to_string() const {
  std::string s(size(), '0');
  for (std::size_t i = 0; i < size(); ++i) {
    if (bits_[i]) s[i] = '1';
  }
  return s;
}

BitString encode_ascii7(std::string_view text) {
  BitString out;
  out.reserve(7 * text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto code = static_cast<unsigned char>(text[i]);
    if (code > 127) {
      throw EncodingError("non-ASCII character at position " + std::to_string(i), i);
    }
    for (int b = 6; b >= 0; --b) out.push_back(((code >> b) & 1U) != 0);
  }
  return out;
}

std::string decode_ascii7(const BitString& bits) {
  if (bits.size() % 7 != 0) {
    throw EncodingError("ASCII-7 bit string length " + std::to_string(bits.size()) +
                            " is not a multiple of 7",
                        bits.size());
  }
  std::string out;
  out.reserve(bits.size() / 7);
  for (std::size_t i = 0; i < bits.size(); i += 7) {
    unsigned code = 0;
    for (std::size_t b = 0; b < 7; ++b) code = (code << 1) | (bits[i + b] ? 1U : 0U);
    out.push_back(static_cast<char>(code));
  }
  return out;
}

BitString bit_xor(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  BitString out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] != b[i]);
  return out;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binary_entropy: p outside [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace hydroqkd
