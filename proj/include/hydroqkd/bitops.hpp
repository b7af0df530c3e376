#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hydroqkd {

// Ordered sequence of bits. Carrier for keys, messages and ciphertexts.
// Textual form is contiguous '0'/'1' characters, most-significant bit of each
// character first when produced by encode_ascii7.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t length, bool value = false) : bits_(length, value ? 1 : 0) {}
  BitString(std::initializer_list<int> bits);

  // Parses '0'/'1' text. Single spaces between 7-bit groups are accepted.
  static BitString parse(std::string_view text);
  static BitString from_bytes(std::span<const std::uint8_t> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
  bool at(std::size_t i) const;
  void set(std::size_t i, bool value) { bits_.at(i) = value ? 1 : 0; }
  void flip(std::size_t i) { bits_.at(i) ^= 1; }
  void push_back(bool value) { bits_.push_back(value ? 1 : 0); }
  void append(const BitString& other);
  void reserve(std::size_t n) { bits_.reserve(n); }

  BitString slice(std::size_t offset, std::size_t length) const;
  std::size_t popcount() const noexcept;

  // One byte per bit, each 0 or 1.
  std::span<const std::uint8_t> raw() const noexcept { return bits_; }

  // Bits packed MSB-first into 64-bit words; trailing bits of the last word are zero.
  std::vector<std::uint64_t> pack64() const;

  std::string to_string() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

BitString encode_ascii7(std::string_view text);
std::string decode_ascii7(const BitString& bits);

BitString bit_xor(const BitString& a, const BitString& b);

// h(p) = -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
double binary_entropy(double p);

}  // namespace hydroqkd
