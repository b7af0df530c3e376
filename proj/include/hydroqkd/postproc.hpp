#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "hydroqkd/bitops.hpp"
#include "hydroqkd/protocol.hpp"
#include "hydroqkd/rng.hpp"

namespace hydroqkd::postproc {

using protocol::SiftedKeyPair;

struct SecureKey {
  BitString bits;
  double epsilon_sec = 0.0;
  std::string provenance;
};

struct QberEstimate {
  double qber = 0.0;
  std::size_t sample_size = 0;
  std::size_t mismatches = 0;
  SiftedKeyPair remaining;
};

// Discloses ceil(fraction * n) randomly chosen positions, compares them and
// removes them from both keys. Remaining bits keep their relative order.
QberEstimate estimate_qber(const SiftedKeyPair& pair, double sample_fraction, Rng& rng);

enum class Decision { Pass, Abort };

// Abort iff qber > threshold; equality passes.
Decision abort_check(double qber, double threshold);

// Hamming(7,4). Codeword positions 1..7: parity bits at 1, 2 and 4 (each the
// XOR of the positions whose index has that bit set), data bits d1..d4 at
// positions 3, 5, 7, 6. With this placement 1101 encodes to 0010110.
BitString hamming74_encode(const BitString& data);

struct HammingDecoded {
  BitString data;
  std::optional<int> corrected_position;  // 1-based
};

HammingDecoded hamming74_decode(const BitString& word);

struct Correction {
  SiftedKeyPair corrected;
  std::size_t leaked_bits = 0;
  std::size_t corrected_blocks = 0;
};

// One Hamming pass over 4-bit blocks. Alice discloses the three parity bits of
// each block; Bob decodes his data bits against them. A trailing partial block
// is disclosed and dropped. Blocks with two or more errors may be left wrong.
Correction correct_errors(const SiftedKeyPair& pair);

struct Reconciliation {
  SiftedKeyPair corrected;
  std::size_t leaked_bits = 0;
  std::size_t passes = 0;
  bool verified = false;
};

// Repeats correct_errors under public pseudo-random permutations until a
// 64-bit verification hash of both keys agrees, or `max_passes` is reached.
// Each pass and the final verification tag count toward leaked_bits.
Reconciliation reconcile(const SiftedKeyPair& pair, std::size_t max_passes, Rng& rng);

// 00->0, 01->1, 10->1, 11->0 per adjacent pair.
BitString pair_hash(const BitString& key);

// Binary Toeplitz product: out_i = XOR_j seed[i - j + n - 1] & key_j, for a key
// of n bits, i < target_length, seed of n + target_length - 1 bits.
// Computed over packed 64-bit words, rows in parallel.
SecureKey privacy_amplify(const BitString& key, std::size_t target_length, const BitString& hash_seed);

// Direct bit-by-bit evaluation of the same matrix product, kept as a reference.
BitString toeplitz_reference(const BitString& key, std::size_t target_length, const BitString& hash_seed);

// ceil(f * n * h(qber)).
std::uint64_t leak_accounting(std::uint64_t sifted_bits, double qber, double efficiency = 1.16);

}  // namespace hydroqkd::postproc
