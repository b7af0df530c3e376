#include "hydroqkd/postproc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <vector>

#include "hydroqkd/error.hpp"

namespace hydroqkd::postproc {

namespace {

// Data bit d1..d4 -> 0-based codeword index (positions 3, 5, 7, 6).
constexpr std::array<int, 4> kDataIndex{2, 4, 6, 5};

std::array<bool, 3> parity_bits(const std::array<bool, 7>& w) {
  std::array<bool, 3> p{};
  for (int bit = 0; bit < 3; ++bit) {
    bool acc = false;
    for (int pos = 1; pos <= 7; ++pos) {
      if ((pos & (1 << bit)) != 0 && pos != (1 << bit)) acc ^= w[pos - 1];
    }
    p[bit] = acc;
  }
  return p;
}

std::array<bool, 7> place_data(bool d1, bool d2, bool d3, bool d4) {
  std::array<bool, 7> w{};
  w[kDataIndex[0]] = d1;
  w[kDataIndex[1]] = d2;
  w[kDataIndex[2]] = d3;
  w[kDataIndex[3]] = d4;
  const auto p = parity_bits(w);
  w[0] = p[0];
  w[1] = p[1];
  w[3] = p[2];
  return w;
}

int syndrome(const std::array<bool, 7>& w) {
  int s = 0;
  for (int pos = 1; pos <= 7; ++pos) {
    if (w[pos - 1]) s ^= pos;
  }
  return s;
}

std::uint64_t window64(const std::vector<std::uint64_t>& words, std::size_t pos) {
  const std::size_t w = pos / 64;
  const unsigned r = pos % 64;
  const std::uint64_t hi = w < words.size() ? words[w] : 0;
  if (r == 0) return hi;
  const std::uint64_t lo = w + 1 < words.size() ? words[w + 1] : 0;
  return (hi << r) | (lo >> (64 - r));
}

void check_toeplitz_args(const BitString& key, std::size_t target_length, const BitString& hash_seed) {
  if (target_length == 0) throw DomainError("privacy_amplify: target length must be > 0");
  if (target_length > key.size()) {
    throw DomainError("privacy_amplify: target length " + std::to_string(target_length) +
                      " exceeds key length " + std::to_string(key.size()));
  }
  const std::size_t need = key.size() + target_length - 1;
  if (hash_seed.size() < need) {
    throw DomainError("privacy_amplify: hash seed has " + std::to_string(hash_seed.size()) + " bits, need " +
                      std::to_string(need));
  }
}

SiftedKeyPair permute(const SiftedKeyPair& pair, const std::vector<std::size_t>& order) {
  SiftedKeyPair out;
  out.alice.reserve(order.size());
  out.bob.reserve(order.size());
  for (std::size_t i : order) {
    out.alice.push_back(pair.alice[i]);
    out.bob.push_back(pair.bob[i]);
  }
  return out;
}

BitString random_bits(std::size_t n, Rng& rng) {
  BitString b;
  b.reserve(n);
  for (std::size_t i = 0; i < n; ++i) b.push_back((rng() >> 63) != 0);
  return b;
}

}  // namespace

QberEstimate estimate_qber(const SiftedKeyPair& pair, double sample_fraction, Rng& rng) {
  pair.validate();
  if (pair.size() == 0) throw DomainError("estimate_qber: empty key pair");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw DomainError("estimate_qber: sample fraction must be in (0, 1]");
  }
  const std::size_t n = pair.size();
  const auto m = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(n))));

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  std::vector<bool> sampled(n, false);
  for (std::size_t i = 0; i < m; ++i) sampled[idx[i]] = true;

  QberEstimate out;
  out.sample_size = m;
  for (std::size_t i = 0; i < n; ++i) {
    if (sampled[i]) {
      out.mismatches += pair.alice[i] != pair.bob[i] ? 1 : 0;
    } else {
      out.remaining.alice.push_back(pair.alice[i]);
      out.remaining.bob.push_back(pair.bob[i]);
    }
  }
  out.qber = static_cast<double>(out.mismatches) / static_cast<double>(m);
  return out;
}

Decision abort_check(double qber, double threshold) {
  if (!(qber >= 0.0 && qber <= 1.0) || !(threshold >= 0.0 && threshold <= 1.0)) {
    throw DomainError("abort_check: arguments must lie in [0, 1]");
  }
  return qber > threshold ? Decision::Abort : Decision::Pass;
}

BitString hamming74_encode(const BitString& data) {
  if (data.size() != 4) throw LengthMismatch(data.size(), 4);
  const auto w = place_data(data[0], data[1], data[2], data[3]);
  BitString out;
  for (bool b : w) out.push_back(b);
  return out;
}

HammingDecoded hamming74_decode(const BitString& word) {
  if (word.size() != 7) throw LengthMismatch(word.size(), 7);
  std::array<bool, 7> w{};
  for (int i = 0; i < 7; ++i) w[i] = word[i];
  HammingDecoded out;
  if (const int s = syndrome(w); s != 0) {
    w[s - 1] = !w[s - 1];
    out.corrected_position = s;
  }
  for (int idx : kDataIndex) out.data.push_back(w[idx]);
  return out;
}

Correction correct_errors(const SiftedKeyPair& pair) {
  pair.validate();
  Correction out;
  const std::size_t blocks = pair.size() / 4;
  out.corrected.alice = pair.alice.slice(0, blocks * 4);
  out.corrected.bob = pair.alice.slice(0, 0);
  out.corrected.bob.reserve(blocks * 4);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t o = 4 * b;
    const auto alice_word = place_data(pair.alice[o], pair.alice[o + 1], pair.alice[o + 2], pair.alice[o + 3]);
    auto bob_word = place_data(pair.bob[o], pair.bob[o + 1], pair.bob[o + 2], pair.bob[o + 3]);
    bob_word[0] = alice_word[0];
    bob_word[1] = alice_word[1];
    bob_word[3] = alice_word[3];
    if (const int s = syndrome(bob_word); s != 0) {
      bob_word[s - 1] = !bob_word[s - 1];
      ++out.corrected_blocks;
    }
    for (int idx : kDataIndex) out.corrected.bob.push_back(bob_word[idx]);
  }
  out.leaked_bits = 3 * blocks;
  return out;
}

Reconciliation reconcile(const SiftedKeyPair& pair, std::size_t max_passes, Rng& rng) {
  pair.validate();
  Reconciliation out;
  out.corrected = pair;
  auto verify = [&]() {
    const std::size_t n = out.corrected.size();
    if (n == 0) return true;
    const std::size_t tag = std::min<std::size_t>(64, n);
    const BitString seed = random_bits(n + tag - 1, rng);
    out.leaked_bits += tag;
    return privacy_amplify(out.corrected.alice, tag, seed).bits ==
           privacy_amplify(out.corrected.bob, tag, seed).bits;
  };
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    SiftedKeyPair shuffled = out.corrected;
    if (pass > 0) {
      std::vector<std::size_t> order(out.corrected.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      shuffled = permute(out.corrected, order);
    }
    Correction c = correct_errors(shuffled);
    out.corrected = std::move(c.corrected);
    out.leaked_bits += c.leaked_bits;
    ++out.passes;
    if (verify()) {
      out.verified = true;
      break;
    }
  }
  if (max_passes == 0) out.verified = verify();
  return out;
}

BitString pair_hash(const BitString& key) {
  if (key.size() % 2 != 0) throw DomainError("pair_hash: odd key length " + std::to_string(key.size()));
  BitString out;
  out.reserve(key.size() / 2);
  for (std::size_t i = 0; i < key.size(); i += 2) {
    const bool a = key[i];
    const bool b = key[i + 1];
    bool v = false;
    if (!a && !b) {
      v = false;
    } else if (a && b) {
      v = false;
    } else {
      v = true;
    }
    out.push_back(v);
  }
  return out;
}

SecureKey privacy_amplify(const BitString& key, std::size_t target_length, const BitString& hash_seed) {
  check_toeplitz_args(key, target_length, hash_seed);
  const std::size_t n = key.size();
  BitString reversed(n);
  for (std::size_t j = 0; j < n; ++j) reversed.set(j, key[n - 1 - j]);
  const auto rk = reversed.pack64();
  const auto seed = hash_seed.pack64();

  std::vector<std::uint8_t> out(target_length, 0);
  const auto rows = static_cast<std::int64_t>(target_length);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    std::uint64_t acc = 0;
    const auto base = static_cast<std::size_t>(i);
    for (std::size_t w = 0; w < rk.size(); ++w) acc ^= window64(seed, base + 64 * w) & rk[w];
    out[base] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return SecureKey{BitString::from_bytes(out), 0.0, {}};
}

BitString toeplitz_reference(const BitString& key, std::size_t target_length, const BitString& hash_seed) {
  check_toeplitz_args(key, target_length, hash_seed);
  const std::size_t n = key.size();
  BitString out(target_length);
  for (std::size_t i = 0; i < target_length; ++i) {
    bool acc = false;
    for (std::size_t j = 0; j < n; ++j) acc ^= hash_seed[i + n - 1 - j] && key[j];
    out.set(i, acc);
  }
  return out;
}

std::uint64_t leak_accounting(std::uint64_t sifted_bits, double qber, double efficiency) {
  if (!(qber >= 0.0 && qber <= 0.5)) throw DomainError("leak_accounting: qber must be in [0, 0.5]");
  if (!(efficiency >= 1.0)) throw DomainError("leak_accounting: efficiency must be >= 1");
  return static_cast<std::uint64_t>(std::ceil(efficiency * static_cast<double>(sifted_bits) * binary_entropy(qber)));
}

}  // namespace hydroqkd::postproc
