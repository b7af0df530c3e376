#include "hydroqkd/protocol.hpp"

#include "hydroqkd/error.hpp"

namespace hydroqkd::protocol {

void SiftedKeyPair::validate() const {
  if (alice.size() != bob.size()) throw LengthMismatch(alice.size(), bob.size());
}

SiftedKeyPair sift(const std::vector<Basis>& alice_bases, const std::vector<Basis>& bob_bases,
                   const BitString& bob_bits, const BitString& alice_bits) {
  const std::size_t n = alice_bases.size();
  if (bob_bases.size() != n) throw LengthMismatch(n, bob_bases.size());
  if (bob_bits.size() != n) throw LengthMismatch(n, bob_bits.size());
  if (alice_bits.size() != n) throw LengthMismatch(n, alice_bits.size());
  SiftedKeyPair out;
  for (std::size_t i = 0; i < n; ++i) {
    if (alice_bases[i] != bob_bases[i]) continue;
    out.alice.push_back(alice_bits[i]);
    out.bob.push_back(bob_bits[i]);
  }
  return out;
}

Session::Session(SessionConfig config) : config_(config), rng_(config.seed) {
  if (!(config.basis_probability_x >= 0.0 && config.basis_probability_x <= 1.0)) {
    throw ConfigError("basis_probability_x", "must be in [0, 1]");
  }
}

PulseDescriptor Session::next_pulse() {
  PulseDescriptor p;
  p.bit = rng_.uniform() < 0.5;
  p.basis = rng_.uniform() < config_.basis_probability_x ? Basis::X : Basis::Z;
  return p;
}

SessionRecord Session::run(std::size_t pulses, double flip_probability) {
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw DomainError("flip_probability outside [0, 1]");
  }
  SessionRecord rec;
  rec.alice_bits.reserve(pulses);
  rec.bob_bits.reserve(pulses);
  rec.alice_bases.reserve(pulses);
  rec.bob_bases.reserve(pulses);
  for (std::size_t i = 0; i < pulses; ++i) {
    const PulseDescriptor p = next_pulse();
    const Basis bob_basis = rng_.uniform() < config_.basis_probability_x ? Basis::X : Basis::Z;
    const bool outcome = measure(prepare(p.bit, p.basis), bob_basis, rng_, flip_probability);
    rec.alice_bits.push_back(p.bit);
    rec.alice_bases.push_back(p.basis);
    rec.bob_bases.push_back(bob_basis);
    rec.bob_bits.push_back(outcome);
  }
  return rec;
}

}  // namespace hydroqkd::protocol
