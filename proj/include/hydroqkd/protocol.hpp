#pragma once

#include <concepts>
#include <cstdint>
#include <vector>

#include "hydroqkd/bitops.hpp"
#include "hydroqkd/rng.hpp"

namespace hydroqkd::protocol {

enum class Basis : std::uint8_t { Z, X };  // rectilinear, diagonal

enum class PolarizationState : std::uint8_t { Zero, One, Plus, Minus };

enum class IntensityClass : std::uint8_t { Signal = 0, Decoy = 1, Vacuum = 2 };

inline constexpr int kIntensityClasses = 3;

struct PulseDescriptor {
  bool bit = false;
  Basis basis = Basis::Z;
  IntensityClass intensity = IntensityClass::Signal;
};

// Anything that yields uniform doubles in [0, 1).
template <class G>
concept UniformSource = requires(G& g) {
  { g.uniform() } -> std::convertible_to<double>;
};

constexpr Basis basis_of(PolarizationState s) {
  return (s == PolarizationState::Zero || s == PolarizationState::One) ? Basis::Z : Basis::X;
}

// (0,Z)->|0>, (1,Z)->|1>, (0,X)->|+>, (1,X)->|->
constexpr PolarizationState prepare(bool bit, Basis basis) {
  if (basis == Basis::Z) return bit ? PolarizationState::One : PolarizationState::Zero;
  return bit ? PolarizationState::Minus : PolarizationState::Plus;
}

constexpr bool encoded_bit(PolarizationState s) {
  return s == PolarizationState::One || s == PolarizationState::Minus;
}

// Consumes exactly one draw. Matching basis: the encoded bit, flipped when the
// draw falls below `flip_probability`. Mismatched basis: 1 iff the draw < 1/2.
template <UniformSource G>
bool measure(PolarizationState state, Basis basis, G& rng, double flip_probability) {
  const double u = rng.uniform();
  if (basis_of(state) != basis) return u < 0.5;
  return encoded_bit(state) != (u < flip_probability);
}

struct SiftedKeyPair {
  BitString alice;
  BitString bob;

  std::size_t size() const noexcept { return alice.size(); }
  void validate() const;
};

// Keeps positions where the bases agree, in order.
SiftedKeyPair sift(const std::vector<Basis>& alice_bases, const std::vector<Basis>& bob_bases,
                   const BitString& bob_bits, const BitString& alice_bits);

struct SessionConfig {
  double basis_probability_x = 0.5;
  std::uint64_t seed = 1;
};

struct SessionRecord {
  BitString alice_bits;
  std::vector<Basis> alice_bases;
  std::vector<Basis> bob_bases;
  BitString bob_bits;
};

// Prepare-and-measure BB84 over an ideal-loss channel with a bit-flip
// probability. Per pulse the generator is drawn in this order: Alice's bit,
// Alice's basis, Bob's basis, Bob's measurement outcome.
class Session {
 public:
  explicit Session(SessionConfig config);

  PulseDescriptor next_pulse();
  SessionRecord run(std::size_t pulses, double flip_probability);

 private:
  SessionConfig config_;
  Rng rng_;
};

}  // namespace hydroqkd::protocol
