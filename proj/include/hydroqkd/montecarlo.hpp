#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hydroqkd/channel.hpp"
#include "hydroqkd/protocol.hpp"

namespace hydroqkd::montecarlo {

using protocol::Basis;
using protocol::IntensityClass;
using protocol::kIntensityClasses;

struct SimulationConfig {
  std::uint64_t pulse_count = 10'000'000;
  // Mean photon numbers, indexed by IntensityClass: signal mu, decoy nu1, vacuum nu2.
  std::array<double, kIntensityClasses> intensities{0.5, 0.2, 0.0};
  std::array<double, kIntensityClasses> intensity_probabilities{0.5, 0.35, 0.15};
  double basis_probability_x = 0.5;
  double pulse_rate_hz = 1e6;
  std::uint64_t seed = 20240101;
  // Pulses are split into this many independently seeded streams; the tally
  // is bitwise reproducible for a fixed (seed, streams) regardless of threads.
  std::uint32_t streams = 16;
  // Interval between polarization feedback updates when stabilization is on.
  double feedback_period_s = 1e-3;

  double elapsed_time_s() const { return static_cast<double>(pulse_count) / pulse_rate_hz; }
  void validate() const;
};

// Photon-number buckets used by the ground-truth breakdown: n = 0, 1, >= 2.
inline constexpr int kPhotonBuckets = 3;

struct Counts {
  std::uint64_t detected = 0;
  std::uint64_t errors = 0;

  Counts& operator+=(const Counts& o) {
    detected += o.detected;
    errors += o.errors;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct ClassTally {
  std::uint64_t sent = 0;
  std::uint64_t detected = 0;              // all detections, before sifting
  std::array<Counts, 2> sifted{};           // [basis]
  std::array<std::array<Counts, kPhotonBuckets>, 2> oracle{};  // [basis][photons]

  Counts sifted_total() const;
  ClassTally& operator+=(const ClassTally& o);
  friend bool operator==(const ClassTally&, const ClassTally&) = default;
};

struct TallyTable {
  std::array<ClassTally, kIntensityClasses> classes{};
  double elapsed_time_s = 0.0;
  bool has_oracle = true;

  const ClassTally& operator[](IntensityClass c) const { return classes[static_cast<int>(c)]; }
  ClassTally& operator[](IntensityClass c) { return classes[static_cast<int>(c)]; }

  std::uint64_t detected_sifted(IntensityClass c) const { return (*this)[c].sifted_total().detected; }
  std::uint64_t errors_sifted(IntensityClass c) const { return (*this)[c].sifted_total().errors; }

  friend bool operator==(const TallyTable&, const TallyTable&) = default;
};

// One row per intensity class, per (class, basis), and per (class, basis, photon bucket).
std::string to_csv(const TallyTable& tally);

std::string_view class_name(IntensityClass c);

// Misalignment seen by the receiver over time, optionally reduced by the
// feedback compensator. The compensator trajectory depends only on the
// environment, so it is precomputed once and shared read-only by all streams.
class MisalignmentTrack {
 public:
  MisalignmentTrack(const channel::EnvironmentProfile& env, double gain, double feedback_period_s,
                    double horizon_s);

  double theta(double t) const;
  double e_mis(double t) const { return channel::misalignment_probability(theta(t)); }

 private:
  channel::EnvironmentProfile env_;
  double gain_;
  double period_;
  std::vector<double> compensator_;  // value in effect during slot k
};

struct RunInputs {
  SimulationConfig config;
  channel::FiberLink link;
  channel::DetectorModel detector;
  channel::EnvironmentProfile environment;
  double stabilization_gain = 0.0;
};

// Streams run concurrently under OpenMP.
TallyTable run(const RunInputs& in);

// Reference path: identical streams executed one after another.
TallyTable run_serial(const RunInputs& in);

struct SessionResult {
  TallyTable tally;
  protocol::SiftedKeyPair key_pair;  // X-basis sifted detections, stream order
};

SessionResult run_session(const RunInputs& in);

struct PulseEvent {
  std::uint64_t index;
  IntensityClass intensity;
  Basis alice_basis;
  Basis bob_basis;
  bool alice_bit;
  unsigned photons;
  bool photon_detected;
  bool dark_count;
  bool after_pulse;
  bool detected;
  bool bob_bit;
};

// Full per-pulse event log, serial. Meant for small runs in tests.
std::vector<PulseEvent> run_events(const RunInputs& in);

}  // namespace hydroqkd::montecarlo
