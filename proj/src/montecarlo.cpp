#include "hydroqkd/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hydroqkd/error.hpp"
#include "hydroqkd/rng.hpp"

namespace hydroqkd::montecarlo {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

int bucket_of(unsigned photons) { return photons >= 2 ? 2 : static_cast<int>(photons); }

// Poisson draw by inversion from a single uniform; means here are O(1).
unsigned poisson(double mean, double u) {
  if (mean <= 0.0) return 0;
  double p = std::exp(-mean);
  double cdf = p;
  unsigned n = 0;
  while (u >= cdf && n < 1000) {
    ++n;
    p *= mean / n;
    cdf += p;
    if (p == 0.0) break;
  }
  return n;
}

struct Prepared {
  std::array<double, kIntensityClasses> cumulative{};
  double survive = 0.0;   // eta_ch * eta_det
  double dark = 0.0;      // either of two detectors fires
  double after_pulse = 0.0;
  double px = 0.5;
  double rate = 1.0;
};

Prepared prepare_inputs(const RunInputs& in) {
  in.config.validate();
  in.link.validate();
  in.detector.validate();
  in.environment.validate();
  if (!(in.stabilization_gain >= 0.0 && in.stabilization_gain <= 1.0)) {
    throw ConfigError("stabilization_gain", "must be in [0, 1]");
  }
  Prepared p;
  double acc = 0.0;
  for (int c = 0; c < kIntensityClasses; ++c) {
    acc += in.config.intensity_probabilities[c];
    p.cumulative[c] = acc;
  }
  p.cumulative[kIntensityClasses - 1] = 1.0;
  p.survive = channel::link_transmittance(in.link) * in.detector.efficiency;
  p.dark = 2.0 * in.detector.dark_count;
  p.after_pulse = in.detector.after_pulse;
  p.px = in.config.basis_probability_x;
  p.rate = in.config.pulse_rate_hz;
  return p;
}

struct StreamRange {
  std::uint64_t begin;
  std::uint64_t end;
};

StreamRange stream_range(const SimulationConfig& cfg, std::uint32_t s) {
  const std::uint64_t n = cfg.pulse_count;
  const std::uint64_t k = cfg.streams;
  return {n / k * s + std::min<std::uint64_t>(s, n % k), n / k * (s + 1) + std::min<std::uint64_t>(s + 1, n % k)};
}

// One stream of pulses. Per pulse the generator is drawn exactly nine times,
// in this order: intensity class, Alice basis, Bob basis, Alice bit, photon
// number, photon survival, dark count, Bob's outcome, after-pulse.
// After-pulse carry-over does not cross stream boundaries.
template <class Sink>
void simulate_stream(const RunInputs& in, const Prepared& p, const MisalignmentTrack& track, std::uint32_t s,
                     Sink&& sink) {
  const StreamRange range = stream_range(in.config, s);
  Rng rng(in.config.seed, s);
  bool after_pulse_pending = false;
  for (std::uint64_t i = range.begin; i < range.end; ++i) {
    PulseEvent ev{};
    ev.index = i;
    const double uc = rng.uniform();
    int c = 0;
    while (c < kIntensityClasses - 1 && uc >= p.cumulative[c]) ++c;
    ev.intensity = static_cast<IntensityClass>(c);
    ev.alice_basis = rng.uniform() < p.px ? Basis::X : Basis::Z;
    ev.bob_basis = rng.uniform() < p.px ? Basis::X : Basis::Z;
    ev.alice_bit = rng.uniform() < 0.5;
    ev.photons = poisson(in.config.intensities[c], rng.uniform());
    const double u_survive = rng.uniform();
    ev.photon_detected = ev.photons > 0 && u_survive < 1.0 - std::pow(1.0 - p.survive, ev.photons);
    ev.dark_count = rng.uniform() < p.dark;
    ev.after_pulse = after_pulse_pending;
    ev.detected = ev.photon_detected || ev.dark_count || ev.after_pulse;
    const double flip = ev.photon_detected ? track.e_mis(static_cast<double>(i) / p.rate) : 0.5;
    ev.bob_bit = protocol::measure(protocol::prepare(ev.alice_bit, ev.alice_basis), ev.bob_basis, rng, flip);
    after_pulse_pending = rng.uniform() < p.after_pulse && ev.detected;
    sink(ev);
  }
}

struct TallySink {
  TallyTable* tally;
  protocol::SiftedKeyPair* keys;

  void operator()(const PulseEvent& ev) const {
    ClassTally& ct = (*tally)[ev.intensity];
    ++ct.sent;
    if (!ev.detected) return;
    ++ct.detected;
    if (ev.alice_basis != ev.bob_basis) return;
    const int b = static_cast<int>(ev.alice_basis);
    const bool error = ev.bob_bit != ev.alice_bit;
    ++ct.sifted[b].detected;
    ct.sifted[b].errors += error ? 1 : 0;
    Counts& o = ct.oracle[b][bucket_of(ev.photons)];
    ++o.detected;
    o.errors += error ? 1 : 0;
    if (keys != nullptr && ev.alice_basis == Basis::X) {
      keys->alice.push_back(ev.alice_bit);
      keys->bob.push_back(ev.bob_bit);
    }
  }
};

SessionResult run_streams(const RunInputs& in, bool parallel, bool collect_keys) {
  const Prepared p = prepare_inputs(in);
  const MisalignmentTrack track(in.environment, in.stabilization_gain, in.config.feedback_period_s,
                                in.config.elapsed_time_s());
  const auto streams = static_cast<std::int64_t>(in.config.streams);
  std::vector<TallyTable> tallies(in.config.streams);
  std::vector<protocol::SiftedKeyPair> keys(collect_keys ? in.config.streams : 0);

  auto body = [&](std::int64_t s) {
    TallySink sink{&tallies[s], collect_keys ? &keys[s] : nullptr};
    simulate_stream(in, p, track, static_cast<std::uint32_t>(s), sink);
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t s = 0; s < streams; ++s) body(s);
  } else {
    for (std::int64_t s = 0; s < streams; ++s) body(s);
  }

  SessionResult out;
  for (std::size_t s = 0; s < tallies.size(); ++s) {
    for (int c = 0; c < kIntensityClasses; ++c) out.tally.classes[c] += tallies[s].classes[c];
    if (collect_keys) {
      out.key_pair.alice.append(keys[s].alice);
      out.key_pair.bob.append(keys[s].bob);
    }
  }
  out.tally.elapsed_time_s = in.config.elapsed_time_s();
  return out;
}

}  // namespace

void SimulationConfig::validate() const {
  for (int c = 0; c < kIntensityClasses; ++c) {
    if (!(intensities[c] >= 0.0) || !std::isfinite(intensities[c])) {
      throw ConfigError("intensities", "mean photon numbers must be finite and >= 0");
    }
    if (!is_probability(intensity_probabilities[c])) {
      throw ConfigError("intensity_probabilities", "each probability must be in [0, 1]");
    }
  }
  const double sum = intensity_probabilities[0] + intensity_probabilities[1] + intensity_probabilities[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("intensity_probabilities", "must sum to 1");
  if (!is_probability(basis_probability_x)) throw ConfigError("basis_probability_x", "must be in [0, 1]");
  if (!(pulse_rate_hz > 0.0) || !std::isfinite(pulse_rate_hz)) {
    throw ConfigError("pulse_rate_hz", "must be > 0");
  }
  if (streams == 0) throw ConfigError("streams", "must be >= 1");
  if (!(feedback_period_s > 0.0)) throw ConfigError("feedback_period_s", "must be > 0");
}

Counts ClassTally::sifted_total() const {
  Counts c = sifted[0];
  c += sifted[1];
  return c;
}

ClassTally& ClassTally::operator+=(const ClassTally& o) {
  sent += o.sent;
  detected += o.detected;
  for (int b = 0; b < 2; ++b) {
    sifted[b] += o.sifted[b];
    for (int n = 0; n < kPhotonBuckets; ++n) oracle[b][n] += o.oracle[b][n];
  }
  return *this;
}

std::string_view class_name(IntensityClass c) {
  switch (c) {
    case IntensityClass::Signal:
      return "signal";
    case IntensityClass::Decoy:
      return "decoy";
    case IntensityClass::Vacuum:
      return "vacuum";
  }
  return "?";
}

std::string to_csv(const TallyTable& tally) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "# elapsed_time_s=%.6g\n", tally.elapsed_time_s);
  out += line;
  out += "kind,class,basis,photons,sent,detected,detected_sifted,errors_sifted\n";
  static constexpr const char* kBasis[2] = {"Z", "X"};
  static constexpr const char* kPhotons[kPhotonBuckets] = {"0", "1", "2+"};
  for (int c = 0; c < kIntensityClasses; ++c) {
    const auto& ct = tally.classes[c];
    const auto name = class_name(static_cast<IntensityClass>(c));
    const Counts s = ct.sifted_total();
    std::snprintf(line, sizeof line, "class,%.*s,all,all,%llu,%llu,%llu,%llu\n", static_cast<int>(name.size()),
                  name.data(), static_cast<unsigned long long>(ct.sent),
                  static_cast<unsigned long long>(ct.detected), static_cast<unsigned long long>(s.detected),
                  static_cast<unsigned long long>(s.errors));
    out += line;
    for (int b = 0; b < 2; ++b) {
      std::snprintf(line, sizeof line, "basis,%.*s,%s,all,,,%llu,%llu\n", static_cast<int>(name.size()),
                    name.data(), kBasis[b], static_cast<unsigned long long>(ct.sifted[b].detected),
                    static_cast<unsigned long long>(ct.sifted[b].errors));
      out += line;
    }
    if (!tally.has_oracle) continue;
    for (int b = 0; b < 2; ++b) {
      for (int n = 0; n < kPhotonBuckets; ++n) {
        std::snprintf(line, sizeof line, "oracle,%.*s,%s,%s,,,%llu,%llu\n", static_cast<int>(name.size()),
                      name.data(), kBasis[b], kPhotons[n],
                      static_cast<unsigned long long>(ct.oracle[b][n].detected),
                      static_cast<unsigned long long>(ct.oracle[b][n].errors));
        out += line;
      }
    }
  }
  return out;
}

MisalignmentTrack::MisalignmentTrack(const channel::EnvironmentProfile& env, double gain, double feedback_period_s,
                                     double horizon_s)
    : env_(env), gain_(gain), period_(feedback_period_s) {
  if (gain_ <= 0.0) return;
  const auto slots = static_cast<std::size_t>(std::floor(horizon_s / period_)) + 1;
  compensator_.reserve(slots);
  double state = 0.0;
  for (std::size_t k = 0; k < slots; ++k) {
    compensator_.push_back(state);
    state = channel::stabilize(env_, gain_, static_cast<double>(k) * period_, state).compensator_rad;
  }
}

double MisalignmentTrack::theta(double t) const {
  const double raw = channel::misalignment_at(env_, t).theta_rad;
  if (compensator_.empty()) return raw;
  const auto k = std::min(static_cast<std::size_t>(t / period_), compensator_.size() - 1);
  return raw - compensator_[k];
}

TallyTable run(const RunInputs& in) { return run_streams(in, true, false).tally; }

TallyTable run_serial(const RunInputs& in) { return run_streams(in, false, false).tally; }

SessionResult run_session(const RunInputs& in) { return run_streams(in, true, true); }

std::vector<PulseEvent> run_events(const RunInputs& in) {
  const Prepared p = prepare_inputs(in);
  const MisalignmentTrack track(in.environment, in.stabilization_gain, in.config.feedback_period_s,
                                in.config.elapsed_time_s());
  std::vector<PulseEvent> events;
  events.reserve(in.config.pulse_count);
  for (std::uint32_t s = 0; s < in.config.streams; ++s) {
    simulate_stream(in, p, track, s, [&](const PulseEvent& ev) { events.push_back(ev); });
  }
  return events;
}

}  // namespace hydroqkd::montecarlo
