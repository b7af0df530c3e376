#include <doctest.h>

#include <cmath>

#include "hydroqkd/error.hpp"
#include "hydroqkd/montecarlo.hpp"

using namespace hydroqkd;
using namespace hydroqkd::montecarlo;

namespace {

RunInputs small_inputs(std::uint64_t pulses, std::uint64_t seed = 77) {
  RunInputs in;
  in.config.pulse_count = pulses;
  in.config.seed = seed;
  in.config.streams = 5;
  in.link.length_km = 2.0;
  in.detector = {.dark_count = 1e-3, .after_pulse = 0.05, .efficiency = 0.3};
  in.environment = channel::EnvironmentProfile::hydropower_default();
  in.environment.baseline_misalignment_rad = 0.1;
  return in;
}

int bucket(unsigned photons) { return photons >= 2 ? 2 : static_cast<int>(photons); }

}  // namespace

TEST_CASE("empty run") {
  RunInputs in;
  in.config.pulse_count = 0;
  const TallyTable t = run(in);
  CHECK(t.elapsed_time_s == 0.0);
  for (const auto& c : t.classes) CHECK(c == ClassTally{});
}

TEST_CASE("no photons and no dark counts gives no detections") {
  RunInputs in;
  in.config.pulse_count = 20000;
  in.config.intensities = {0.0, 0.0, 0.0};
  in.detector = {.dark_count = 0, .after_pulse = 0.5, .efficiency = 1};
  const TallyTable t = run(in);
  std::uint64_t sent = 0;
  for (int c = 0; c < kIntensityClasses; ++c) {
    CHECK(t.detected_sifted(static_cast<IntensityClass>(c)) == 0);
    sent += t.classes[c].sent;
  }
  CHECK(sent == 20000);
}

TEST_CASE("parallel and serial paths agree bit for bit") {
  const RunInputs in = small_inputs(200000);
  CHECK(run(in) == run_serial(in));
  RunInputs gained = in;
  gained.stabilization_gain = 0.4;
  CHECK(run(gained) == run_serial(gained));
}

TEST_CASE("determinism") {
  const RunInputs in = small_inputs(100000);
  CHECK(run(in) == run(in));
  CHECK_FALSE(run(in) == run(small_inputs(100000, 78)));
  const auto a = run_session(in), b = run_session(in);
  CHECK(a.key_pair.alice == b.key_pair.alice);
  CHECK(a.key_pair.bob == b.key_pair.bob);
  CHECK(a.tally == run(in));
}

TEST_CASE("tally equals an independent recount of the event log") {
  const RunInputs in = small_inputs(60000);
  const auto events = run_events(in);
  REQUIRE(events.size() == 60000);
  TallyTable recount;
  std::size_t x_sifted = 0;
  for (const auto& ev : events) {
    ClassTally& c = recount[ev.intensity];
    ++c.sent;
    if (!ev.detected) continue;
    ++c.detected;
    if (ev.alice_basis != ev.bob_basis) continue;
    const int b = ev.alice_basis == Basis::X ? 1 : 0;
    const bool err = ev.alice_bit != ev.bob_bit;
    c.sifted[b].detected += 1;
    c.sifted[b].errors += err;
    c.oracle[b][bucket(ev.photons)].detected += 1;
    c.oracle[b][bucket(ev.photons)].errors += err;
    x_sifted += b;
  }
  recount.elapsed_time_s = in.config.elapsed_time_s();
  CHECK(recount == run_serial(in));
  CHECK(run_session(in).key_pair.size() == x_sifted);
}

TEST_CASE("event log is internally consistent") {
  const auto events = run_events(small_inputs(40000));
  bool prev_detected = false;
  std::uint64_t prev_index = 0;
  for (const auto& ev : events) {
    CHECK(ev.detected == (ev.photon_detected || ev.dark_count || ev.after_pulse));
    if (ev.photons == 0) CHECK_FALSE(ev.photon_detected);
    // After-pulses only follow a detection in the same stream.
    if (ev.after_pulse && ev.index == prev_index + 1) CHECK(prev_detected);
    if (ev.intensity == IntensityClass::Vacuum) CHECK(ev.photons == 0);
    prev_detected = ev.detected;
    prev_index = ev.index;
  }
}

TEST_CASE("vacuum detections land in the zero-photon bucket") {
  const TallyTable t = run(small_inputs(200000));
  const ClassTally& v = t[IntensityClass::Vacuum];
  for (int b = 0; b < 2; ++b) {
    CHECK(v.oracle[b][1].detected == 0);
    CHECK(v.oracle[b][2].detected == 0);
    CHECK(v.oracle[b][0] == v.sifted[b]);
  }
  CHECK(v.detected > 0);
}

TEST_CASE("detection fraction follows the analytic rate") {
  RunInputs in = small_inputs(300000);
  in.detector.after_pulse = 0.0;
  const TallyTable t = run(in);
  const double eta = channel::link_transmittance(in.link) * in.detector.efficiency;
  for (int c = 0; c < kIntensityClasses; ++c) {
    const ClassTally& ct = t.classes[c];
    const double d = channel::detection_rate(in.config.intensities[c], eta, in.detector);
    const double n = static_cast<double>(ct.sent);
    const double sigma = std::sqrt(d * (1 - d) / n);
    CHECK(std::abs(static_cast<double>(ct.detected) / n - d) < 5 * sigma);
  }
}

TEST_CASE("longer fibre detects less") {
  RunInputs near = small_inputs(200000);
  RunInputs far = near;
  far.link.length_km = 60.0;
  CHECK(run(far)[IntensityClass::Signal].detected < run(near)[IntensityClass::Signal].detected);
}

TEST_CASE("invalid configuration is rejected before sampling") {
  RunInputs in = small_inputs(1000);
  in.config.intensity_probabilities = {0.5, 0.3, 0.1};
  CHECK_THROWS_AS(run(in), ConfigError);
  in = small_inputs(1000);
  in.config.streams = 0;
  CHECK_THROWS_AS(run(in), ConfigError);
  in = small_inputs(1000);
  in.config.intensities[0] = -1;
  CHECK_THROWS_AS(run(in), ConfigError);
  in = small_inputs(1000);
  in.stabilization_gain = 2;
  CHECK_THROWS(run(in));
}

TEST_CASE("misalignment track") {
  const auto env = channel::EnvironmentProfile::hydropower_default();
  const MisalignmentTrack off(env, 0.0, 1e-3, 1.0);
  for (double t = 0; t < 1.0; t += 0.0173) CHECK(off.theta(t) == channel::misalignment_at(env, t).theta_rad);

  // Replays the feedback loop slot by slot.
  const MisalignmentTrack on(env, 0.5, 1e-3, 0.05);
  double state = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t = k * 1e-3;
    const auto s = channel::stabilize(env, 0.5, t, state);
    CHECK(on.theta(t) == doctest::Approx(s.corrected_theta_rad));
    state = s.compensator_rad;
  }
}

TEST_CASE("tally csv") {
  const TallyTable t = run(small_inputs(1000));
  const std::string csv = to_csv(t);
  CHECK(csv.rfind("# elapsed_time_s=", 0) == 0);
  CHECK(csv.find("kind,class,basis,photons,sent,detected,detected_sifted,errors_sifted\n") != std::string::npos);
  CHECK(csv.find(",signal,") != std::string::npos);
  CHECK(class_name(IntensityClass::Vacuum) == "vacuum");
}

TEST_CASE("signal detections fall with distance, averaged over seeds") {
  const std::vector<double> grid{1, 25, 50, 100};
  std::vector<double> mean(grid.size(), 0.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      RunInputs in;
      in.config.pulse_count = 400000;
      in.config.seed = seed;
      in.environment = channel::EnvironmentProfile::hydropower_default();
      in.link.length_km = grid[i];
      mean[i] += static_cast<double>(run(in).detected_sifted(IntensityClass::Signal)) / 5.0;
    }
  }
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(mean[i] <= mean[i - 1]);
}
