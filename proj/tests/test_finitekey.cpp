#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hydroqkd/error.hpp"
#include "hydroqkd/finitekey.hpp"

using namespace hydroqkd;
using namespace hydroqkd::finitekey;

namespace {

const SecurityParams kToyParams{.epsilon_sec = 21.0 / 1024.0, .epsilon_cor = 2.0 / 1024.0};

SweepScenario analytic_defaults() {
  SweepScenario sc;
  sc.detector = {.dark_count = 1e-6, .after_pulse = 1e-4, .efficiency = 0.1};
  sc.e_mis = 0.0025;
  sc.block = {.mode = BlockPolicy::Mode::FixedBlock, .block_bits = 1e6, .max_collection_time_s = 600};
  return sc;
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

TEST_CASE("key length arithmetic") {
  const DecoyEstimate est{.s_x0 = 0, .s_x1 = 1000, .phi_x = 0, .mode = EstimateMode::Bounded};
  CHECK(key_length_real(est, 0, kToyParams) == doctest::Approx(930.0).epsilon(1e-15));
  CHECK(key_length(est, 0, kToyParams) == 930);
  CHECK(key_length({.s_x0 = 0, .s_x1 = 1000, .phi_x = 0.5, .mode = EstimateMode::Bounded}, 0, kToyParams) == 0);
  CHECK(key_length({}, 0, kToyParams) == 0);
  CHECK(key_length(est, 929.5, kToyParams) == 0);
  CHECK(key_length(est, 929, kToyParams) == 1);
  CHECK(key_length({.s_x0 = 10, .s_x1 = 1000, .phi_x = 0, .mode = EstimateMode::Bounded}, 0, kToyParams) == 940);
}

TEST_CASE("key length monotonicity") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> s1(1e3, 1e6), phi(0.0, 0.5), leak(0.0, 1e5), s0(0.0, 1e3);
  const SecurityParams params;
  auto draw = [&] {
    return DecoyEstimate{.s_x0 = s0(gen), .s_x1 = s1(gen), .phi_x = phi(gen), .mode = EstimateMode::Bounded};
  };
  for (int i = 0; i < 10; ++i) {
    const DecoyEstimate base = draw();
    const double l = leak(gen);
    DecoyEstimate more = base;
    more.s_x1 *= 1.5;
    CHECK(key_length_real(more, l, params) >= key_length_real(base, l, params));
    DecoyEstimate noisier = base;
    noisier.phi_x = std::min(0.5, base.phi_x + 0.05);
    CHECK(key_length_real(noisier, l, params) <= key_length_real(base, l, params));
    CHECK(key_length_real(base, l + 100, params) < key_length_real(base, l, params));
    const SecurityParams looser{.epsilon_sec = 1e-6, .epsilon_cor = params.epsilon_cor};
    CHECK(key_length_real(base, l, looser) > key_length_real(base, l, params));
  }
}

TEST_CASE("doubling a noiseless estimate more than doubles the key") {
  const SecurityParams params;
  for (double s1 : {500.0, 1e4, 3e6}) {
    const DecoyEstimate one{.s_x0 = 10, .s_x1 = s1, .phi_x = 0, .mode = EstimateMode::Bounded};
    const DecoyEstimate two{.s_x0 = 20, .s_x1 = 2 * s1, .phi_x = 0, .mode = EstimateMode::Bounded};
    CHECK(key_length_real(two, 0, params) > 2 * key_length_real(one, 0, params));
  }
}

TEST_CASE("secret key rate") {
  CHECK(secret_key_rate(0, 1) == 0.0);
  CHECK(secret_key_rate(930, 1) == 930.0);
  CHECK(secret_key_rate(1e5, 4) == 25000.0);
  CHECK_THROWS_AS(secret_key_rate(10, 0), DomainError);
}

TEST_CASE("oracle estimate") {
  montecarlo::TallyTable empty;
  const auto e = oracle_estimate(empty);
  CHECK(e.s_x0 == 0);
  CHECK(e.s_x1 == 0);
  CHECK(e.phi_x == 0);

  montecarlo::TallyTable dark;
  auto& v = dark[protocol::IntensityClass::Vacuum];
  v.sent = 1000;
  v.sifted[1] = {.detected = 7, .errors = 3};
  v.oracle[1][0] = {.detected = 7, .errors = 3};
  const auto d = oracle_estimate(dark);
  CHECK(d.s_x0 == 7);
  CHECK(d.s_x1 == 0);
  CHECK(d.mode == EstimateMode::Oracle);

  montecarlo::TallyTable blind;
  blind.has_oracle = false;
  CHECK_THROWS_AS(oracle_estimate(blind), EstimationError);
}

TEST_CASE("bounded estimate edge cases") {
  const montecarlo::SimulationConfig cfg;
  montecarlo::TallyTable silent;
  for (auto& c : silent.classes) c.sent = 100;
  const auto z = decoy_estimate(silent, cfg, {});
  CHECK(z.s_x0 == 0);
  CHECK(z.s_x1 == 0);
  CHECK(z.phi_x == 0.5);
  CHECK(z.mode == EstimateMode::Bounded);

  montecarlo::SimulationConfig flat = cfg;
  flat.intensities = {0.2, 0.2, 0.0};
  CHECK_THROWS_AS(decoy_estimate(silent, flat, {}), EstimationError);
  flat.intensities = {0.5, 0.0, 0.0};
  CHECK_THROWS_AS(decoy_estimate(silent, flat, {}), EstimationError);
  silent.classes[2].sent = 0;
  CHECK_THROWS_AS(decoy_estimate(silent, cfg, {}), EstimationError);
}

TEST_CASE("bounds approach the true single-photon yield for large samples") {
  SweepScenario sc = analytic_defaults();
  sc.detector.after_pulse = 0;
  const double pulses = 1e14;
  const auto obs = expected_observations(sc, pulses);
  const auto est = decoy_bounds(obs, sc.source.intensities, sc.source.intensity_probabilities, {});
  const double eta = channel::link_transmittance(sc.link) * sc.detector.efficiency;
  const double y1 = 1.0 - (1.0 - 2.0 * sc.detector.dark_count) * (1.0 - eta);
  double truth = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double mu = sc.source.intensities[k];
    truth += pulses * sc.source.intensity_probabilities[k] * 0.25 * mu * std::exp(-mu) * y1;
  }
  CHECK(est.s_x1 <= truth);
  CHECK(est.s_x1 >= 0.9 * truth);
  // Single-photon phase error is bounded by the misalignment plus dark-count contribution.
  const double e1 = (sc.detector.dark_count + sc.e_mis * eta) / y1;
  CHECK(est.phi_x >= e1);
  CHECK(est.phi_x <= 1.5 * e1 + 1e-4);
}

TEST_CASE("noiseless simulation: bound is sound and within a quarter of the truth") {
  montecarlo::RunInputs in;
  in.config.pulse_count = 10'000'000;
  in.link.length_km = 1.0;
  in.detector = {.dark_count = 0, .after_pulse = 0, .efficiency = 1.0};
  const auto tally = montecarlo::run(in);
  const auto truth = oracle_estimate(tally);
  const auto bound = decoy_estimate(tally, in.config, {});
  CHECK(truth.phi_x == 0.0);
  CHECK(bound.s_x1 <= truth.s_x1);
  CHECK(bound.s_x1 >= 0.75 * truth.s_x1);
}

TEST_CASE("bounded estimate stays below the oracle across seeds") {
  montecarlo::RunInputs in;
  in.config.pulse_count = 3'000'000;
  in.link.length_km = 1.0;
  in.detector.efficiency = 0.5;
  in.environment = channel::EnvironmentProfile::hydropower_default();
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    in.config.seed = seed;
    const auto tally = montecarlo::run(in);
    const auto truth = oracle_estimate(tally);
    const auto bound = decoy_estimate(tally, in.config, {});
    CHECK(bound.s_x1 > 0);
    CHECK(bound.s_x1 <= truth.s_x1);
    CHECK(bound.phi_x >= truth.phi_x);
  }
}

TEST_CASE("single distance sweep matches a direct evaluation") {
  SweepScenario sc = analytic_defaults();
  const auto table = sweep_distance(sc, {25.0});
  REQUIRE(table.rows.size() == 1);
  sc.link.length_km = 25.0;
  const auto p = evaluate_point(sc);
  CHECK(table.rows[0].point.key_length_bits == p.key_length_bits);
  CHECK(table.rows[0].point.skr_bps == p.skr_bps);
  CHECK(p.loss_db == doctest::Approx(5.0));
  CHECK(p.key_length_bits > 0);
}

TEST_CASE("rate falls with distance and reaches zero") {
  const auto table = sweep_distance(analytic_defaults(), {1, 10, 25, 50, 75, 100});
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    CHECK(table.rows[i].point.skr_bps <= table.rows[i - 1].point.skr_bps);
  CHECK(table.rows.front().point.key_length_bits > 0);
  CHECK(table.rows.back().point.key_length_bits == 0);
}

TEST_CASE("fixed pulse budget also decays with distance") {
  SweepScenario sc = analytic_defaults();
  sc.block = {.mode = BlockPolicy::Mode::FixedPulses};
  sc.source.pulse_count = 100'000'000'000ULL;
  const auto table = sweep_distance(sc, {1, 25, 50, 100});
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    CHECK(table.rows[i].point.skr_bps <= table.rows[i - 1].point.skr_bps);
  CHECK(table.rows.front().point.key_length_bits > 0);
}

TEST_CASE("larger block sizes reach shorter distances under a fixed collection time") {
  SweepScenario small = analytic_defaults();
  small.block.block_bits = 1e5;
  SweepScenario large = small;
  large.block.block_bits = 1e6;
  std::vector<double> grid;
  for (double d = 0; d <= 150; d += 2.5) grid.push_back(d);
  auto reach = [&](const SweepScenario& sc) {
    double last = -1;
    for (const auto& row : sweep_distance(sc, grid).rows)
      if (row.point.key_length_bits > 0) last = row.x;
    return last;
  };
  CHECK(reach(large) > 0);
  CHECK(reach(large) < reach(small));
}

TEST_CASE("rate falls with misalignment") {
  SweepScenario sc = analytic_defaults();
  std::vector<double> thetas;
  for (int d = 0; d <= 25; d += 5) thetas.push_back(deg(d));
  const auto table = sweep_misalignment(sc, thetas);
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    CHECK(table.rows[i].point.skr_bps <= table.rows[i - 1].point.skr_bps);
  CHECK(table.rows[0].point.skr_bps > 0);
  CHECK_THROWS_AS(sweep_misalignment(sc, {}), DomainError);
  CHECK_THROWS_AS(sweep_misalignment(sc, {2.0}), DomainError);
}

TEST_CASE("larger blocks tolerate more misalignment") {
  SweepScenario small = analytic_defaults();
  small.block = {.mode = BlockPolicy::Mode::FixedBlock, .block_bits = 1e5, .max_collection_time_s = 600};
  SweepScenario large = small;
  large.block.block_bits = 1e6;
  std::vector<double> thetas;
  for (double d = 0; d <= 25; d += 0.5) thetas.push_back(deg(d));
  auto tolerance = [&](const SweepScenario& sc) {
    double last = -1;
    for (const auto& row : sweep_misalignment(sc, thetas).rows)
      if (row.point.key_length_bits > 0) last = row.x;
    return last;
  };
  CHECK(tolerance(small) >= 0);
  CHECK(tolerance(large) > tolerance(small));
}

TEST_CASE("sweep errors surface as exceptions") {
  SweepScenario sc = analytic_defaults();
  CHECK_THROWS_AS(sweep_distance(sc, {}), DomainError);
  CHECK_THROWS_AS(sweep_distance(sc, {1, -3}), DomainError);
  sc.detector.efficiency = 2.0;
  CHECK_THROWS_AS(sweep_distance(sc, {1, 2, 3, 4}), ConfigError);
}

TEST_CASE("curve csv") {
  const auto table = sweep_distance(analytic_defaults(), {1, 25, 50, 100});
  const std::string csv = to_csv(table);
  CHECK(csv.rfind("distance_km,loss_db,transmittance,qber,key_length_bits,skr_bps\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find("\n25,5,0.316228,") != std::string::npos);
  const auto m = sweep_misalignment(analytic_defaults(), {0.0});
  CHECK(to_csv(m).rfind("theta_rad,", 0) == 0);
}
