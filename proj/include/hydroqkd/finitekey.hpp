#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hydroqkd/channel.hpp"
#include "hydroqkd/montecarlo.hpp"

namespace hydroqkd::finitekey {

using montecarlo::kIntensityClasses;

struct SecurityParams {
  double epsilon_sec = 1e-10;
  double epsilon_cor = 1e-15;

  void validate() const;
};

enum class EstimateMode { Oracle, Bounded };

// Vacuum and single-photon detections in the key (X) basis, and the
// single-photon phase error rate.
struct DecoyEstimate {
  double s_x0 = 0.0;
  double s_x1 = 0.0;
  double phi_x = 0.0;
  EstimateMode mode = EstimateMode::Oracle;
};

// Ground truth read from the photon-number buckets of a simulated tally.
DecoyEstimate oracle_estimate(const montecarlo::TallyTable& tally);

// Per-intensity sifted counts used by the decoy bounds. Real-valued so that
// expected counts from the analytic channel model can be fed in directly.
struct DecoyObservations {
  std::array<double, kIntensityClasses> n_x{};  // X-basis detections
  std::array<double, kIntensityClasses> n_z{};  // Z-basis detections
  std::array<double, kIntensityClasses> m_z{};  // Z-basis errors
};

DecoyObservations observations_from(const montecarlo::TallyTable& tally);

// Two-decoy finite-sample bounds (vacuum + weak decoy) with Hoeffding
// corrections at confidence epsilon_sec / 21 per estimated quantity.
DecoyEstimate decoy_bounds(const DecoyObservations& obs, const std::array<double, kIntensityClasses>& intensities,
                           const std::array<double, kIntensityClasses>& probabilities, const SecurityParams& params);

DecoyEstimate decoy_estimate(const montecarlo::TallyTable& tally, const montecarlo::SimulationConfig& config,
                             const SecurityParams& params);

// floor(s0 + s1 - s1 h(phi) - leak - 6 log2(21/eps_sec) - log2(2/eps_cor)), clamped at 0.
std::uint64_t key_length(const DecoyEstimate& est, double leak_ec_bits, const SecurityParams& params);

// Same quantity before flooring and clamping.
double key_length_real(const DecoyEstimate& est, double leak_ec_bits, const SecurityParams& params);

double secret_key_rate(double key_length_bits, double elapsed_time_s);

// How the raw-key block is sized when evaluating a sweep point.
struct BlockPolicy {
  enum class Mode { FixedPulses, FixedBlock };
  Mode mode = Mode::FixedPulses;
  // FixedBlock: number of X-basis sifted bits to collect before distilling.
  double block_bits = 1e6;
  // FixedBlock: collection windows longer than this yield no key.
  double max_collection_time_s = std::numeric_limits<double>::infinity();
};

struct SweepScenario {
  channel::FiberLink link;
  channel::DetectorModel detector;
  double e_mis = 0.0;
  montecarlo::SimulationConfig source;  // intensities, probabilities, basis bias, pulse rate/count
  SecurityParams security;
  double leak_efficiency = 1.16;
  BlockPolicy block;
};

struct PointResult {
  double loss_db = 0.0;
  double transmittance = 0.0;  // channel only, detector efficiency excluded
  double qber = 0.0;           // X-basis sifted QBER
  double sifted_bits = 0.0;    // expected X-basis sifted detections
  double pulses = 0.0;
  double collection_time_s = 0.0;
  double leak_ec_bits = 0.0;
  DecoyEstimate estimate;
  std::uint64_t key_length_bits = 0;
  double skr_bps = 0.0;
};

// Expected per-intensity counts under the analytic detection/error model.
DecoyObservations expected_observations(const SweepScenario& sc, double pulses);

// Analytic pipeline at one operating point: expected counts -> decoy bounds
// -> leak estimate -> key length -> rate.
PointResult evaluate_point(const SweepScenario& sc);

struct CurveRow {
  double x = 0.0;  // distance in km or misalignment angle in radians
  PointResult point;
};

struct CurveTable {
  enum class Axis { Distance, Misalignment };
  Axis axis = Axis::Distance;
  std::vector<CurveRow> rows;
};

CurveTable sweep_distance(const SweepScenario& sc, const std::vector<double>& distances_km);
CurveTable sweep_misalignment(const SweepScenario& sc, const std::vector<double>& thetas_rad);

// Header: distance_km|theta_rad,loss_db,transmittance,qber,key_length_bits,skr_bps
std::string to_csv(const CurveTable& table);

}  // namespace hydroqkd::finitekey
