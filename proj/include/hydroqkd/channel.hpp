#pragma once

#include <utility>
#include <vector>

namespace hydroqkd::channel {

struct FiberLink {
  double attenuation_db_per_km = 0.2;
  double length_km = 10.0;

  void validate() const;
};

struct DetectorModel {
  double dark_count = 1e-6;   // p_dc, per gate per detector
  double after_pulse = 1e-4;  // p_ap
  double efficiency = 0.1;    // eta_det

  void validate() const;
};

// A mechanical vibration source coupling into polarization rotation.
struct NoiseSource {
  double frequency_hz = 10.0;
  double amplitude_mm = 1.0;
  double coupling_rad_per_mm = 0.05;
  double phase_rad = 0.0;

  void validate() const;
};

struct EnvironmentProfile {
  double baseline_misalignment_rad = 0.0;
  std::vector<NoiseSource> sources;

  void validate() const;

  // Turbine (10 Hz) and generator (60 Hz) sources, 1 mm each.
  static EnvironmentProfile hydropower_default();
};

// gamma = a L, in dB.
double total_loss_db(const FiberLink& link);

// eta_ch = 10^(-0.2 L / 10), the standard 0.2 dB/km fiber.
double channel_transmittance(double length_km);

// 10^(-gamma/10) for an arbitrary loss in dB.
double transmittance_from_loss(double loss_db);

// Transmittance of a link with its own attenuation coefficient.
double link_transmittance(const FiberLink& link);

// D_k = 1 - (1 - 2 p_dc) exp(-eta k), two detectors with dark counts.
// `eta` is the total transmittance including detector efficiency.
double detection_rate(double intensity, double eta, const DetectorModel& det);

// e_k = p_dc + e_mis (1 - exp(-eta k)) + p_ap D_k / 2.
double error_model(double intensity, double eta, const DetectorModel& det, double e_mis);

// min(e_k / D_k, 0.5). Throws DegenerateChannel when D_k = 0 but e_k > 0.
double qber_for_intensity(double intensity, double eta, const DetectorModel& det, double e_mis);

struct Misalignment {
  double theta_rad;
  double e_mis;
};

// theta(t) = theta0 + sum_i c_i A_i sin(2 pi f_i t + phi_i), e_mis = sin^2(theta).
Misalignment misalignment_at(const EnvironmentProfile& profile, double t);

double misalignment_probability(double theta_rad);

struct Stabilized {
  double corrected_theta_rad;
  double compensator_rad;  // state to carry into the next step
};

// One feedback step: the correction uses the compensator as it stood before
// this observation, then the compensator moves toward the observed angle by
// `gain`.
Stabilized stabilize(const EnvironmentProfile& profile, double gain, double t, double compensator_rad);

}  // namespace hydroqkd::channel
