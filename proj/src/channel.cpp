#include "hydroqkd/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hydroqkd/error.hpp"

namespace hydroqkd::channel {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void FiberLink::validate() const {
  if (!(attenuation_db_per_km > 0.0) || !std::isfinite(attenuation_db_per_km)) {
    throw ConfigError("attenuation_db_per_km", "must be > 0");
  }
  if (!(length_km >= 0.0) || !std::isfinite(length_km)) {
    throw ConfigError("length_km", "must be >= 0");
  }
}

void DetectorModel::validate() const {
  if (!is_probability(dark_count) || dark_count > 0.5) {
    throw ConfigError("dark_count", "must be in [0, 0.5]");
  }
  if (!is_probability(after_pulse)) throw ConfigError("after_pulse", "must be in [0, 1]");
  if (!is_probability(efficiency)) throw ConfigError("efficiency", "must be in [0, 1]");
}

void NoiseSource::validate() const {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) {
    throw ConfigError("frequency_hz", "must be > 0");
  }
  if (!(amplitude_mm >= 0.0) || !std::isfinite(amplitude_mm)) {
    throw ConfigError("amplitude_mm", "must be >= 0");
  }
  if (!(coupling_rad_per_mm >= 0.0) || !std::isfinite(coupling_rad_per_mm)) {
    throw ConfigError("coupling_rad_per_mm", "must be >= 0");
  }
  if (!std::isfinite(phase_rad)) throw ConfigError("phase_rad", "must be finite");
}

void EnvironmentProfile::validate() const {
  if (!(baseline_misalignment_rad >= 0.0 && baseline_misalignment_rad <= std::numbers::pi / 2)) {
    throw ConfigError("baseline_misalignment_rad", "must be in [0, pi/2]");
  }
  for (const auto& s : sources) s.validate();
}

EnvironmentProfile EnvironmentProfile::hydropower_default() {
  EnvironmentProfile p;
  p.sources.push_back({.frequency_hz = 10.0, .amplitude_mm = 1.0, .coupling_rad_per_mm = 0.05, .phase_rad = 0.0});
  p.sources.push_back({.frequency_hz = 60.0, .amplitude_mm = 1.0, .coupling_rad_per_mm = 0.05, .phase_rad = 0.0});
  return p;
}

double total_loss_db(const FiberLink& link) {
  link.validate();
  return link.attenuation_db_per_km * link.length_km;
}

double channel_transmittance(double length_km) {
  if (!(length_km >= 0.0)) throw DomainError("channel_transmittance: negative length");
  return std::pow(10.0, -0.2 * length_km / 10.0);
}

double transmittance_from_loss(double loss_db) {
  if (!(loss_db >= 0.0)) throw DomainError("transmittance_from_loss: negative loss");
  return std::pow(10.0, -loss_db / 10.0);
}

double link_transmittance(const FiberLink& link) { return transmittance_from_loss(total_loss_db(link)); }

double detection_rate(double intensity, double eta, const DetectorModel& det) {
  if (!(intensity >= 0.0)) throw DomainError("detection_rate: negative intensity");
  if (!is_probability(eta)) throw DomainError("detection_rate: eta outside [0, 1]");
  // 1 - (1-2p)e^{-x} = -expm1(-x) + 2p e^{-x}, accurate when both terms are small.
  const double x = eta * intensity;
  const double d = -std::expm1(-x) + 2.0 * det.dark_count * std::exp(-x);
  return std::clamp(d, 0.0, 1.0);
}

double error_model(double intensity, double eta, const DetectorModel& det, double e_mis) {
  if (!is_probability(e_mis)) throw DomainError("error_model: e_mis outside [0, 1]");
  const double d = detection_rate(intensity, eta, det);
  return det.dark_count + e_mis * (-std::expm1(-eta * intensity)) + det.after_pulse * d / 2.0;
}

double qber_for_intensity(double intensity, double eta, const DetectorModel& det, double e_mis) {
  const double e = error_model(intensity, eta, det, e_mis);
  const double d = detection_rate(intensity, eta, det);
  if (d == 0.0) {
    if (e > 0.0) throw DegenerateChannel("error rate is positive but detection rate is zero");
    return 0.0;
  }
  return std::min(e / d, 0.5);
}

double misalignment_probability(double theta_rad) {
  const double s = std::sin(theta_rad);
  return std::clamp(s * s, 0.0, 1.0);
}

Misalignment misalignment_at(const EnvironmentProfile& profile, double t) {
  if (!(t >= 0.0)) throw DomainError("misalignment_at: negative time");
  double theta = profile.baseline_misalignment_rad;
  for (const auto& s : profile.sources) {
    theta += s.coupling_rad_per_mm * s.amplitude_mm *
             std::sin(2.0 * std::numbers::pi * s.frequency_hz * t + s.phase_rad);
  }
  return {theta, misalignment_probability(theta)};
}

Stabilized stabilize(const EnvironmentProfile& profile, double gain, double t, double compensator_rad) {
  if (!(gain >= 0.0 && gain <= 1.0)) throw DomainError("stabilize: gain outside [0, 1]");
  const double raw = misalignment_at(profile, t).theta_rad;
  return {raw - compensator_rad, compensator_rad + gain * (raw - compensator_rad)};
}

}  // namespace hydroqkd::channel
