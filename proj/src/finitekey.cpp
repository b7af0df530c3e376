#include "hydroqkd/finitekey.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>

#include "hydroqkd/bitops.hpp"
#include "hydroqkd/error.hpp"
#include "hydroqkd/postproc.hpp"

namespace hydroqkd::finitekey {

namespace {

constexpr int kX = static_cast<int>(montecarlo::Basis::X);
constexpr int kZ = static_cast<int>(montecarlo::Basis::Z);

double sum(const std::array<double, kIntensityClasses>& v) { return v[0] + v[1] + v[2]; }

// Finite-size corrected estimates of the expected counts, rescaled by e^k / p_k.
struct Corrected {
  std::array<double, kIntensityClasses> lower{};
  std::array<double, kIntensityClasses> upper{};
};

Corrected hoeffding(const std::array<double, kIntensityClasses>& counts,
                    const std::array<double, kIntensityClasses>& intensities,
                    const std::array<double, kIntensityClasses>& probabilities, double epsilon_sec) {
  const double delta = std::sqrt(sum(counts) / 2.0 * std::log(21.0 / epsilon_sec));
  Corrected c;
  for (int k = 0; k < kIntensityClasses; ++k) {
    const double scale = std::exp(intensities[k]) / probabilities[k];
    c.lower[k] = scale * (counts[k] - delta);
    c.upper[k] = scale * (counts[k] + delta);
  }
  return c;
}

// tau_n = sum_k p_k e^{-k} k^n / n!
double tau(int n, const std::array<double, kIntensityClasses>& intensities,
           const std::array<double, kIntensityClasses>& probabilities) {
  double t = 0.0;
  for (int k = 0; k < kIntensityClasses; ++k) {
    t += probabilities[k] * std::exp(-intensities[k]) * std::pow(intensities[k], n) / std::tgamma(n + 1.0);
  }
  return t;
}

struct VacuumSingle {
  double s0;
  double s1;
};

VacuumSingle vacuum_single_bounds(const Corrected& n, const std::array<double, kIntensityClasses>& mu,
                                  double tau0, double tau1) {
  const double mu1 = mu[0], mu2 = mu[1], mu3 = mu[2];
  const double s0 = std::max(0.0, tau0 * (mu2 * n.lower[2] - mu3 * n.upper[1]) / (mu2 - mu3));
  const double s1 = tau1 * mu1 *
                    (n.lower[1] - n.upper[2] - (mu2 * mu2 - mu3 * mu3) / (mu1 * mu1) * (n.upper[0] - s0 / tau0)) /
                    (mu1 * (mu2 - mu3) - mu2 * mu2 + mu3 * mu3);
  return {s0, std::max(0.0, s1)};
}

// Deviation term for sampling phase errors from the Z basis into the X basis.
double sampling_deviation(double epsilon_sec, double ratio, double n_z, double n_x) {
  const double b = std::clamp(ratio, 1e-12, 0.5);
  const double arg = (n_z + n_x) / (n_z * n_x * (1.0 - b) * b) * (21.0 * 21.0) / (epsilon_sec * epsilon_sec);
  const double log_term = std::log2(arg);
  if (log_term <= 0.0) return 0.0;
  return std::sqrt((n_z + n_x) * (1.0 - b) * b / (n_z * n_x * std::numbers::ln2) * log_term);
}

}  // namespace

void SecurityParams::validate() const {
  if (!(epsilon_sec > 0.0 && epsilon_sec < 1.0)) throw ConfigError("epsilon_sec", "must be in (0, 1)");
  if (!(epsilon_cor > 0.0 && epsilon_cor < 1.0)) throw ConfigError("epsilon_cor", "must be in (0, 1)");
}

DecoyEstimate oracle_estimate(const montecarlo::TallyTable& tally) {
  if (!tally.has_oracle) throw EstimationError("tally carries no photon-number breakdown");
  DecoyEstimate est;
  est.mode = EstimateMode::Oracle;
  double errors1 = 0.0;
  for (const auto& ct : tally.classes) {
    est.s_x0 += static_cast<double>(ct.oracle[kX][0].detected);
    est.s_x1 += static_cast<double>(ct.oracle[kX][1].detected);
    errors1 += static_cast<double>(ct.oracle[kX][1].errors);
  }
  est.phi_x = est.s_x1 > 0.0 ? std::min(errors1 / est.s_x1, 0.5) : 0.0;
  return est;
}

DecoyObservations observations_from(const montecarlo::TallyTable& tally) {
  DecoyObservations obs;
  for (int k = 0; k < kIntensityClasses; ++k) {
    const auto& ct = tally.classes[k];
    obs.n_x[k] = static_cast<double>(ct.sifted[kX].detected);
    obs.n_z[k] = static_cast<double>(ct.sifted[kZ].detected);
    obs.m_z[k] = static_cast<double>(ct.sifted[kZ].errors);
  }
  return obs;
}

DecoyEstimate decoy_bounds(const DecoyObservations& obs, const std::array<double, kIntensityClasses>& mu,
                           const std::array<double, kIntensityClasses>& p, const SecurityParams& params) {
  params.validate();
  if (!(mu[0] > mu[1] && mu[1] > mu[2] && mu[2] >= 0.0)) {
    throw EstimationError("decoy estimation requires signal > decoy > vacuum >= 0");
  }
  if (!(mu[0] > mu[1] + mu[2])) throw EstimationError("decoy estimation requires signal > decoy + vacuum");
  for (double pk : p) {
    if (!(pk > 0.0)) throw EstimationError("every intensity class needs a positive selection probability");
  }

  DecoyEstimate est;
  est.mode = EstimateMode::Bounded;
  est.phi_x = 0.5;
  if (sum(obs.n_x) <= 0.0) return est;

  const double tau0 = tau(0, mu, p);
  const double tau1 = tau(1, mu, p);

  const auto x = vacuum_single_bounds(hoeffding(obs.n_x, mu, p, params.epsilon_sec), mu, tau0, tau1);
  est.s_x0 = x.s0;
  est.s_x1 = x.s1;

  const auto z = vacuum_single_bounds(hoeffding(obs.n_z, mu, p, params.epsilon_sec), mu, tau0, tau1);
  const Corrected m = hoeffding(obs.m_z, mu, p, params.epsilon_sec);
  const double v_z1 = tau1 * (m.upper[1] - m.lower[2]) / (mu[1] - mu[2]);

  if (z.s1 > 0.0 && est.s_x1 > 0.0) {
    const double ratio = std::max(0.0, v_z1) / z.s1;
    est.phi_x = std::min(0.5, ratio + sampling_deviation(params.epsilon_sec, ratio, z.s1, est.s_x1));
  }
  return est;
}

DecoyEstimate decoy_estimate(const montecarlo::TallyTable& tally, const montecarlo::SimulationConfig& config,
                             const SecurityParams& params) {
  for (const auto& ct : tally.classes) {
    if (ct.sent == 0) throw EstimationError("every intensity class must have been sent at least once");
  }
  return decoy_bounds(observations_from(tally), config.intensities, config.intensity_probabilities, params);
}

double key_length_real(const DecoyEstimate& est, double leak_ec_bits, const SecurityParams& params) {
  params.validate();
  return est.s_x0 + est.s_x1 - est.s_x1 * binary_entropy(est.phi_x) - leak_ec_bits -
         6.0 * std::log2(21.0 / params.epsilon_sec) - std::log2(2.0 / params.epsilon_cor);
}

std::uint64_t key_length(const DecoyEstimate& est, double leak_ec_bits, const SecurityParams& params) {
  const double l = key_length_real(est, leak_ec_bits, params);
  if (!(l > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::floor(l));
}

double secret_key_rate(double key_length_bits, double elapsed_time_s) {
  if (!(elapsed_time_s > 0.0)) throw DomainError("secret_key_rate: elapsed time must be > 0");
  return key_length_bits / elapsed_time_s;
}

DecoyObservations expected_observations(const SweepScenario& sc, double pulses) {
  const double eta = channel::link_transmittance(sc.link) * sc.detector.efficiency;
  const double px = sc.source.basis_probability_x;
  DecoyObservations obs;
  for (int k = 0; k < kIntensityClasses; ++k) {
    const double mu = sc.source.intensities[k];
    const double d = channel::detection_rate(mu, eta, sc.detector);
    const double q = channel::qber_for_intensity(mu, eta, sc.detector, sc.e_mis);
    const double sent = pulses * sc.source.intensity_probabilities[k];
    obs.n_x[k] = sent * px * px * d;
    obs.n_z[k] = sent * (1.0 - px) * (1.0 - px) * d;
    obs.m_z[k] = obs.n_z[k] * q;
  }
  return obs;
}

PointResult evaluate_point(const SweepScenario& sc) {
  sc.link.validate();
  sc.detector.validate();
  sc.source.validate();
  sc.security.validate();
  if (!(sc.e_mis >= 0.0 && sc.e_mis <= 1.0)) throw ConfigError("e_mis", "must be in [0, 1]");

  PointResult r;
  r.loss_db = channel::total_loss_db(sc.link);
  r.transmittance = channel::transmittance_from_loss(r.loss_db);
  const double eta = r.transmittance * sc.detector.efficiency;
  const double px = sc.source.basis_probability_x;

  double x_per_pulse = 0.0;
  double x_errors_per_pulse = 0.0;
  for (int k = 0; k < kIntensityClasses; ++k) {
    const double mu = sc.source.intensities[k];
    const double d = channel::detection_rate(mu, eta, sc.detector);
    const double share = sc.source.intensity_probabilities[k] * px * px * d;
    x_per_pulse += share;
    x_errors_per_pulse += share * channel::qber_for_intensity(mu, eta, sc.detector, sc.e_mis);
  }
  r.qber = x_per_pulse > 0.0 ? x_errors_per_pulse / x_per_pulse : 0.0;

  bool over_budget = false;
  if (sc.block.mode == BlockPolicy::Mode::FixedPulses) {
    r.pulses = static_cast<double>(sc.source.pulse_count);
  } else {
    if (!(sc.block.block_bits > 0.0)) throw ConfigError("block_bits", "must be > 0");
    r.pulses = x_per_pulse > 0.0 ? sc.block.block_bits / x_per_pulse : std::numeric_limits<double>::infinity();
  }
  r.collection_time_s = r.pulses / sc.source.pulse_rate_hz;
  if (sc.block.mode == BlockPolicy::Mode::FixedBlock) {
    over_budget = !(r.collection_time_s <= sc.block.max_collection_time_s);
  }
  if (over_budget || !std::isfinite(r.pulses)) return r;

  r.sifted_bits = r.pulses * x_per_pulse;
  r.estimate = decoy_bounds(expected_observations(sc, r.pulses), sc.source.intensities,
                            sc.source.intensity_probabilities, sc.security);
  r.leak_ec_bits = static_cast<double>(
      postproc::leak_accounting(static_cast<std::uint64_t>(std::llround(r.sifted_bits)), std::min(r.qber, 0.5),
                                sc.leak_efficiency));
  r.key_length_bits = key_length(r.estimate, r.leak_ec_bits, sc.security);
  if (r.collection_time_s > 0.0) {
    r.skr_bps = secret_key_rate(static_cast<double>(r.key_length_bits), r.collection_time_s);
  }
  return r;
}

namespace {

// An exception may not escape an OpenMP region; the first one is carried out
// and rethrown.
void fill_rows(CurveTable& table, const std::vector<double>& xs,
               const std::function<PointResult(double)>& eval) {
  table.rows.resize(xs.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(xs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      table.rows[i] = {xs[i], eval(xs[i])};
    } catch (...) {
#pragma omp critical(hydroqkd_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace


CurveTable sweep_distance(const SweepScenario& sc, const std::vector<double>& distances_km) {
  if (distances_km.empty()) throw DomainError("sweep_distance: empty distance list");
  CurveTable table;
  table.axis = CurveTable::Axis::Distance;
  for (double d : distances_km) {
    if (!(d >= 0.0)) throw DomainError("sweep_distance: distances must be >= 0");
  }
  fill_rows(table, distances_km, [&sc](double d) {
    SweepScenario row = sc;
    row.link.length_km = d;
    return evaluate_point(row);
  });
  return table;
}

CurveTable sweep_misalignment(const SweepScenario& sc, const std::vector<double>& thetas_rad) {
  if (thetas_rad.empty()) throw DomainError("sweep_misalignment: empty angle list");
  for (double t : thetas_rad) {
    if (!(t >= 0.0 && t <= std::numbers::pi / 2)) {
      throw DomainError("sweep_misalignment: angles must lie in [0, pi/2]");
    }
  }
  CurveTable table;
  table.axis = CurveTable::Axis::Misalignment;
  fill_rows(table, thetas_rad, [&sc](double theta) {
    SweepScenario row = sc;
    row.e_mis = channel::misalignment_probability(theta);
    return evaluate_point(row);
  });
  return table;
}

std::string to_csv(const CurveTable& table) {
  std::string out = table.axis == CurveTable::Axis::Distance ? "distance_km" : "theta_rad";
  out += ",loss_db,transmittance,qber,key_length_bits,skr_bps\n";
  char line[256];
  for (const auto& row : table.rows) {
    std::snprintf(line, sizeof line, "%.6g,%.6g,%.6g,%.6g,%llu,%.6g\n", row.x, row.point.loss_db,
                  row.point.transmittance, row.point.qber,
                  static_cast<unsigned long long>(row.point.key_length_bits), row.point.skr_bps);
    out += line;
  }
  return out;
}

}  // namespace hydroqkd::finitekey
