#include "hydroqkd/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

#include "hydroqkd/error.hpp"

namespace hydroqkd {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& field, const std::string& v) {
  if (v == "inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) throw ConfigError(field, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec == std::errc{} && r.ptr == v.data() + v.size()) return out;
  // Accept integral values in scientific notation, e.g. 1e6.
  const double d = parse_double(field, v);
  if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19) {
    throw ConfigError(field, "expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::uint64_t>(d);
}

using Setter = std::function<void(Scenario&, const std::string& field, const std::string& value)>;

template <class F>
Setter real_field(F get) {
  return [get](Scenario& sc, const std::string& f, const std::string& v) { get(sc) = parse_double(f, v); };
}

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = [] {
    std::map<std::string, std::map<std::string, Setter>> t;
    t["link"]["attenuation_db_per_km"] = real_field([](Scenario& s) -> double& { return s.link.attenuation_db_per_km; });
    t["link"]["length_km"] = real_field([](Scenario& s) -> double& { return s.link.length_km; });
    t["detector"]["dark_count"] = real_field([](Scenario& s) -> double& { return s.detector.dark_count; });
    t["detector"]["after_pulse"] = real_field([](Scenario& s) -> double& { return s.detector.after_pulse; });
    t["detector"]["efficiency"] = real_field([](Scenario& s) -> double& { return s.detector.efficiency; });
    t["environment"]["baseline_misalignment_rad"] =
        real_field([](Scenario& s) -> double& { return s.environment.baseline_misalignment_rad; });
    t["environment"]["stabilization_gain"] = real_field([](Scenario& s) -> double& { return s.stabilization_gain; });
    t["environment"]["feedback_period_s"] =
        real_field([](Scenario& s) -> double& { return s.simulation.feedback_period_s; });
    t["source"]["frequency_hz"] =
        real_field([](Scenario& s) -> double& { return s.environment.sources.back().frequency_hz; });
    t["source"]["amplitude_mm"] =
        real_field([](Scenario& s) -> double& { return s.environment.sources.back().amplitude_mm; });
    t["source"]["coupling_rad_per_mm"] =
        real_field([](Scenario& s) -> double& { return s.environment.sources.back().coupling_rad_per_mm; });
    t["source"]["phase_rad"] = real_field([](Scenario& s) -> double& { return s.environment.sources.back().phase_rad; });
    t["simulation"]["pulse_count"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.simulation.pulse_count = parse_uint(f, v);
    };
    t["simulation"]["mu_signal"] = real_field([](Scenario& s) -> double& { return s.simulation.intensities[0]; });
    t["simulation"]["nu_decoy"] = real_field([](Scenario& s) -> double& { return s.simulation.intensities[1]; });
    t["simulation"]["nu_vacuum"] = real_field([](Scenario& s) -> double& { return s.simulation.intensities[2]; });
    t["simulation"]["p_signal"] =
        real_field([](Scenario& s) -> double& { return s.simulation.intensity_probabilities[0]; });
    t["simulation"]["p_decoy"] =
        real_field([](Scenario& s) -> double& { return s.simulation.intensity_probabilities[1]; });
    t["simulation"]["p_vacuum"] =
        real_field([](Scenario& s) -> double& { return s.simulation.intensity_probabilities[2]; });
    t["simulation"]["basis_probability_x"] =
        real_field([](Scenario& s) -> double& { return s.simulation.basis_probability_x; });
    t["simulation"]["pulse_rate_hz"] = real_field([](Scenario& s) -> double& { return s.simulation.pulse_rate_hz; });
    t["simulation"]["seed"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.simulation.seed = parse_uint(f, v);
    };
    t["simulation"]["streams"] = [](Scenario& s, const std::string& f, const std::string& v) {
      const auto n = parse_uint(f, v);
      if (n == 0 || n > 1u << 20) throw ConfigError(f, "must be in [1, 1048576]");
      s.simulation.streams = static_cast<std::uint32_t>(n);
    };
    t["security"]["epsilon_sec"] = real_field([](Scenario& s) -> double& { return s.security.epsilon_sec; });
    t["security"]["epsilon_cor"] = real_field([](Scenario& s) -> double& { return s.security.epsilon_cor; });
    t["postproc"]["sample_fraction"] = real_field([](Scenario& s) -> double& { return s.postproc.sample_fraction; });
    t["postproc"]["qber_threshold"] = real_field([](Scenario& s) -> double& { return s.postproc.qber_threshold; });
    t["postproc"]["leak_efficiency"] = real_field([](Scenario& s) -> double& { return s.postproc.leak_efficiency; });
    t["postproc"]["leak_source"] = [](Scenario& s, const std::string& f, const std::string& v) {
      if (v == "parity") {
        s.postproc.leak_source = PostprocSettings::LeakSource::Parity;
      } else if (v == "analytic") {
        s.postproc.leak_source = PostprocSettings::LeakSource::Analytic;
      } else {
        throw ConfigError(f, "expected 'parity' or 'analytic', got '" + v + "'");
      }
    };
    t["postproc"]["max_reconcile_passes"] = [](Scenario& s, const std::string& f, const std::string& v) {
      s.postproc.max_reconcile_passes = parse_uint(f, v);
    };
    t["sweep"]["mode"] = [](Scenario& s, const std::string& f, const std::string& v) {
      if (v == "fixed_pulses") {
        s.sweep_block.mode = finitekey::BlockPolicy::Mode::FixedPulses;
      } else if (v == "fixed_block") {
        s.sweep_block.mode = finitekey::BlockPolicy::Mode::FixedBlock;
      } else {
        throw ConfigError(f, "expected 'fixed_pulses' or 'fixed_block', got '" + v + "'");
      }
    };
    t["sweep"]["block_bits"] = real_field([](Scenario& s) -> double& { return s.sweep_block.block_bits; });
    t["sweep"]["max_collection_time_s"] =
        real_field([](Scenario& s) -> double& { return s.sweep_block.max_collection_time_s; });
    return t;
  }();
  return table;
}

// Re-labels errors from module validators with their scenario section.
template <class F>
void validated(const std::string& section, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    throw ConfigError(section + "." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
}

}  // namespace

void PostprocSettings::validate() const {
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) throw ConfigError("sample_fraction", "must be in (0, 1]");
  if (!(qber_threshold >= 0.0 && qber_threshold <= 0.5)) throw ConfigError("qber_threshold", "must be in [0, 0.5]");
  if (!(leak_efficiency >= 1.0)) throw ConfigError("leak_efficiency", "must be >= 1");
}

void Scenario::validate() const {
  validated("link", [&] { link.validate(); });
  validated("detector", [&] { detector.validate(); });
  validated("environment", [&] { environment.validate(); });
  if (!(stabilization_gain >= 0.0 && stabilization_gain <= 1.0)) {
    throw ConfigError("environment.stabilization_gain", "must be in [0, 1]");
  }
  validated("simulation", [&] { simulation.validate(); });
  if (!(simulation.intensities[1] > simulation.intensities[2])) {
    throw ConfigError("simulation.nu_decoy", "must exceed nu_vacuum");
  }
  if (!(simulation.intensities[0] > simulation.intensities[1] + simulation.intensities[2])) {
    throw ConfigError("simulation.mu_signal", "must exceed nu_decoy + nu_vacuum");
  }
  for (double p : simulation.intensity_probabilities) {
    if (!(p > 0.0)) throw ConfigError("simulation.intensity_probabilities", "every class needs p > 0");
  }
  validated("security", [&] { security.validate(); });
  validated("postproc", [&] { postproc.validate(); });
  if (!(sweep_block.block_bits > 0.0)) throw ConfigError("sweep.block_bits", "must be > 0");
  if (!(sweep_block.max_collection_time_s > 0.0)) throw ConfigError("sweep.max_collection_time_s", "must be > 0");
}

montecarlo::RunInputs Scenario::run_inputs() const {
  return {simulation, link, detector, environment, stabilization_gain};
}

double mean_misalignment(const channel::EnvironmentProfile& env, double gain, double feedback_period_s,
                         double horizon_s, std::size_t samples) {
  const montecarlo::MisalignmentTrack track(env, gain, feedback_period_s, horizon_s);
  if (env.sources.empty() && gain == 0.0) return track.e_mis(0.0);
  samples = std::max<std::size_t>(samples, 2);
  double acc = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    acc += track.e_mis(horizon_s * static_cast<double>(i) / static_cast<double>(samples));
  }
  return acc / static_cast<double>(samples);
}

finitekey::SweepScenario Scenario::sweep_scenario() const {
  finitekey::SweepScenario sw;
  sw.link = link;
  sw.detector = detector;
  sw.source = simulation;
  sw.security = security;
  sw.leak_efficiency = postproc.leak_efficiency;
  sw.block = sweep_block;
  sw.e_mis = mean_misalignment(environment, stabilization_gain, simulation.feedback_period_s,
                               simulation.elapsed_time_s());
  return sw;
}

Scenario parse_scenario(std::istream& in) {
  Scenario sc;
  sc.environment.sources.clear();
  const auto& table = setters();
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string text = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (text.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where, "unterminated section header");
      section = trim(text.substr(1, text.size() - 2));
      if (!table.contains(section)) throw ConfigError(section, "unknown section");
      if (section == "source") sc.environment.sources.emplace_back();
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (section.empty()) throw ConfigError(key, "field outside any section");
    const auto& fields = table.at(section);
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(section + "." + key, "unknown field");
    it->second(sc, section + "." + key, value);
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open scenario file");
  return parse_scenario(in);
}

std::string format_scenario(const Scenario& sc) {
  std::ostringstream o;
  o << "# hydroqkd scenario\n";
  o << "\n[link]\n";
  o << "attenuation_db_per_km = " << fmt_double(sc.link.attenuation_db_per_km) << "\n";
  o << "length_km = " << fmt_double(sc.link.length_km) << "\n";
  o << "\n[detector]\n";
  o << "dark_count = " << fmt_double(sc.detector.dark_count) << "\n";
  o << "after_pulse = " << fmt_double(sc.detector.after_pulse) << "\n";
  o << "efficiency = " << fmt_double(sc.detector.efficiency) << "\n";
  o << "\n[environment]\n";
  o << "baseline_misalignment_rad = " << fmt_double(sc.environment.baseline_misalignment_rad) << "\n";
  o << "stabilization_gain = " << fmt_double(sc.stabilization_gain) << "\n";
  o << "feedback_period_s = " << fmt_double(sc.simulation.feedback_period_s) << "\n";
  for (const auto& s : sc.environment.sources) {
    o << "\n[source]\n";
    o << "frequency_hz = " << fmt_double(s.frequency_hz) << "\n";
    o << "amplitude_mm = " << fmt_double(s.amplitude_mm) << "\n";
    o << "coupling_rad_per_mm = " << fmt_double(s.coupling_rad_per_mm) << "\n";
    o << "phase_rad = " << fmt_double(s.phase_rad) << "\n";
  }
  const auto& sim = sc.simulation;
  o << "\n[simulation]\n";
  o << "pulse_count = " << sim.pulse_count << "\n";
  o << "mu_signal = " << fmt_double(sim.intensities[0]) << "\n";
  o << "nu_decoy = " << fmt_double(sim.intensities[1]) << "\n";
  o << "nu_vacuum = " << fmt_double(sim.intensities[2]) << "\n";
  o << "p_signal = " << fmt_double(sim.intensity_probabilities[0]) << "\n";
  o << "p_decoy = " << fmt_double(sim.intensity_probabilities[1]) << "\n";
  o << "p_vacuum = " << fmt_double(sim.intensity_probabilities[2]) << "\n";
  o << "basis_probability_x = " << fmt_double(sim.basis_probability_x) << "\n";
  o << "pulse_rate_hz = " << fmt_double(sim.pulse_rate_hz) << "\n";
  o << "seed = " << sim.seed << "\n";
  o << "streams = " << sim.streams << "\n";
  o << "\n[security]\n";
  o << "epsilon_sec = " << fmt_double(sc.security.epsilon_sec) << "\n";
  o << "epsilon_cor = " << fmt_double(sc.security.epsilon_cor) << "\n";
  o << "\n[postproc]\n";
  o << "sample_fraction = " << fmt_double(sc.postproc.sample_fraction) << "\n";
  o << "qber_threshold = " << fmt_double(sc.postproc.qber_threshold) << "\n";
  o << "leak_efficiency = " << fmt_double(sc.postproc.leak_efficiency) << "\n";
  o << "leak_source = " << (sc.postproc.leak_source == PostprocSettings::LeakSource::Parity ? "parity" : "analytic")
    << "\n";
  o << "max_reconcile_passes = " << sc.postproc.max_reconcile_passes << "\n";
  o << "\n[sweep]\n";
  o << "mode = " << (sc.sweep_block.mode == finitekey::BlockPolicy::Mode::FixedPulses ? "fixed_pulses" : "fixed_block")
    << "\n";
  o << "block_bits = " << fmt_double(sc.sweep_block.block_bits) << "\n";
  o << "max_collection_time_s = " << fmt_double(sc.sweep_block.max_collection_time_s) << "\n";
  return o.str();
}

}  // namespace hydroqkd
