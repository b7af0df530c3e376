#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "hydroqkd/channel.hpp"
#include "hydroqkd/finitekey.hpp"
#include "hydroqkd/montecarlo.hpp"

namespace hydroqkd {

struct PostprocSettings {
  enum class LeakSource { Parity, Analytic };

  double sample_fraction = 0.1;
  double qber_threshold = 0.11;
  double leak_efficiency = 1.16;
  // Parity: Leak_EC is the number of bits actually disclosed while
  // reconciling. Analytic: ceil(f n h(qber)).
  LeakSource leak_source = LeakSource::Parity;
  std::size_t max_reconcile_passes = 8;

  void validate() const;
};

// Everything a command needs: link, detector, environment, source, security
// and post-processing settings.
struct Scenario {
  channel::FiberLink link;
  channel::DetectorModel detector;
  channel::EnvironmentProfile environment = channel::EnvironmentProfile::hydropower_default();
  double stabilization_gain = 0.0;
  montecarlo::SimulationConfig simulation;
  finitekey::SecurityParams security;
  PostprocSettings postproc;
  finitekey::BlockPolicy sweep_block{finitekey::BlockPolicy::Mode::FixedBlock, 1e6, 600.0};

  void validate() const;

  montecarlo::RunInputs run_inputs() const;

  // Analytic sweep settings. The environment is reduced to its mean
  // misalignment probability over the collection window.
  finitekey::SweepScenario sweep_scenario() const;
};

// Mean of e_mis(t) over [0, horizon], sampled on `samples` evenly spaced points.
double mean_misalignment(const channel::EnvironmentProfile& env, double gain, double feedback_period_s,
                         double horizon_s, std::size_t samples = 100000);

// Sectioned key=value text. Sections: [link] [detector] [environment]
// [source] (repeatable, one vibration source each) [simulation] [security]
// [postproc] [sweep]. Unknown sections or keys are rejected. Without any
// [source] block the environment has no vibration sources.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::string& path);
std::string format_scenario(const Scenario& sc);

}  // namespace hydroqkd
