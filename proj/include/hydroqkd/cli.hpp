#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hydroqkd/postproc.hpp"
#include "hydroqkd/scenario.hpp"

namespace hydroqkd::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kAbort = 3,
  kExhausted = 4,
  kLedger = 5,
};

struct SessionReport {
  double loss_db = 0.0;
  double transmittance = 0.0;
  double elapsed_time_s = 0.0;
  std::uint64_t pulses = 0;
  std::uint64_t sifted_key_bits = 0;
  std::size_t sample_size = 0;
  double qber = 0.0;
  bool aborted = false;
  std::string abort_reason;
  finitekey::DecoyEstimate estimate;
  std::size_t reconcile_passes = 0;
  std::size_t parity_leak_bits = 0;
  double leak_ec_bits = 0.0;
  std::uint64_t key_length_bits = 0;
  double skr_bps = 0.0;
  montecarlo::TallyTable tally;
  postproc::SecureKey key;  // empty when key_length_bits == 0 or aborted

  std::string to_text() const;
};

// Monte Carlo -> decoy bounds -> QBER sampling and abort check ->
// reconciliation -> key length -> privacy amplification.
SessionReport run_pipeline(const Scenario& sc);

std::vector<double> parse_grid(const std::string& text);

// Entry point shared by the executable and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hydroqkd::cli
