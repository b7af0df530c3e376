#include "hydroqkd/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "hydroqkd/crypto.hpp"
#include "hydroqkd/error.hpp"

namespace hydroqkd::cli {

namespace {

// Stream indices reserved for the classical post-processing generators, far
// above any Monte Carlo stream index.
constexpr std::uint64_t kSamplingStream = 0xC0FFEE00ULL;
constexpr std::uint64_t kReconcileStream = 0xC0FFEE01ULL;
constexpr std::uint64_t kAmplifyStream = 0xC0FFEE02ULL;

std::string g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(path, "cannot write file");
  out << content;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file(path, content);
  }
}

crypto::KeyStore load_store(const std::string& key_path, const std::string& ledger_path) {
  std::ifstream key_in(key_path);
  if (!key_in) throw ConfigError(key_path, "cannot open key file");
  crypto::KeyStore store(crypto::read_key_file(key_in));
  std::ifstream ledger_in(ledger_path);
  if (ledger_in) store.replay(crypto::read_ledger(ledger_in));
  return store;
}

}  // namespace

std::string SessionReport::to_text() const {
  std::ostringstream o;
  auto row = [&](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
  row("pulses", std::to_string(pulses));
  row("elapsed_time_s", g6(elapsed_time_s));
  row("loss_db", g6(loss_db));
  row("transmittance", g6(transmittance));
  for (int c = 0; c < montecarlo::kIntensityClasses; ++c) {
    const auto name = std::string(montecarlo::class_name(static_cast<montecarlo::IntensityClass>(c)));
    const auto& ct = tally.classes[c];
    row(("sent_" + name).c_str(), std::to_string(ct.sent));
    row(("detected_" + name).c_str(), std::to_string(ct.detected));
    row(("detected_sifted_" + name).c_str(), std::to_string(ct.sifted_total().detected));
    row(("errors_sifted_" + name).c_str(), std::to_string(ct.sifted_total().errors));
  }
  row("sifted_key_bits", std::to_string(sifted_key_bits));
  row("qber_sample_size", std::to_string(sample_size));
  row("qber", g6(qber));
  row("decision", aborted ? "abort" : "pass");
  if (aborted) row("abort_reason", abort_reason);
  row("s_x0", g6(estimate.s_x0));
  row("s_x1", g6(estimate.s_x1));
  row("phi_x", g6(estimate.phi_x));
  row("reconcile_passes", std::to_string(reconcile_passes));
  row("parity_leak_bits", std::to_string(parity_leak_bits));
  row("leak_ec_bits", g6(leak_ec_bits));
  row("key_length_bits", std::to_string(key_length_bits));
  row("skr_bps", g6(skr_bps));
  return o.str();
}

SessionReport run_pipeline(const Scenario& sc) {
  sc.validate();
  SessionReport rep;
  const auto inputs = sc.run_inputs();
  auto session = montecarlo::run_session(inputs);
  rep.tally = session.tally;
  rep.pulses = sc.simulation.pulse_count;
  rep.elapsed_time_s = session.tally.elapsed_time_s;
  rep.loss_db = channel::total_loss_db(sc.link);
  rep.transmittance = channel::transmittance_from_loss(rep.loss_db);
  rep.estimate = finitekey::decoy_estimate(session.tally, sc.simulation, sc.security);
  rep.sifted_key_bits = session.key_pair.size();
  if (session.key_pair.size() == 0) return rep;

  Rng sampling(sc.simulation.seed, kSamplingStream);
  const auto q = postproc::estimate_qber(session.key_pair, sc.postproc.sample_fraction, sampling);
  rep.qber = q.qber;
  rep.sample_size = q.sample_size;
  if (postproc::abort_check(q.qber, sc.postproc.qber_threshold) == postproc::Decision::Abort) {
    rep.aborted = true;
    rep.abort_reason = "qber above threshold";
    return rep;
  }

  Rng reconcile_rng(sc.simulation.seed, kReconcileStream);
  const auto rec = postproc::reconcile(q.remaining, sc.postproc.max_reconcile_passes, reconcile_rng);
  rep.reconcile_passes = rec.passes;
  rep.parity_leak_bits = rec.leaked_bits;
  if (!rec.verified) {
    rep.aborted = true;
    rep.abort_reason = "reconciliation did not converge";
    return rep;
  }

  rep.leak_ec_bits = sc.postproc.leak_source == PostprocSettings::LeakSource::Parity
                         ? static_cast<double>(rec.leaked_bits)
                         : static_cast<double>(postproc::leak_accounting(
                               q.remaining.size(), std::min(q.qber, 0.5), sc.postproc.leak_efficiency));
  rep.key_length_bits = std::min<std::uint64_t>(finitekey::key_length(rep.estimate, rep.leak_ec_bits, sc.security),
                                                rec.corrected.size());
  rep.skr_bps = finitekey::secret_key_rate(static_cast<double>(rep.key_length_bits), rep.elapsed_time_s);
  if (rep.key_length_bits == 0) return rep;

  Rng amplify(sc.simulation.seed, kAmplifyStream);
  const std::size_t n = rec.corrected.size();
  BitString seed;
  seed.reserve(n + rep.key_length_bits - 1);
  for (std::size_t i = 0; i + 1 < n + rep.key_length_bits; ++i) seed.push_back((amplify() >> 63) != 0);
  rep.key = postproc::privacy_amplify(rec.corrected.alice, rep.key_length_bits, seed);
  rep.key.epsilon_sec = sc.security.epsilon_sec;
  rep.key.provenance = "seed-" + std::to_string(sc.simulation.seed);
  return rep;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("grid", "empty grid entry");
    const std::string v = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      throw ConfigError("grid", "not a number: '" + v + "'");
    }
    if (used != v.size() || !std::isfinite(x)) throw ConfigError("grid", "not a number: '" + v + "'");
    grid.push_back(x);
  }
  if (grid.empty()) throw ConfigError("grid", "grid is empty");
  return grid;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decoy-state BB84 link simulator and key toolkit"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_path;
  std::string report_path;
  std::string tally_path;
  std::string grid_text;
  std::string in_path;
  std::string key_path;
  std::string ledger_path;
  std::int64_t seed = -1;
  bool degrees = false;
  double skr = -1.0;
  double bandwidth = -1.0;

  auto* init = app.add_subcommand("init", "Write the reference scenario with every default");
  init->add_option("--out", out_path, "Output path (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Run the full pipeline and write the secure key");
  simulate->add_option("--scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--out", out_path, "Key file")->required();
  simulate->add_option("--report", report_path, "Report path (default stdout)");
  simulate->add_option("--tally", tally_path, "Also write the Monte Carlo tally as CSV");
  simulate->add_option("--seed", seed, "Override the scenario seed");

  auto* sweep_d = app.add_subcommand("sweep-distance", "Key rate against fiber length (CSV)");
  auto* sweep_m = app.add_subcommand("sweep-misalignment", "Key rate against misalignment angle (CSV)");
  for (auto* sub : {sweep_d, sweep_m}) {
    sub->add_option("--scenario", scenario_path, "Scenario file")->required();
    sub->add_option("--grid", grid_text, "Comma-separated grid")->required();
    sub->add_option("--out", out_path, "CSV path (default stdout)");
    sub->add_option("--seed", seed, "Override the scenario seed");
  }
  sweep_m->add_flag("--degrees", degrees, "Grid given in degrees instead of radians");

  auto* encrypt = app.add_subcommand("encrypt", "One-time-pad encrypt an ASCII file");
  auto* decrypt = app.add_subcommand("decrypt", "Decrypt a one-time-pad ciphertext file");
  for (auto* sub : {encrypt, decrypt}) {
    sub->add_option("--in", in_path, "Input file")->required();
    sub->add_option("--key", key_path, "Key file")->required();
    sub->add_option("--ledger", ledger_path, "Ledger file")->required();
    sub->add_option("--out", out_path, "Output file")->required();
  }

  auto* plan = app.add_subcommand("plan", "Choose OTP or authentication-only for a link");
  plan->add_option("--skr", skr, "Secret key rate in bits/s");
  plan->add_option("--scenario", scenario_path, "Derive the key rate from a scenario instead");
  plan->add_option("--bandwidth", bandwidth, "Bits/s of traffic to protect")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  auto load = [&]() {
    Scenario sc = load_scenario(scenario_path);
    if (seed >= 0) sc.simulation.seed = static_cast<std::uint64_t>(seed);
    return sc;
  };

  try {
    if (init->parsed()) {
      Scenario sc;
      emit(out_path, format_scenario(sc), out);
      return kOk;
    }

    if (simulate->parsed()) {
      const Scenario sc = load();
      const SessionReport rep = run_pipeline(sc);
      if (!tally_path.empty()) write_file(tally_path, montecarlo::to_csv(rep.tally));
      emit(report_path, rep.to_text(), out);
      if (rep.aborted) {
        err << "protocol aborted: " << rep.abort_reason << "\n";
        return kAbort;
      }
      std::ostringstream key;
      if (rep.key_length_bits > 0) crypto::write_key_file(key, {rep.key.bits});
      write_file(out_path, key.str());
      return kOk;
    }

    if (sweep_d->parsed() || sweep_m->parsed()) {
      const Scenario sc = load();
      auto grid = parse_grid(grid_text);
      finitekey::CurveTable table;
      if (sweep_d->parsed()) {
        for (double d : grid) {
          if (!(d >= 0.0)) throw ConfigError("grid", "distances must be >= 0");
        }
        table = finitekey::sweep_distance(sc.sweep_scenario(), grid);
      } else {
        for (double& t : grid) {
          if (degrees) t *= std::numbers::pi / 180.0;
          if (!(t >= 0.0 && t <= std::numbers::pi / 2 + 1e-12)) {
            throw ConfigError("grid", "angles must lie in [0, pi/2]");
          }
          t = std::min(t, std::numbers::pi / 2);
        }
        table = finitekey::sweep_misalignment(sc.sweep_scenario(), grid);
      }
      emit(out_path, finitekey::to_csv(table), out);
      return kOk;
    }

    if (encrypt->parsed()) {
      const std::string message = read_file(in_path);
      const BitString bits = encode_ascii7(message);
      crypto::KeyStore store = load_store(key_path, ledger_path);
      const auto ct = crypto::otp_encrypt(bits, store);
      if (ct.key_range.size() > 0) {
        std::ofstream ledger(ledger_path, std::ios::app);
        if (!ledger) throw ConfigError(ledger_path, "cannot append to ledger");
        ledger << crypto::format_ledger_entry(ct.key_range) << "\n";
      }
      write_file(out_path, "# key_range " + std::to_string(ct.key_range.start_bit) + " " +
                               std::to_string(ct.key_range.end_bit) + "\n" + ct.bits.to_string() + "\n");
      return kOk;
    }

    if (decrypt->parsed()) {
      std::istringstream in(read_file(in_path));
      std::string header;
      std::string body;
      std::getline(in, header);
      std::getline(in, body);
      std::size_t start = 0;
      std::size_t end = 0;
      char tag[16] = {};
      if (std::sscanf(header.c_str(), "# %15s %zu %zu", tag, &start, &end) != 3 ||
          std::string(tag) != "key_range") {
        throw ConfigError(in_path, "missing '# key_range <start> <end>' header");
      }
      const BitString ct = BitString::parse(body);
      crypto::KeyStore store = load_store(key_path, ledger_path);
      BitString plain;
      if (start != end) {
        const auto* a = store.find(start, end);
        if (a == nullptr || a->purpose != "otp") {
          throw LedgerConflict("no otp allocation recorded for bits [" + std::to_string(start) + ", " +
                               std::to_string(end) + ")");
        }
        if (a->size() != ct.size()) throw LedgerConflict("ciphertext length does not match its key range");
        plain = crypto::otp_decrypt(ct, store.bits_of(*a));
      } else if (!ct.empty()) {
        throw LedgerConflict("non-empty ciphertext with an empty key range");
      }
      write_file(out_path, decode_ascii7(plain));
      return kOk;
    }

    if (plan->parsed()) {
      double rate = skr;
      if (!scenario_path.empty()) {
        const Scenario sc = load();
        rate = finitekey::evaluate_point(sc.sweep_scenario()).skr_bps;
      }
      if (rate < 0.0) throw ConfigError("skr", "give --skr or --scenario");
      const auto mode = crypto::plan_mode(rate, bandwidth);
      out << "skr_bps = " << g6(rate) << "\nbandwidth_bps = " << g6(bandwidth) << "\nmode = "
          << crypto::mode_name(mode) << "\n";
      return kOk;
    }
  } catch (const KeyExhausted& e) {
    err << "error: " << e.what() << "\n";
    return kExhausted;
  } catch (const LedgerConflict& e) {
    err << "error: " << e.what() << "\n";
    return kLedger;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const EncodingError& e) {
    err << "input error: " << e.what() << "\n";
    return kConfig;
  } catch (const DomainError& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace hydroqkd::cli
