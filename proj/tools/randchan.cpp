// randchan: analysis and simulation of LTI systems whose input/output
// channels are available one at a time, at random.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "randchan/channels.hpp"
#include "randchan/exactmath.hpp"
#include "randchan/simulate.hpp"
#include "randchan/system_io.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace randchan;
using nlohmann::json;

// exit codes: 0 ok, 2 usage/domain error, 3 infeasible or inexact result,
// 4 enumeration cap exceeded
enum ExitCode : int { kOk = 0, kUsage = 2, kInexact = 3, kCapExceeded = 4 };

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::string gamma_text(const channels::ChannelSequence& gamma) {
  std::string s = "(";
  for (size_t i = 0; i < gamma.indices.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(gamma.indices[i] + 1);
  }
  return s + ")";
}

channels::ChannelSequence to_internal(const std::vector<int>& one_based) {
  channels::ChannelSequence gamma;
  for (const int c : one_based) {
    if (c < 1) throw std::runtime_error("channel indices are 1-based and must be >= 1");
    gamma.indices.push_back(c - 1);
  }
  return gamma;
}

linalg::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const linalg::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

struct OutputTarget {
  std::ofstream file;
  std::ostream* os = &std::cout;

  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file.open(path, std::ios::binary);  // '\n' endings on every platform
      if (!file) throw std::runtime_error("cannot open output file: " + path);
      os = &file;
    }
  }
};

void write_manifest(const std::string& out_path, const std::string& command,
                    const json& params) {
  json manifest{{"tool", "randchan"},
                {"version", kVersion},
                {"command", command},
                {"parameters", params},
                {"outputs", json::array({out_path})}};
  std::ofstream f(out_path + ".manifest.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write manifest next to " + out_path);
  f << manifest.dump(2) << "\n";
}

// ---- stirling ----

int cmd_stirling(int k, int n) {
  std::cout << exactmath::stirling2(k, n).str() << "\n";
  return kOk;
}

// ---- span-prob ----

int cmd_span_prob(const std::vector<int>& n_values, int k_max, const std::string& format,
                  const std::string& out, int digits) {
  const auto rows = exactmath::spanning_table(n_values, k_max);
  OutputTarget target(out);
  if (format == "json") {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"n", r.n},
                     {"k", r.k},
                     {"p_exact_num", boost::multiprecision::numerator(r.p_exact).str()},
                     {"p_exact_den", boost::multiprecision::denominator(r.p_exact).str()},
                     {"p_float", r.p}});
    *target.os << arr.dump(2) << "\n";
  } else {
    *target.os << "n,k,p_exact_num,p_exact_den,p_float\n";
    for (const auto& r : rows)
      *target.os << r.n << "," << r.k << ","
                 << boost::multiprecision::numerator(r.p_exact).str() << ","
                 << boost::multiprecision::denominator(r.p_exact).str() << ","
                 << fmt(r.p, digits) << "\n";
  }
  if (!out.empty())
    write_manifest(out, "span-prob",
                   {{"n", n_values}, {"kmax", k_max}, {"format", format}, {"digits", digits}});
  return kOk;
}

// ---- mean-span ----

int cmd_mean_span(int n, double tol, const std::string& format, int digits) {
  const auto r = exactmath::mean_nonspan_length(n, tol);
  if (format == "json") {
    std::cout << json{{"n", n},
                      {"value", r.value},
                      {"truncation_bound", r.truncation_bound},
                      {"terms_used", r.terms_used}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << fmt(r.value, digits) << " (tail <= " << fmt(r.truncation_bound, 3) << ", "
              << r.terms_used << " terms)\n";
  }
  return kOk;
}

// ---- check ----

void print_verdict(const std::string& label, const channels::RcVerdict& v) {
  std::cout << label << ": " << (v.holds ? "yes" : "no");
  if (!v.holds && v.counterexample)
    std::cout << "; counterexample gamma=" << gamma_text(*v.counterexample);
  std::cout << " (" << v.sequences_tested << " sequences tested)\n";
  if (v.singular_a_warning)
    std::cout << "warning: A is numerically singular; the random channel analysis assumes an "
                 "invertible A\n";
}

int cmd_check(const std::string& system_file, const std::string& mode, double tol, bool exact) {
  const auto parsed = io::load_system(system_file);
  if (exact && !parsed.exact)
    throw std::runtime_error(
        "--exact requires every entry to be an integer or a \"p/q\" string");

  if (mode == "kalman") {
    std::cout << "Kalman controllable: "
              << (channels::kalman_controllable(parsed.sys, tol) ? "yes" : "no") << "\n";
    if (parsed.sys.has_output())
      std::cout << "Kalman observable: "
                << (channels::kalman_observable(parsed.sys, tol) ? "yes" : "no") << "\n";
    return kOk;
  }
  if (mode == "rcc") {
    print_verdict(exact ? "RCC (exact)" : "RCC",
                  exact ? channels::is_rcc_exact(*parsed.exact)
                        : channels::is_rcc(parsed.sys, tol));
    return kOk;
  }
  if (mode == "rco") {
    print_verdict(exact ? "RCO (exact)" : "RCO",
                  exact ? channels::is_rco_exact(*parsed.exact)
                        : channels::is_rco(parsed.sys, tol));
    return kOk;
  }
  throw std::runtime_error("unknown mode: " + mode + " (expected rcc, rco or kalman)");
}

// ---- span-fraction ----

int cmd_span_fraction(const std::string& system_file, int k, bool exact, std::uint64_t trials,
                      std::uint64_t seed, const std::string& side_name, double tol, int threads,
                      int digits) {
  const auto parsed = io::load_system(system_file);
  const auto side = side_name == "output" ? channels::Side::Output : channels::Side::Input;
  const int label_count = side == channels::Side::Input ? parsed.sys.m() : parsed.sys.q();

  const exactmath::BigInt formula_num =
      exactmath::factorial(label_count) * exactmath::stirling2(k, label_count);
  const exactmath::BigInt formula_den = exactmath::int_pow(label_count, k);
  const exactmath::Rational formula(formula_num, formula_den);
  const double formula_f = exactmath::to_double(formula);

  std::string classification;
  if (exact) {
    const auto frac = channels::spanning_fraction_exact(parsed.sys, k, side, tol);
    std::cout << "fraction " << frac.spanning_count << "/" << frac.total << " = "
              << fmt(frac.value, digits) << " (exact enumeration, k=" << k << ")\n";
    const auto value = frac.exact_value();
    classification = value == formula ? "equality" : (value < formula ? "strict" : "exceeds");
  } else {
    const auto frac =
        channels::spanning_fraction_mc(parsed.sys, k, trials, seed, side, tol, threads);
    std::cout << "fraction " << frac.spanning_count << "/" << frac.total << " = "
              << fmt(frac.value, digits) << " +/- " << fmt(frac.std_error, 3)
              << " (monte carlo, k=" << k << ", seed=" << seed << ")\n";
    const double z = frac.std_error > 0.0
                         ? (frac.value - formula_f) / frac.std_error
                         : (frac.value == formula_f ? 0.0 : (frac.value < formula_f ? -1e9 : 1e9));
    if (std::abs(z) <= 4.0)
      classification = "equality (within 4 std errors)";
    else
      classification = z < 0 ? "strict" : "exceeds";
  }
  std::cout << "formula " << formula_num.str() << "/" << formula_den.str() << " = "
            << fmt(formula_f, digits) << "  [m! S(k,m) / m^k with m=" << label_count << "]\n";
  std::cout << "classification: " << classification << "\n";
  return kOk;
}

// ---- steer ----

int cmd_steer(const std::string& system_file, const std::vector<int>& gamma_flag,
              const std::vector<double>& x0_flag, const std::vector<double>& xf_flag, double tol,
              int digits) {
  const auto parsed = io::load_system(system_file);
  const auto gamma = to_internal(gamma_flag);
  const auto x0 = to_vector(x0_flag);
  const auto xf = to_vector(xf_flag);
  const auto res = channels::steer(parsed.sys, gamma, x0, xf, tol);

  std::cout << "u = ";
  for (size_t i = 0; i < res.inputs.size(); ++i)
    std::cout << (i ? ", " : "") << fmt(res.inputs[i], digits);
  std::cout << "\n";
  std::cout << "residual = " << fmt(res.residual, digits) << "\n";

  const double feasible = std::max(tol, 1e-8) * (1.0 + xf.norm());
  const bool reached = res.residual <= feasible;
  std::cout << "status: " << (reached ? "reached" : "inexact") << "\n";
  return reached ? kOk : kInexact;
}

// ---- simulate ----

int cmd_simulate(const std::string& config_file, std::uint64_t seed, const std::string& out,
                 int digits) {
  const auto config = io::load_sim_config(config_file);
  const auto run = simulate::simulate_closed_loop(config, seed);

  OutputTarget target(out);
  *target.os << "step";
  for (int d = 1; d <= config.sys.n(); ++d) *target.os << ",x" << d;
  *target.os << ",active_channels\n";
  for (size_t k = 0; k < run.states.size(); ++k) {
    *target.os << k;
    for (int d = 0; d < config.sys.n(); ++d)
      *target.os << "," << fmt(run.states[k](d), digits);
    *target.os << ",";
    if (k < run.schedule.size()) {
      const auto& active = run.schedule[k];
      for (size_t i = 0; i < active.size(); ++i)
        *target.os << (i ? ";" : "") << active[i] + 1;
    }
    *target.os << "\n";
  }
  if (run.overflowed) std::cerr << "note: trajectory exceeded 1e300 and was clamped\n";
  if (!out.empty())
    write_manifest(out, "simulate",
                   {{"config", config_file}, {"seed", seed}, {"digits", digits}});
  return kOk;
}

// ---- ensemble ----

void print_decoupled_multipliers(const simulate::SimConfig& config, int digits) {
  // per-coordinate switch multipliers only make sense when the plant
  // decouples: diagonal A, B = I, diagonal gains, single-channel scheduler
  const int n = config.sys.n();
  if (config.sys.m() != n) return;
  if (config.scheduler.kind != simulate::SchedulerSpec::Kind::UniformSingle) return;
  const auto offdiag = [](const linalg::Matrix& m) {
    return (m - linalg::Matrix(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
  };
  if (offdiag(config.sys.A) > 1e-12 || offdiag(config.gains) > 1e-12) return;
  if ((config.sys.B - linalg::Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12) return;

  for (int j = 0; j < n; ++j) {
    const double w = config.scheduler.weights.empty()
                         ? 1.0 / n
                         : config.scheduler.weights[static_cast<size_t>(j)];
    const simulate::SwitchProcessParams params{config.sys.A(j, j),
                                               config.sys.A(j, j) + config.gains(j, j), 1.0 - w};
    const auto mm = simulate::moment_multipliers(params);
    const auto rep = simulate::stability_report(params);
    std::cout << "coordinate " << j + 1 << ": m1 = " << fmt(mm.m1, digits)
              << ", m2 = " << fmt(mm.m2, digits) << " (mean "
              << (rep.mean_stable ? "stable" : "unstable") << ", second moment "
              << (rep.second_moment_stable ? "stable" : "unstable") << ")\n";
  }
}

int cmd_ensemble(const std::string& config_file, std::uint64_t trials, std::uint64_t seed,
                 const std::string& out, int threads, bool percentiles, int digits) {
  const auto config = io::load_sim_config(config_file);
  const auto stats = simulate::run_ensemble(config, trials, seed, {threads, percentiles});

  OutputTarget target(out);
  *target.os << "step,coord,mean,var";
  if (percentiles) *target.os << ",p05,p50,p95";
  *target.os << "\n";
  for (int k = 0; k <= stats.horizon; ++k)
    for (int d = 0; d < stats.dim; ++d) {
      const size_t cell = static_cast<size_t>(k) * stats.dim + static_cast<size_t>(d);
      *target.os << k << "," << d + 1 << "," << fmt(stats.mean[cell], digits) << ","
                 << fmt(stats.variance[cell], digits);
      if (percentiles)
        *target.os << "," << fmt(stats.p05[cell], digits) << "," << fmt(stats.p50[cell], digits)
                   << "," << fmt(stats.p95[cell], digits);
      *target.os << "\n";
    }

  std::ostream& info = out.empty() ? std::cerr : std::cout;
  info << "trials " << stats.trials << ", included " << stats.included << ", overflowed "
       << stats.overflowed << "\n";
  if (!out.empty()) {
    print_decoupled_multipliers(config, digits);
    write_manifest(out, "ensemble",
                   {{"config", config_file},
                    {"trials", trials},
                    {"seed", seed},
                    {"threads", threads},
                    {"percentiles", percentiles},
                    {"digits", digits}});
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analysis of LTI systems under random one-at-a-time channel access"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  int exit_code = kOk;

  // stirling
  auto* stirling = app.add_subcommand("stirling", "Stirling number of the second kind S(k,n)");
  int st_k = 0, st_n = 0;
  stirling->add_option("--k", st_k, "sequence length k")->required();
  stirling->add_option("--n", st_n, "cell count n")->required();
  stirling->callback([&] { exit_code = cmd_stirling(st_k, st_n); });

  // span-prob
  auto* span_prob = app.add_subcommand(
      "span-prob", "spanning probability table p(n,k) = n! S(k,n) / n^k for k = 1..kmax");
  std::vector<int> sp_n;
  int sp_kmax = 0, sp_digits = 9;
  std::string sp_format = "csv", sp_out;
  span_prob->add_option("--n", sp_n, "state dimensions, comma separated")
      ->required()
      ->delimiter(',');
  span_prob->add_option("--kmax", sp_kmax, "largest sequence length")->required();
  span_prob->add_option("--format", sp_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  span_prob->add_option("--out", sp_out, "output file (default stdout)");
  span_prob->add_option("--digits", sp_digits, "significant digits for floats");
  span_prob->callback(
      [&] { exit_code = cmd_span_prob(sp_n, sp_kmax, sp_format, sp_out, sp_digits); });

  // mean-span
  auto* mean_span = app.add_subcommand(
      "mean-span", "mean non-spanning sequence length with a certified tail bound");
  int ms_n = 0, ms_digits = 9;
  double ms_tol = 1e-9;
  std::string ms_format = "text";
  mean_span->add_option("--n", ms_n, "state dimension")->required();
  mean_span->add_option("--tol", ms_tol, "tail bound target (default 1e-9)");
  mean_span->add_option("--format", ms_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  mean_span->add_option("--digits", ms_digits, "significant digits");
  mean_span->callback([&] { exit_code = cmd_mean_span(ms_n, ms_tol, ms_format, ms_digits); });

  // check
  auto* check = app.add_subcommand("check", "controllability / observability certification");
  std::string ck_system, ck_mode = "rcc";
  double ck_tol = 1e-9;
  bool ck_exact = false;
  check->add_option("--system", ck_system, "system JSON file")->required();
  check->add_option("--mode", ck_mode, "rcc, rco or kalman")
      ->check(CLI::IsMember({"rcc", "rco", "kalman"}));
  check->add_option("--tol", ck_tol, "rank tolerance (default 1e-9)");
  check->add_flag("--exact", ck_exact, "certify in exact rational arithmetic");
  check->callback([&] { exit_code = cmd_check(ck_system, ck_mode, ck_tol, ck_exact); });

  // span-fraction
  auto* span_fraction = app.add_subcommand(
      "span-fraction", "fraction of length-k channel sequences whose vector chain spans");
  std::string sf_system, sf_side = "input";
  int sf_k = 0, sf_threads = 0, sf_digits = 9;
  bool sf_exact = false;
  std::uint64_t sf_trials = 0, sf_seed = 0;
  double sf_tol = 1e-9;
  span_fraction->add_option("--system", sf_system, "system JSON file")->required();
  span_fraction->add_option("--k", sf_k, "sequence length")->required();
  span_fraction->add_flag("--exact", sf_exact, "enumerate all m^k sequences");
  span_fraction->add_option("--trials", sf_trials, "monte carlo trials");
  auto* sf_seed_opt = span_fraction->add_option("--seed", sf_seed, "monte carlo seed");
  span_fraction->add_option("--side", sf_side, "input or output")
      ->check(CLI::IsMember({"input", "output"}));
  span_fraction->add_option("--tol", sf_tol, "rank tolerance");
  span_fraction->add_option("--threads", sf_threads, "worker threads (0 = auto)");
  span_fraction->add_option("--digits", sf_digits, "significant digits");
  span_fraction->callback([&] {
    if (!sf_exact) {
      if (sf_trials == 0)
        throw std::runtime_error("span-fraction needs --exact or --trials with --seed");
      if (sf_seed_opt->count() == 0)
        throw std::runtime_error("randomized runs require an explicit --seed");
    }
    exit_code = cmd_span_fraction(sf_system, sf_k, sf_exact, sf_trials, sf_seed, sf_side, sf_tol,
                                  sf_threads, sf_digits);
  });

  // steer
  auto* steer =
      app.add_subcommand("steer", "minimum-norm inputs along a realized channel sequence");
  std::string sr_system;
  std::vector<int> sr_gamma;
  std::vector<double> sr_x0, sr_xf;
  double sr_tol = 1e-9;
  int sr_digits = 9;
  steer->add_option("--system", sr_system, "system JSON file")->required();
  steer->add_option("--gamma", sr_gamma, "channel sequence, 1-based, comma separated")
      ->required()
      ->delimiter(',');
  steer->add_option("--x0", sr_x0, "initial state")->required()->delimiter(',');
  steer->add_option("--xf", sr_xf, "target state")->required()->delimiter(',');
  steer->add_option("--tol", sr_tol, "rank tolerance");
  steer->add_option("--digits", sr_digits, "significant digits");
  steer->callback(
      [&] { exit_code = cmd_steer(sr_system, sr_gamma, sr_x0, sr_xf, sr_tol, sr_digits); });

  // simulate
  auto* sim = app.add_subcommand("simulate", "one closed-loop trajectory as CSV");
  std::string sm_config, sm_out;
  std::uint64_t sm_seed = 0;
  int sm_digits = 9;
  sim->add_option("--config", sm_config, "simulation config JSON file")->required();
  sim->add_option("--seed", sm_seed, "seed")->required();
  sim->add_option("--out", sm_out, "output CSV file (default stdout)");
  sim->add_option("--digits", sm_digits, "significant digits");
  sim->callback([&] { exit_code = cmd_simulate(sm_config, sm_seed, sm_out, sm_digits); });

  // ensemble
  auto* ens = app.add_subcommand("ensemble", "monte carlo ensemble statistics as CSV");
  std::string en_config, en_out;
  std::uint64_t en_trials = 0, en_seed = 0;
  int en_threads = 0, en_digits = 9;
  bool en_percentiles = false;
  ens->add_option("--config", en_config, "simulation config JSON file")->required();
  ens->add_option("--trials", en_trials, "trajectory count")->required();
  ens->add_option("--seed", en_seed, "seed")->required();
  ens->add_option("--out", en_out, "output CSV file (default stdout)");
  ens->add_option("--threads", en_threads, "worker threads (0 = auto)");
  ens->add_flag("--percentiles", en_percentiles, "also emit p05/p50/p95 columns");
  ens->add_option("--digits", en_digits, "significant digits");
  ens->callback([&] {
    exit_code =
        cmd_ensemble(en_config, en_trials, en_seed, en_out, en_threads, en_percentiles, en_digits);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const channels::CapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCapExceeded;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return exit_code;
}
