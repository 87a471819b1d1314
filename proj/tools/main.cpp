// Command-line front end: one subcommand per reproducible result.
//
// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.
// Errors print a single machine-parseable line "error: <kind>: <message>"
// on stderr; the resolved config is logged to stderr as '#'-prefixed lines.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fluxnv/config.hpp"
#include "fluxnv/dynamics.hpp"
#include "fluxnv/errors.hpp"
#include "fluxnv/inference.hpp"
#include "fluxnv/io.hpp"
#include "fluxnv/parallel.hpp"
#include "fluxnv/spectroscopy.hpp"

namespace {

using namespace fluxnv;

struct CommonFlags {
  std::string config_path = "default";
  std::string out_path = "-";
  std::string format = "csv";
  int threads = 0;
  std::uint64_t seed = 0;

  // grid overrides; applied on top of the config when given
  std::optional<double> bias_min, bias_max, detuning_min, detuning_max, t_max, dt;
  std::optional<int> bias_steps, detuning_steps, t_steps;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "config file path, or 'default' for built-in defaults");
  cmd->add_option("--out", flags.out_path, "output path ('-' = stdout)");
  cmd->add_option("--format", flags.format, "output format: csv | json | svg");
  cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
  cmd->add_option("--seed", flags.seed, "seed recorded in the result envelope");
  cmd->add_option("--bias-min", flags.bias_min, "bias sweep start (mPhi0)");
  cmd->add_option("--bias-max", flags.bias_max, "bias sweep end (mPhi0)");
  cmd->add_option("--bias-steps", flags.bias_steps, "bias sweep points");
  cmd->add_option("--detuning-min", flags.detuning_min, "chevron detuning start (GHz)");
  cmd->add_option("--detuning-max", flags.detuning_max, "chevron detuning end (GHz)");
  cmd->add_option("--detuning-steps", flags.detuning_steps, "chevron detuning points");
  cmd->add_option("--t-max", flags.t_max, "evolution time (ns)");
  cmd->add_option("--t-steps", flags.t_steps, "trace samples");
  cmd->add_option("--dt", flags.dt, "integration step (ns)");
}

DeviceConfig resolve_config(const CommonFlags& flags) {
  DeviceConfig config;
  if (flags.config_path == "default" && !std::ifstream(flags.config_path).good()) {
    config = DeviceConfig::defaults();
  } else {
    config = DeviceConfig::load(flags.config_path);
  }
  if (flags.bias_min) config.set("grid.bias_min_mphi0", *flags.bias_min);
  if (flags.bias_max) config.set("grid.bias_max_mphi0", *flags.bias_max);
  if (flags.bias_steps) config.set("grid.bias_steps", *flags.bias_steps);
  if (flags.detuning_min) config.set("grid.detuning_min_ghz", *flags.detuning_min);
  if (flags.detuning_max) config.set("grid.detuning_max_ghz", *flags.detuning_max);
  if (flags.detuning_steps) config.set("grid.detuning_steps", *flags.detuning_steps);
  if (flags.t_max) config.set("grid.t_max_ns", *flags.t_max);
  if (flags.t_steps) config.set("grid.t_steps", *flags.t_steps);
  if (flags.dt) config.set("grid.dt_ns", *flags.dt);

  // every run logs the fully resolved configuration
  std::istringstream dump(config.dump());
  std::string line;
  while (std::getline(dump, line)) std::cerr << "# " << line << '\n';
  return config;
}

void write_result(const CommonFlags& flags, const DeviceConfig& config, Payload payload) {
  const ResultEnvelope envelope = ResultEnvelope::make(flags.seed, config, std::move(payload));
  emit_to_path(envelope, parse_format(flags.format), flags.out_path);
}

int run_spectrum(const CommonFlags& flags, bool exact, int exact_n) {
  const DeviceConfig config = resolve_config(flags);
  const WorkerPool pool(flags.threads);
  const ModelSelection model =
      exact ? ModelSelection::exact_n(exact_n) : ModelSelection::collective();
  const SpectrumResult spectrum = sweep_spectrum(config.qubit(), config.ensemble(),
                                                 config.grids().bias_grid(), model, pool);
  try {
    const SplittingResult split = extract_splitting(spectrum);
    std::cerr << "# vacuum Rabi splitting: " << format_double(split.gap_ghz) << " GHz at "
              << format_double(split.bias_at_gap_mphi0) << " mPhi0\n";
  } catch (const NumericError& e) {
    std::cerr << "# no splitting extracted: " << e.what() << '\n';
  }
  write_result(flags, config, spectrum);
  return 0;
}

int run_rabi(const CommonFlags& flags, double detuning_ghz, bool no_dissipation) {
  const DeviceConfig config = resolve_config(flags);
  const CollectiveModel model(config.qubit(), config.ensemble());
  const DissipationSpec dissipation =
      no_dissipation ? DissipationSpec::none() : config.dissipation();
  const TimeTrace trace = vacuum_rabi_trace(model, dissipation, detuning_ghz,
                                            config.grids().t_max_ns, config.run_options());
  write_result(flags, config, trace);
  return 0;
}

int run_chevron(const CommonFlags& flags, bool no_dissipation) {
  const DeviceConfig config = resolve_config(flags);
  const WorkerPool pool(flags.threads);
  const CollectiveModel model(config.qubit(), config.ensemble());
  const DissipationSpec dissipation =
      no_dissipation ? DissipationSpec::none() : config.dissipation();
  const ChevronGrid grid =
      chevron_scan(model, dissipation, config.grids().detuning_grid(),
                   config.grids().t_max_ns, config.run_options(), pool);
  write_result(flags, config, grid);
  return 0;
}

int run_fit_rabi(const CommonFlags& flags, const std::string& in_path) {
  const DeviceConfig config = resolve_config(flags);
  const TimeTrace trace = read_time_trace_file(in_path);
  const DampedCosineFit fit =
      fit_damped_cosine(trace.times_ns, trace.population_column(kQubitExcited));
  std::cerr << "# fit: f = " << format_double(fit.frequency_ghz)
            << " GHz, tau = " << format_double(fit.decay_ns)
            << " ns, residual rms = " << format_double(fit.residual_rms) << '\n';
  write_result(flags, config, fit);
  return 0;
}

int run_estimate_n(const CommonFlags& flags, double g_ens_mhz) {
  const DeviceConfig config = resolve_config(flags);
  const double g_ens_ghz = g_ens_mhz * 1e-3;
  const double n_formula =
      estimate_ensemble_size(g_ens_ghz, config.ensemble().g_single_ghz);
  const double n_density =
      density_cross_check(config.get("sample.density_per_cm3"), config.get("sample.area_um2"),
                          config.get("sample.thickness_um"));
  const double discrepancy =
      std::abs(n_formula - n_density) / std::max(n_formula, n_density);
  std::cout << "N (splitting formula, g_ens = " << format_double(g_ens_mhz)
            << " MHz): " << format_double(n_formula) << '\n';
  std::cout << "N (density x volume):                  " << format_double(n_density) << '\n';
  std::cout << "relative discrepancy: " << format_double(discrepancy * 100.0) << "%\n";
  if (flags.out_path != "-") {
    DampedCosineFit no_fit;  // no dynamics in this command
    ConsistencyReport report = consistency_report(
        g_ens_ghz, no_fit, config.ensemble().g_single_ghz, config.get("sample.density_per_cm3"),
        config.get("sample.area_um2"), config.get("sample.thickness_um"));
    report.n_from_formula = n_formula;
    report.n_rel_discrepancy = discrepancy;
    report.coupling_absent = false;
    report.note = "estimate-n: spectroscopy and dynamics columns not populated";
    write_result(flags, config, report);
  }
  return 0;
}

int run_calibrate_gamma(const CommonFlags& flags, double target_ns) {
  const DeviceConfig config = resolve_config(flags);
  const CollectiveModel model(config.qubit(), config.ensemble());
  const GammaCalibration calibration = calibrate_gamma(
      target_ns, model, config.qubit(), config.grids().t_max_ns, config.run_options());
  std::cout << "gamma_ens = " << format_double(calibration.gamma_ens_ghz) << " GHz (fitted decay "
            << format_double(calibration.achieved_decay_ns) << " ns)\n";
  if (calibration.at_lower_bound) std::cout << "note: " << calibration.note << '\n';
  if (flags.out_path != "-") write_result(flags, config, calibration);
  return 0;
}

int run_report(const CommonFlags& flags) {
  const DeviceConfig config = resolve_config(flags);
  const WorkerPool pool(flags.threads);

  double gap = 0.0;
  try {
    const SpectrumResult spectrum =
        sweep_spectrum(config.qubit(), config.ensemble(), config.grids().bias_grid(),
                       ModelSelection::collective(), pool);
    gap = extract_splitting(spectrum).gap_ghz;
  } catch (const NumericError&) {
    gap = 0.0;
  }

  DampedCosineFit fit;
  try {
    const CollectiveModel model(config.qubit(), config.ensemble());
    const TimeTrace trace = vacuum_rabi_trace(model, config.dissipation(), 0.0,
                                              config.grids().t_max_ns, config.run_options());
    fit = fit_damped_cosine(trace.times_ns, trace.population_column(kQubitExcited));
  } catch (const NumericError&) {
    fit = DampedCosineFit{};
  }

  const ConsistencyReport report = consistency_report(
      gap, fit, config.ensemble().g_single_ghz, config.get("sample.density_per_cm3"),
      config.get("sample.area_um2"), config.get("sample.thickness_um"));
  write_result(flags, config, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flux qubit / NV ensemble simulator and inference toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* spectrum = app.add_subcommand("spectrum", "bias sweep of the transition spectrum");
  bool exact = false;
  int exact_n = 1;
  spectrum->add_flag("--exact", exact, "diagonalize the full 2*3^n model");
  spectrum->add_option("--n-exact", exact_n, "spin count for --exact (1..6)");
  add_common_flags(spectrum, flags);

  auto* rabi = app.add_subcommand("rabi", "vacuum Rabi trace at fixed detuning");
  double detuning = 0.0;
  bool no_dissipation = false;
  rabi->add_option("--detuning", detuning, "detuning from the bright state (GHz)");
  rabi->add_flag("--no-dissipation", no_dissipation, "disable all dissipation channels");
  add_common_flags(rabi, flags);

  auto* chevron = app.add_subcommand("chevron", "switching probability vs detuning and time");
  chevron->add_flag("--no-dissipation", no_dissipation, "disable all dissipation channels");
  add_common_flags(chevron, flags);

  auto* fit_rabi = app.add_subcommand("fit-rabi", "fit a damped cosine to a stored trace");
  std::string in_path;
  fit_rabi->add_option("--in", in_path, "trace file (CSV or JSON envelope)")->required();
  add_common_flags(fit_rabi, flags);

  auto* estimate = app.add_subcommand("estimate-n", "ensemble size from splitting and density");
  double g_ens_mhz = 70.0;
  estimate->add_option("--g-ens-mhz", g_ens_mhz, "measured collective coupling (MHz)");
  add_common_flags(estimate, flags);

  auto* calibrate = app.add_subcommand("calibrate-gamma",
                                       "collective dephasing rate for a target decay");
  double target_ns = 20.0;
  calibrate->add_option("--target-ns", target_ns, "target envelope decay (ns)");
  add_common_flags(calibrate, flags);

  auto* report = app.add_subcommand("report", "cross-validated splitting/size summary");
  add_common_flags(report, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectrum->parsed()) return run_spectrum(flags, exact, exact_n);
    if (rabi->parsed()) return run_rabi(flags, detuning, no_dissipation);
    if (chevron->parsed()) return run_chevron(flags, no_dissipation);
    if (fit_rabi->parsed()) return run_fit_rabi(flags, in_path);
    if (estimate->parsed()) return run_estimate_n(flags, g_ens_mhz);
    if (calibrate->parsed()) return run_calibrate_gamma(flags, target_ns);
    if (report->parsed()) return run_report(flags);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: numeric: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
