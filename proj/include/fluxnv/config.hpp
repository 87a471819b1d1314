#pragma once

#include <map>
#include <string>
#include <vector>

#include "fluxnv/device.hpp"
#include "fluxnv/dynamics.hpp"

namespace fluxnv {

struct GridSpec {
  double bias_min_mphi0 = -0.6;
  double bias_max_mphi0 = 0.6;
  int bias_steps = 81;
  double detuning_min_ghz = -0.2;
  double detuning_max_ghz = 0.2;
  int detuning_steps = 81;
  double t_max_ns = 100.0;
  int t_steps = 401;
  double dt_ns = 0.005;

  std::vector<double> bias_grid() const;
  std::vector<double> detuning_grid() const;
};

/// Flat key = value configuration with explicit unit suffixes in every key
/// name (qubit.delta_ghz, ensemble.g_single_khz, ...). Unknown keys are
/// rejected with a suggestion when only the unit suffix is missing; missing
/// keys fall back to the device defaults.
class DeviceConfig {
 public:
  static DeviceConfig defaults();
  static DeviceConfig load(const std::string& path);
  static DeviceConfig parse(const std::string& text, const std::string& source = "<string>");

  double get(const std::string& key) const;
  void set(const std::string& key, double value);  // validates key and value

  std::string dump() const;  // sorted key = value lines, lossless round trip

  QubitParams qubit() const;
  EnsembleParams ensemble() const;
  DissipationSpec dissipation() const;
  ReadoutMap readout() const;
  GridSpec grids() const;
  RunOptions run_options() const;

  const std::map<std::string, double>& values() const { return values_; }
  friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;

 private:
  void validate_all() const;
  std::map<std::string, double> values_;
};

// Shortest decimal representation that parses back to the same double; used
// for every serialized number so reruns are byte-identical.
std::string format_double(double value);

std::vector<double> linspace(double lo, double hi, int steps);

}  // namespace fluxnv
