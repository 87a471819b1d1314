#include "fluxnv/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fluxnv/errors.hpp"

namespace fluxnv {

namespace {

struct KeySpec {
  const char* key;
  double default_value;
};

// Paper-default device: qubit at its degeneracy point on the 2.878 GHz NV
// resonance, 8.8 kHz single-spin coupling, 3.2e7 spins. gamma_ens defaults to
// the value calibrated so the resonant vacuum Rabi envelope decays in 20 ns.
constexpr std::array<KeySpec, 25> kRegistry{{
    {"ensemble.b_mt", 0.0},
    {"ensemble.d_ghz", 2.878},
    {"ensemble.e_ghz", 0.0},
    {"ensemble.g_single_khz", 8.8},
    {"ensemble.gamma_ens_ghz", 0.009800094124031067},
    {"ensemble.n_spins", 3.2e7},
    {"grid.bias_max_mphi0", 0.6},
    {"grid.bias_min_mphi0", -0.6},
    {"grid.bias_steps", 81},
    {"grid.detuning_max_ghz", 0.2},
    {"grid.detuning_min_ghz", -0.2},
    {"grid.detuning_steps", 81},
    {"grid.dt_ns", 0.005},
    {"grid.t_max_ns", 100.0},
    {"grid.t_steps", 401},
    {"qubit.delta_ghz", 2.878},
    {"qubit.epsilon_ghz", 0.0},
    {"qubit.ip_na", 300.0},
    {"qubit.t1_ns", 150.0},
    {"qubit.t2echo_ns", 250.0},
    {"readout.contrast", 0.4},
    {"readout.offset", 0.3},
    {"sample.area_um2", 40.0},
    {"sample.density_per_cm3", 1.1e18},
    {"sample.thickness_um", 0.7},
}};

bool known_key(const std::string& key) {
  for (const auto& spec : kRegistry) {
    if (key == spec.key) return true;
  }
  return false;
}

// When a key fails only by its missing unit suffix, name the expected key.
std::string suggest_key(const std::string& key) {
  const std::string last = key.find('.') == std::string::npos
                               ? key
                               : key.substr(key.rfind('.') + 1);
  for (const auto& spec : kRegistry) {
    const std::string full(spec.key);
    const auto underscore = full.rfind('_');
    const std::string stem = underscore == std::string::npos ? full : full.substr(0, underscore);
    const std::string stem_last = stem.substr(stem.rfind('.') + 1);
    if (key == stem || last == stem_last) return full;
  }
  return {};
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& text, const std::string& where) {
  const std::string value = trim(text);
  if (value.empty()) throw ConfigError(where + ": empty value");
  char* end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (end == nullptr || *end != '\0') {
    throw ConfigError(where + ": cannot parse number '" + value + "'");
  }
  if (!std::isfinite(parsed)) throw ConfigError(where + ": value must be finite");
  return parsed;
}

void check_integral(const std::map<std::string, double>& values, const std::string& key) {
  const double v = values.at(key);
  if (v < 1.0 || v != std::floor(v)) {
    throw ConfigError(key + " must be a positive integer");
  }
}

}  // namespace

std::vector<double> linspace(double lo, double hi, int steps) {
  if (steps < 1) throw std::invalid_argument("linspace: steps must be >= 1");
  if (steps == 1) return {lo};
  std::vector<double> out(steps);
  const double span = hi - lo;
  for (int i = 0; i < steps; ++i) {
    out[i] = lo + span * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  return out;
}

std::string format_double(double value) {
  std::array<char, 64> buf;
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::vector<double> GridSpec::bias_grid() const {
  return linspace(bias_min_mphi0, bias_max_mphi0, bias_steps);
}

std::vector<double> GridSpec::detuning_grid() const {
  return linspace(detuning_min_ghz, detuning_max_ghz, detuning_steps);
}

DeviceConfig DeviceConfig::defaults() {
  DeviceConfig config;
  for (const auto& spec : kRegistry) config.values_[spec.key] = spec.default_value;
  return config;
}

DeviceConfig DeviceConfig::load(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse(buffer.str(), path);
}

DeviceConfig DeviceConfig::parse(const std::string& text, const std::string& source) {
  DeviceConfig config = defaults();
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  std::map<std::string, int> seen;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    if (!known_key(key)) {
      const std::string suggestion = suggest_key(key);
      if (!suggestion.empty()) {
        throw ConfigError(where + ": unknown key '" + key + "' (missing unit suffix; expected '" +
                          suggestion + "')");
      }
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    if (seen.count(key)) {
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                        std::to_string(seen[key]) + ")");
    }
    seen[key] = line_no;
    config.values_[key] = parse_number(stripped.substr(eq + 1), where);
  }
  config.validate_all();
  return config;
}

double DeviceConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

void DeviceConfig::set(const std::string& key, double value) {
  if (!known_key(key)) {
    const std::string suggestion = suggest_key(key);
    if (!suggestion.empty()) {
      throw ConfigError("unknown key '" + key + "' (missing unit suffix; expected '" +
                        suggestion + "')");
    }
    throw ConfigError("unknown key '" + key + "'");
  }
  if (!std::isfinite(value)) throw ConfigError(key + ": value must be finite");
  values_[key] = value;
}

std::string DeviceConfig::dump() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += " = ";
    out += format_double(value);
    out += "\n";
  }
  return out;
}

QubitParams DeviceConfig::qubit() const {
  QubitParams p;
  p.delta_ghz = get("qubit.delta_ghz");
  p.epsilon_ghz = get("qubit.epsilon_ghz");
  p.ip_na = get("qubit.ip_na");
  p.t1_ns = get("qubit.t1_ns");
  p.t2echo_ns = get("qubit.t2echo_ns");
  return p;
}

EnsembleParams DeviceConfig::ensemble() const {
  EnsembleParams p;
  p.d_ghz = get("ensemble.d_ghz");
  p.e_ghz = get("ensemble.e_ghz");
  p.g_single_ghz = get("ensemble.g_single_khz") * 1e-6;
  p.n_spins = get("ensemble.n_spins");
  p.b_mt = get("ensemble.b_mt");
  p.gamma_ens_ghz = get("ensemble.gamma_ens_ghz");
  return p;
}

DissipationSpec DeviceConfig::dissipation() const {
  return DissipationSpec::from_params(qubit(), get("ensemble.gamma_ens_ghz"));
}

ReadoutMap DeviceConfig::readout() const {
  return {get("readout.contrast"), get("readout.offset")};
}

GridSpec DeviceConfig::grids() const {
  GridSpec g;
  g.bias_min_mphi0 = get("grid.bias_min_mphi0");
  g.bias_max_mphi0 = get("grid.bias_max_mphi0");
  g.bias_steps = static_cast<int>(get("grid.bias_steps"));
  g.detuning_min_ghz = get("grid.detuning_min_ghz");
  g.detuning_max_ghz = get("grid.detuning_max_ghz");
  g.detuning_steps = static_cast<int>(get("grid.detuning_steps"));
  g.t_max_ns = get("grid.t_max_ns");
  g.t_steps = static_cast<int>(get("grid.t_steps"));
  g.dt_ns = get("grid.dt_ns");
  return g;
}

RunOptions DeviceConfig::run_options() const {
  RunOptions options;
  const GridSpec g = grids();
  options.dt_ns = g.dt_ns;
  options.sample_count = g.t_steps;
  options.readout = readout();
  return options;
}

void DeviceConfig::validate_all() const {
  qubit().validate();
  ensemble().validate();
  readout().validate();
  check_integral(values_, "grid.bias_steps");
  check_integral(values_, "grid.detuning_steps");
  check_integral(values_, "grid.t_steps");
  const GridSpec g = grids();
  if (g.dt_ns <= 0.0) throw ConfigError("grid.dt_ns must be > 0");
  if (g.t_max_ns <= 0.0) throw ConfigError("grid.t_max_ns must be > 0");
  if (g.bias_min_mphi0 > g.bias_max_mphi0) throw ConfigError("bias grid bounds are inverted");
  if (g.detuning_min_ghz > g.detuning_max_ghz) {
    throw ConfigError("detuning grid bounds are inverted");
  }
  if (values_.at("sample.density_per_cm3") < 0.0 || values_.at("sample.area_um2") < 0.0 ||
      values_.at("sample.thickness_um") < 0.0) {
    throw ConfigError("sample geometry values must be >= 0");
  }
}

}  // namespace fluxnv
