#include "fluxnv/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "fluxnv/errors.hpp"

namespace fluxnv {

namespace {

using nlohmann::json;

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

// ---- CSV ----------------------------------------------------------------

void csv_spectrum(const SpectrumResult& s, std::ostream& out) {
  out << "bias_mphi0,epsilon_ghz,frequency_ghz,weight\n";
  for (const auto& point : s.points) {
    for (const auto& tr : point.transitions) {
      out << format_double(point.bias_mphi0) << ',' << format_double(point.epsilon_ghz) << ','
          << format_double(tr.frequency_ghz) << ',' << format_double(tr.weight) << '\n';
    }
  }
}

void csv_trace(const TimeTrace& t, std::ostream& out) {
  out << "time_ns,p_ground,p_qubit_excited,p_bright,p_dark,p_switch\n";
  for (std::size_t i = 0; i < t.times_ns.size(); ++i) {
    const auto& p = t.populations[i];
    out << format_double(t.times_ns[i]) << ',' << format_double(p[0]) << ','
        << format_double(p[1]) << ',' << format_double(p[2]) << ',' << format_double(p[3]) << ','
        << format_double(t.switching_probability[i]) << '\n';
  }
}

void csv_chevron(const ChevronGrid& g, std::ostream& out) {
  out << "detuning_ghz,time_ns,p_switch\n";
  for (std::size_t d = 0; d < g.detunings_ghz.size(); ++d) {
    for (std::size_t i = 0; i < g.times_ns.size(); ++i) {
      out << format_double(g.detunings_ghz[d]) << ',' << format_double(g.times_ns[i]) << ','
          << format_double(g.at(d, i)) << '\n';
    }
  }
}

void csv_fit(const DampedCosineFit& f, std::ostream& out) {
  out << "parameter,value\n";
  out << "amplitude," << format_double(f.amplitude) << '\n';
  out << "decay_ns," << format_double(f.decay_ns) << '\n';
  out << "frequency_ghz," << format_double(f.frequency_ghz) << '\n';
  out << "phase_rad," << format_double(f.phase_rad) << '\n';
  out << "offset," << format_double(f.offset) << '\n';
  out << "residual_rms," << format_double(f.residual_rms) << '\n';
  out << "iterations," << f.iterations << '\n';
}

void csv_gamma(const GammaCalibration& g, std::ostream& out) {
  out << "parameter,value\n";
  out << "gamma_ens_ghz," << format_double(g.gamma_ens_ghz) << '\n';
  out << "achieved_decay_ns," << format_double(g.achieved_decay_ns) << '\n';
  out << "at_lower_bound," << (g.at_lower_bound ? 1 : 0) << '\n';
  out << "iterations," << g.iterations << '\n';
  out << "note," << csv_quote(g.note) << '\n';
}

void csv_report(const ConsistencyReport& r, std::ostream& out) {
  out << "parameter,value\n";
  out << "spectro_gap_ghz," << format_double(r.spectro_gap_ghz) << '\n';
  out << "rabi_frequency_ghz," << format_double(r.rabi_frequency_ghz) << '\n';
  out << "gap_frequency_rel_discrepancy," << format_double(r.gap_frequency_rel_discrepancy)
      << '\n';
  out << "n_from_formula," << format_double(r.n_from_formula) << '\n';
  out << "n_from_density," << format_double(r.n_from_density) << '\n';
  out << "n_rel_discrepancy," << format_double(r.n_rel_discrepancy) << '\n';
  out << "coupling_absent," << (r.coupling_absent ? 1 : 0) << '\n';
  out << "note," << csv_quote(r.note) << '\n';
}

// ---- JSON ---------------------------------------------------------------

json payload_json(const SpectrumResult& s) {
  json points = json::array();
  for (const auto& point : s.points) {
    json freqs = json::array();
    json weights = json::array();
    for (const auto& tr : point.transitions) {
      freqs.push_back(tr.frequency_ghz);
      weights.push_back(tr.weight);
    }
    points.push_back({{"bias_mphi0", point.bias_mphi0},
                      {"epsilon_ghz", point.epsilon_ghz},
                      {"frequencies_ghz", freqs},
                      {"weights", weights}});
  }
  return {{"model", s.model}, {"g_ens_ghz", s.g_ens_ghz}, {"points", points}};
}

json payload_json(const TimeTrace& t) {
  json j;
  j["times_ns"] = t.times_ns;
  j["p_ground"] = t.population_column(kGround);
  j["p_qubit_excited"] = t.population_column(kQubitExcited);
  j["p_bright"] = t.population_column(kBright);
  j["p_dark"] = t.population_column(kDark);
  j["p_switch"] = t.switching_probability;
  return j;
}

json payload_json(const ChevronGrid& g) {
  json rows = json::array();
  for (std::size_t d = 0; d < g.detunings_ghz.size(); ++d) {
    json row = json::array();
    for (std::size_t i = 0; i < g.times_ns.size(); ++i) row.push_back(g.at(d, i));
    rows.push_back(std::move(row));
  }
  return {{"detunings_ghz", g.detunings_ghz}, {"times_ns", g.times_ns}, {"values", rows}};
}

json payload_json(const DampedCosineFit& f) {
  return {{"amplitude", f.amplitude},     {"decay_ns", f.decay_ns},
          {"frequency_ghz", f.frequency_ghz}, {"phase_rad", f.phase_rad},
          {"offset", f.offset},           {"residual_rms", f.residual_rms},
          {"iterations", f.iterations}};
}

json payload_json(const GammaCalibration& g) {
  return {{"gamma_ens_ghz", g.gamma_ens_ghz},
          {"achieved_decay_ns", g.achieved_decay_ns},
          {"at_lower_bound", g.at_lower_bound},
          {"iterations", g.iterations},
          {"note", g.note}};
}

json payload_json(const ConsistencyReport& r) {
  return {{"spectro_gap_ghz", r.spectro_gap_ghz},
          {"rabi_frequency_ghz", r.rabi_frequency_ghz},
          {"gap_frequency_rel_discrepancy", r.gap_frequency_rel_discrepancy},
          {"n_from_formula", r.n_from_formula},
          {"n_from_density", r.n_from_density},
          {"n_rel_discrepancy", r.n_rel_discrepancy},
          {"coupling_absent", r.coupling_absent},
          {"note", r.note}};
}

SpectrumResult spectrum_from_json(const json& j) {
  SpectrumResult s;
  s.model = j.at("model").get<std::string>();
  s.g_ens_ghz = j.at("g_ens_ghz").get<double>();
  for (const auto& pj : j.at("points")) {
    SpectrumPoint point;
    point.bias_mphi0 = pj.at("bias_mphi0").get<double>();
    point.epsilon_ghz = pj.at("epsilon_ghz").get<double>();
    const auto& freqs = pj.at("frequencies_ghz");
    const auto& weights = pj.at("weights");
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      point.transitions.push_back({freqs[k].get<double>(), weights[k].get<double>()});
    }
    s.points.push_back(std::move(point));
  }
  return s;
}

TimeTrace trace_from_json(const json& j) {
  TimeTrace t;
  t.times_ns = j.at("times_ns").get<std::vector<double>>();
  const auto g = j.at("p_ground").get<std::vector<double>>();
  const auto e = j.at("p_qubit_excited").get<std::vector<double>>();
  const auto b = j.at("p_bright").get<std::vector<double>>();
  const auto d = j.at("p_dark").get<std::vector<double>>();
  t.switching_probability = j.at("p_switch").get<std::vector<double>>();
  for (std::size_t i = 0; i < t.times_ns.size(); ++i) {
    t.populations.push_back({g.at(i), e.at(i), b.at(i), d.at(i)});
  }
  return t;
}

ChevronGrid chevron_from_json(const json& j) {
  ChevronGrid g;
  g.detunings_ghz = j.at("detunings_ghz").get<std::vector<double>>();
  g.times_ns = j.at("times_ns").get<std::vector<double>>();
  for (const auto& row : j.at("values")) {
    for (const auto& v : row) g.values.push_back(v.get<double>());
  }
  return g;
}

DampedCosineFit fit_from_json(const json& j) {
  DampedCosineFit f;
  f.amplitude = j.at("amplitude").get<double>();
  f.decay_ns = j.at("decay_ns").get<double>();
  f.frequency_ghz = j.at("frequency_ghz").get<double>();
  f.phase_rad = j.at("phase_rad").get<double>();
  f.offset = j.at("offset").get<double>();
  f.residual_rms = j.at("residual_rms").get<double>();
  f.iterations = j.at("iterations").get<int>();
  return f;
}

GammaCalibration gamma_from_json(const json& j) {
  GammaCalibration g;
  g.gamma_ens_ghz = j.at("gamma_ens_ghz").get<double>();
  g.achieved_decay_ns = j.at("achieved_decay_ns").get<double>();
  g.at_lower_bound = j.at("at_lower_bound").get<bool>();
  g.iterations = j.at("iterations").get<int>();
  g.note = j.at("note").get<std::string>();
  return g;
}

ConsistencyReport report_from_json(const json& j) {
  ConsistencyReport r;
  r.spectro_gap_ghz = j.at("spectro_gap_ghz").get<double>();
  r.rabi_frequency_ghz = j.at("rabi_frequency_ghz").get<double>();
  r.gap_frequency_rel_discrepancy = j.at("gap_frequency_rel_discrepancy").get<double>();
  r.n_from_formula = j.at("n_from_formula").get<double>();
  r.n_from_density = j.at("n_from_density").get<double>();
  r.n_rel_discrepancy = j.at("n_rel_discrepancy").get<double>();
  r.coupling_absent = j.at("coupling_absent").get<bool>();
  r.note = j.at("note").get<std::string>();
  return r;
}

// ---- SVG ----------------------------------------------------------------

struct Frame {
  double width = 800, height = 520;
  double left = 70, right = 20, top = 20, bottom = 50;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;

  double x(double v) const {
    return left + (v - x_lo) / (x_hi - x_lo) * (width - left - right);
  }
  double y(double v) const {
    return height - bottom - (v - y_lo) / (y_hi - y_lo) * (height - top - bottom);
  }
};

void svg_open(std::ostream& out, const Frame& f, const std::string& x_label,
              const std::string& y_label) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
      << f.height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << f.left << "\" y1=\"" << f.height - f.bottom << "\" x2=\""
      << f.width - f.right << "\" y2=\"" << f.height - f.bottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
      << f.height - f.bottom << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\"" << f.height - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (f.top + f.height - f.bottom) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
      << (f.top + f.height - f.bottom) / 2 << ")\">" << y_label << "</text>\n";
  auto tick = [&](double vx, double vy, const std::string& label, bool on_x) {
    if (on_x) {
      out << "<text x=\"" << f.x(vx) << "\" y=\"" << f.height - f.bottom + 18
          << "\" text-anchor=\"middle\" font-size=\"11\">" << label << "</text>\n";
    } else {
      out << "<text x=\"" << f.left - 6 << "\" y=\"" << f.y(vy) + 4
          << "\" text-anchor=\"end\" font-size=\"11\">" << label << "</text>\n";
    }
  };
  tick(f.x_lo, 0, format_double(f.x_lo), true);
  tick(f.x_hi, 0, format_double(f.x_hi), true);
  tick(0, f.y_lo, format_double(f.y_lo), false);
  tick(0, f.y_hi, format_double(f.y_hi), false);
}

void svg_spectrum(const SpectrumResult& s, std::ostream& out) {
  Frame f;
  f.x_lo = s.points.front().bias_mphi0;
  f.x_hi = s.points.back().bias_mphi0;
  double w_max = 0.0;
  double y_lo = 1e300, y_hi = -1e300;
  for (const auto& p : s.points) {
    for (const auto& tr : p.transitions) {
      if (tr.frequency_ghz < 1e-6) continue;
      w_max = std::max(w_max, tr.weight);
      if (tr.weight > 0) {
        y_lo = std::min(y_lo, tr.frequency_ghz);
        y_hi = std::max(y_hi, tr.frequency_ghz);
      }
    }
  }
  if (y_lo > y_hi) {
    y_lo = 0;
    y_hi = 1;
  }
  const double pad = 0.05 * (y_hi - y_lo + 1e-12);
  f.y_lo = y_lo - pad;
  f.y_hi = y_hi + pad;
  svg_open(out, f, "flux offset (mPhi0)", "transition frequency (GHz)");
  for (const auto& p : s.points) {
    for (const auto& tr : p.transitions) {
      if (tr.frequency_ghz < 1e-6 || tr.weight <= 0.0) continue;
      const double opacity = std::clamp(tr.weight / (w_max + 1e-300), 0.05, 1.0);
      out << "<circle cx=\"" << f.x(p.bias_mphi0) << "\" cy=\"" << f.y(tr.frequency_ghz)
          << "\" r=\"2.2\" fill=\"#1f4e9c\" fill-opacity=\"" << opacity << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

void svg_polyline(std::ostream& out, const Frame& f, const std::vector<double>& xs,
                  const std::vector<double>& ys, const std::string& color) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out << f.x(xs[i]) << ',' << f.y(ys[i]) << ' ';
  }
  out << "\"/>\n";
}

void svg_trace(const TimeTrace& t, std::ostream& out) {
  Frame f;
  f.x_lo = t.times_ns.front();
  f.x_hi = t.times_ns.back();
  f.y_lo = 0.0;
  f.y_hi = 1.0;
  svg_open(out, f, "time on resonance (ns)", "population / switching probability");
  svg_polyline(out, f, t.times_ns, t.population_column(kQubitExcited), "#1f4e9c");
  svg_polyline(out, f, t.times_ns, t.population_column(kBright), "#2e8b57");
  svg_polyline(out, f, t.times_ns, t.switching_probability, "#c0392b");
  out << "</svg>\n";
}

void svg_chevron(const ChevronGrid& g, std::ostream& out) {
  Frame f;
  f.x_lo = g.times_ns.front();
  f.x_hi = g.times_ns.back();
  f.y_lo = g.detunings_ghz.front();
  f.y_hi = g.detunings_ghz.back();
  double v_lo = 1e300, v_hi = -1e300;
  for (double v : g.values) {
    v_lo = std::min(v_lo, v);
    v_hi = std::max(v_hi, v);
  }
  const double span = std::max(v_hi - v_lo, 1e-12);
  svg_open(out, f, "time on resonance (ns)", "detuning (GHz)");
  const double cell_w = (f.width - f.left - f.right) / static_cast<double>(g.times_ns.size());
  const double cell_h =
      (f.height - f.top - f.bottom) / static_cast<double>(g.detunings_ghz.size());
  for (std::size_t d = 0; d < g.detunings_ghz.size(); ++d) {
    for (std::size_t i = 0; i < g.times_ns.size(); ++i) {
      const double u = (g.at(d, i) - v_lo) / span;
      const int r = static_cast<int>(30 + 225 * u);
      const int gb = static_cast<int>(40 + 120 * (1 - u));
      const int b = static_cast<int>(150 + 100 * (1 - u));
      out << "<rect x=\"" << f.x(g.times_ns[i]) - cell_w / 2 << "\" y=\""
          << f.y(g.detunings_ghz[d]) - cell_h / 2 << "\" width=\"" << cell_w + 0.5
          << "\" height=\"" << cell_h + 0.5 << "\" fill=\"rgb(" << r << ',' << gb << ',' << b
          << ")\"/>\n";
    }
  }
  out << "</svg>\n";
}

json config_json(const DeviceConfig& config) {
  json j = json::object();
  for (const auto& [key, value] : config.values()) j[key] = value;
  return j;
}

DeviceConfig config_from_json(const json& j) {
  DeviceConfig config = DeviceConfig::defaults();
  for (const auto& [key, value] : j.items()) config.set(key, value.get<double>());
  return config;
}

}  // namespace

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  if (name == "svg") return OutputFormat::Svg;
  throw ConfigError("unknown output format '" + name + "' (expected csv, json or svg)");
}

ResultEnvelope ResultEnvelope::make(std::uint64_t seed, DeviceConfig config, Payload payload) {
  ResultEnvelope env;
  env.seed = seed;
  env.config = std::move(config);
  env.payload = std::move(payload);
  env.kind = std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpectrumResult>) return "spectrum";
        if constexpr (std::is_same_v<T, TimeTrace>) return "time_trace";
        if constexpr (std::is_same_v<T, ChevronGrid>) return "chevron";
        if constexpr (std::is_same_v<T, DampedCosineFit>) return "fit";
        if constexpr (std::is_same_v<T, GammaCalibration>) return "gamma_calibration";
        if constexpr (std::is_same_v<T, ConsistencyReport>) return "report";
      },
      env.payload);
  return env;
}

void emit(const ResultEnvelope& envelope, OutputFormat format, std::ostream& out) {
  switch (format) {
    case OutputFormat::Csv:
      std::visit([&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpectrumResult>) csv_spectrum(p, out);
        else if constexpr (std::is_same_v<T, TimeTrace>) csv_trace(p, out);
        else if constexpr (std::is_same_v<T, ChevronGrid>) csv_chevron(p, out);
        else if constexpr (std::is_same_v<T, DampedCosineFit>) csv_fit(p, out);
        else if constexpr (std::is_same_v<T, GammaCalibration>) csv_gamma(p, out);
        else csv_report(p, out);
      }, envelope.payload);
      break;
    case OutputFormat::Json: {
      json j;
      j["schema_version"] = envelope.schema_version;
      j["kind"] = envelope.kind;
      j["seed"] = envelope.seed;
      j["config"] = config_json(envelope.config);
      j["payload"] = std::visit([](const auto& p) { return payload_json(p); }, envelope.payload);
      out << j.dump(2) << '\n';
      break;
    }
    case OutputFormat::Svg:
      std::visit([&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpectrumResult>) svg_spectrum(p, out);
        else if constexpr (std::is_same_v<T, TimeTrace>) svg_trace(p, out);
        else if constexpr (std::is_same_v<T, ChevronGrid>) svg_chevron(p, out);
        else throw ConfigError("svg output is not supported for payload kind '" +
                               ResultEnvelope::make(0, DeviceConfig::defaults(), p).kind + "'");
      }, envelope.payload);
      break;
  }
  if (!out) throw IoError("write failed");
}

void emit_to_path(const ResultEnvelope& envelope, OutputFormat format, const std::string& path) {
  if (path == "-") {
    emit(envelope, format, std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  emit(envelope, format, file);
  file.close();
  if (!file) throw IoError("write to '" + path + "' failed");
}

ResultEnvelope read_envelope_json(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(std::string("invalid JSON: ") + e.what());
  }
  ResultEnvelope env;
  try {
    env.schema_version = j.at("schema_version").get<int>();
    env.kind = j.at("kind").get<std::string>();
    env.seed = j.at("seed").get<std::uint64_t>();
    env.config = config_from_json(j.at("config"));
    const json& p = j.at("payload");
    if (env.kind == "spectrum") env.payload = spectrum_from_json(p);
    else if (env.kind == "time_trace") env.payload = trace_from_json(p);
    else if (env.kind == "chevron") env.payload = chevron_from_json(p);
    else if (env.kind == "fit") env.payload = fit_from_json(p);
    else if (env.kind == "gamma_calibration") env.payload = gamma_from_json(p);
    else if (env.kind == "report") env.payload = report_from_json(p);
    else throw IoError("unknown payload kind '" + env.kind + "'");
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed envelope: ") + e.what());
  }
  return env;
}

ResultEnvelope read_envelope_json_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path + "'");
  return read_envelope_json(file);
}

TimeTrace read_time_trace_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty CSV input");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != "time_ns,p_ground,p_qubit_excited,p_bright,p_dark,p_switch") {
    throw IoError("unexpected CSV header '" + header + "'");
  }
  TimeTrace trace;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 6> fields{};
    std::stringstream row(line);
    std::string cell;
    for (int k = 0; k < 6; ++k) {
      if (!std::getline(row, cell, ',')) {
        throw IoError("line " + std::to_string(line_no) + ": expected 6 fields");
      }
      try {
        fields[k] = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError("line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    trace.times_ns.push_back(fields[0]);
    trace.populations.push_back({fields[1], fields[2], fields[3], fields[4]});
    trace.switching_probability.push_back(fields[5]);
  }
  return trace;
}

TimeTrace read_time_trace_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path + "'");
  const int first = file.peek();
  if (first == '{') {
    const ResultEnvelope env = read_envelope_json(file);
    if (!std::holds_alternative<TimeTrace>(env.payload)) {
      throw IoError("'" + path + "' does not hold a time trace");
    }
    return std::get<TimeTrace>(env.payload);
  }
  return read_time_trace_csv(file);
}

}  // namespace fluxnv
