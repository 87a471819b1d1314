#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>

#include "fluxnv/config.hpp"
#include "fluxnv/dynamics.hpp"
#include "fluxnv/inference.hpp"
#include "fluxnv/spectroscopy.hpp"

namespace fluxnv {

enum class OutputFormat { Csv, Json, Svg };

OutputFormat parse_format(const std::string& name);

using Payload = std::variant<SpectrumResult, TimeTrace, ChevronGrid, DampedCosineFit,
                             GammaCalibration, ConsistencyReport>;

// Versioned result container: resolved config snapshot, seed provenance and
// one payload. CSV carries the numeric records only; JSON round-trips the
// whole envelope losslessly.
struct ResultEnvelope {
  int schema_version = 1;
  std::string kind;
  std::uint64_t seed = 0;
  DeviceConfig config;
  Payload payload;

  static ResultEnvelope make(std::uint64_t seed, DeviceConfig config, Payload payload);
};

void emit(const ResultEnvelope& envelope, OutputFormat format, std::ostream& out);

// Writes to the given path; "-" means stdout.
void emit_to_path(const ResultEnvelope& envelope, OutputFormat format, const std::string& path);

ResultEnvelope read_envelope_json(std::istream& in);
ResultEnvelope read_envelope_json_file(const std::string& path);

// Reads back a time trace from its canonical CSV schema
// (time_ns,p_ground,p_qubit_excited,p_bright,p_dark,p_switch).
TimeTrace read_time_trace_csv(std::istream& in);
TimeTrace read_time_trace_file(const std::string& path);  // dispatches on JSON/CSV

}  // namespace fluxnv
