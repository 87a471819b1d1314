#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fluxnv/device.hpp"
#include "fluxnv/operators.hpp"
#include "fluxnv/parallel.hpp"

namespace fluxnv {

// Dissipation channels of the collective model. Rates are ordinary-frequency
// GHz, so a channel of rate r damps as exp(-2*pi*r*t) with t in ns. Ensemble
// relaxation is fixed at zero.
struct DissipationSpec {
  double qubit_relax_rate_ghz = 0.0;    // 1/T1
  double qubit_dephase_rate_ghz = 0.0;  // gamma_phi = 1/T2echo - 1/(2 T1)
  double ens_dephase_rate_ghz = 0.0;    // gamma_ens

  static DissipationSpec from_params(const QubitParams& qp, double gamma_ens_ghz);
  static DissipationSpec none() { return {}; }

  bool any() const {
    return qubit_relax_rate_ghz > 0.0 || qubit_dephase_rate_ghz > 0.0 ||
           ens_dephase_rate_ghz > 0.0;
  }
  std::vector<Collapse> collapse_ops() const;  // in the collective basis
  void validate() const;
};

// Affine SQUID readout abstraction: P_sw = offset + contrast * P(qubit excited).
struct ReadoutMap {
  double contrast = 0.4;
  double offset = 0.3;

  double operator()(double p_excited) const { return offset + contrast * p_excited; }
  void validate() const;
};

double readout_map(double p_excited, double contrast, double offset);

struct PulseEvent {
  enum class Kind { PrepareGround, PiPulse, SetDetuning, Hold, Readout };
  Kind kind;
  double value_ns_or_ghz = 0.0;  // hold duration (ns) or detuning (GHz)
};

// Timeline of instantaneous events and evolution segments. Must start with
// prepare-ground and contain exactly one readout, last. The trace is sampled
// over the hold that precedes the readout.
struct PulseSchedule {
  std::vector<PulseEvent> events;

  void validate() const;
  static PulseSchedule vacuum_rabi(double detuning_ghz, double hold_ns);
  static PulseSchedule idle(double detuning_ghz, double hold_ns);  // no pi pulse
};

struct TimeTrace {
  std::vector<double> times_ns;
  // populations[i] = {p_ground, p_qubit_excited, p_bright, p_dark}
  std::vector<std::array<double, 4>> populations;
  std::vector<double> switching_probability;

  std::vector<double> population_column(int state_index) const;
};

struct ChevronGrid {
  std::vector<double> detunings_ghz;
  std::vector<double> times_ns;
  std::vector<double> values;  // switching probability, row-major by detuning

  double at(std::size_t i_detuning, std::size_t i_time) const {
    return values[i_detuning * times_ns.size() + i_time];
  }
};

// Collective Hamiltonian family parameterized by the detuning of the qubit
// splitting from the bright-state frequency D + E.
class CollectiveModel {
 public:
  CollectiveModel(QubitParams qp, EnsembleParams ep);

  Operator hamiltonian(double detuning_ghz) const;
  double g_ens_ghz() const { return ep_.g_ens_ghz(); }
  double resonance_ghz() const { return ep_.bright_frequency_ghz(); }
  const QubitParams& qubit() const { return qp_; }
  const EnsembleParams& ensemble() const { return ep_; }

 private:
  QubitParams qp_;
  EnsembleParams ep_;
};

enum class Integrator {
  Auto,      // exact stepping when no dissipation, RK4 otherwise
  Lindblad,  // force the RK4 master-equation path
};

struct RunOptions {
  double dt_ns = 0.005;
  int sample_count = 401;
  ReadoutMap readout;
  Integrator integrator = Integrator::Auto;
};

struct RunResult {
  TimeTrace trace;
  Matrix final_density;  // state right after the readout event
};

// Executes the pulse timeline: ground-state preparation, optional instant
// pi pulse, sudden detuning shifts, Lindblad holds, and a final readout that
// samples the trace over the last hold.
RunResult run_schedule(const CollectiveModel& model, const PulseSchedule& schedule,
                       const DissipationSpec& dissipation, const RunOptions& options);

// pi pulse, sudden shift to the given detuning, hold for t_max.
TimeTrace vacuum_rabi_trace(const CollectiveModel& model, const DissipationSpec& dissipation,
                            double detuning_ghz, double t_max_ns, const RunOptions& options);

// One vacuum Rabi trace per detuning; rows are independent and distributed
// over the worker pool, merged by row index.
ChevronGrid chevron_scan(const CollectiveModel& model, const DissipationSpec& dissipation,
                         const std::vector<double>& detunings_ghz, double t_max_ns,
                         const RunOptions& options, const WorkerPool& pool);

struct GammaCalibration {
  double gamma_ens_ghz = 0.0;
  double achieved_decay_ns = 0.0;
  bool at_lower_bound = false;  // target slower than the dissipation-limited decay
  int iterations = 0;
  std::string note;
};

// Bisection over gamma_ens so that the fitted envelope decay of the resonant
// vacuum Rabi trace matches target_decay_ns within 2%.
GammaCalibration calibrate_gamma(double target_decay_ns, const CollectiveModel& model,
                                 const QubitParams& qp, double t_max_ns,
                                 const RunOptions& options);

}  // namespace fluxnv
