#include "fluxnv/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fluxnv/errors.hpp"
#include "fluxnv/inference.hpp"

namespace fluxnv {

namespace {

using M4 = Eigen::Matrix4cd;
using V4 = Eigen::Vector4cd;

M4 to4(const Operator& op) { return M4(op.matrix()); }

M4 unitary_step(const M4& h, double dt_ns) {
  Eigen::SelfAdjointEigenSolver<M4> solver(h);
  if (solver.info() != Eigen::Success) throw NumericError("collective eigensolver failed");
  V4 phases;
  for (int k = 0; k < 4; ++k) {
    phases(k) = std::exp(Complex(0.0, -kTwoPi * solver.eigenvalues()(k) * dt_ns));
  }
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

void check_trace(const M4& rho) {
  if (std::abs(rho.trace().real() - 1.0) > 1e-6 || std::abs(rho.trace().imag()) > 1e-6) {
    throw NumericError("density trace drifted; integration step too large");
  }
}

std::array<double, 4> populations_of(const M4& rho) {
  return {rho(0, 0).real(), rho(1, 1).real(), rho(2, 2).real(), rho(3, 3).real()};
}

struct Evolver {
  M4 h = M4::Zero();
  bool unitary = false;
  double dt_ns = 0.005;
  std::vector<detail::PreparedChannel<M4>> channels;

  void advance(M4& rho, double duration_ns) const {
    if (duration_ns <= 0.0) return;
    if (unitary) {
      const M4 u = unitary_step(h, duration_ns);
      rho = u * rho * u.adjoint();
      return;
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(duration_ns / dt_ns - 1e-9)));
    const double dt = duration_ns / steps;
    for (int s = 0; s < steps; ++s) {
      rho = detail::rk4_lindblad_step(h, channels, rho, dt);
    }
  }
};

}  // namespace

DissipationSpec DissipationSpec::from_params(const QubitParams& qp, double gamma_ens_ghz) {
  qp.validate();
  DissipationSpec spec;
  spec.qubit_relax_rate_ghz = 1.0 / qp.t1_ns;
  spec.qubit_dephase_rate_ghz = 1.0 / qp.t2echo_ns - 1.0 / (2.0 * qp.t1_ns);
  spec.ens_dephase_rate_ghz = gamma_ens_ghz;
  spec.validate();
  return spec;
}

void DissipationSpec::validate() const {
  if (qubit_relax_rate_ghz < 0.0 || qubit_dephase_rate_ghz < 0.0 || ens_dephase_rate_ghz < 0.0) {
    throw ConfigError("dissipation rates must be >= 0");
  }
}

std::vector<Collapse> DissipationSpec::collapse_ops() const {
  const BasisLabels basis = BasisLayout::collective().labels;
  std::vector<Collapse> ops;
  if (qubit_relax_rate_ghz > 0.0) {
    Matrix relax = Matrix::Zero(4, 4);
    relax(kGround, kQubitExcited) = 1.0;
    ops.push_back({Operator(std::move(relax), basis), qubit_relax_rate_ghz});
  }
  if (qubit_dephase_rate_ghz > 0.0) {
    // Projector dephasing at rate 2*gamma_phi damps the |e,0> coherences at
    // gamma_phi, reproducing 1/T2 = 1/(2 T1) + gamma_phi for the bare qubit.
    Matrix dephase = Matrix::Zero(4, 4);
    dephase(kQubitExcited, kQubitExcited) = 1.0;
    ops.push_back({Operator(std::move(dephase), basis), 2.0 * qubit_dephase_rate_ghz});
  }
  if (ens_dephase_rate_ghz > 0.0) {
    Matrix dephase = Matrix::Zero(4, 4);
    dephase(kBright, kBright) = 1.0;
    ops.push_back({Operator(std::move(dephase), basis), ens_dephase_rate_ghz});
  }
  return ops;
}

void ReadoutMap::validate() const {
  if (offset < 0.0 || contrast < 0.0 || offset + contrast > 1.0) {
    throw ConfigError("readout map requires offset >= 0, contrast >= 0, offset + contrast <= 1");
  }
}

double readout_map(double p_excited, double contrast, double offset) {
  ReadoutMap map{contrast, offset};
  map.validate();
  return map(p_excited);
}

void PulseSchedule::validate() const {
  if (events.empty()) throw std::invalid_argument("schedule is empty");
  if (events.front().kind != PulseEvent::Kind::PrepareGround) {
    throw std::invalid_argument("schedule must start with prepare-ground");
  }
  int readouts = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.kind == PulseEvent::Kind::Hold && e.value_ns_or_ghz < 0.0) {
      throw std::invalid_argument("hold duration must be >= 0");
    }
    if (e.kind == PulseEvent::Kind::Readout) ++readouts;
  }
  if (readouts != 1 || events.back().kind != PulseEvent::Kind::Readout) {
    throw std::invalid_argument("schedule must contain exactly one readout, last");
  }
}

PulseSchedule PulseSchedule::vacuum_rabi(double detuning_ghz, double hold_ns) {
  return {{{PulseEvent::Kind::PrepareGround, 0.0},
           {PulseEvent::Kind::PiPulse, 0.0},
           {PulseEvent::Kind::SetDetuning, detuning_ghz},
           {PulseEvent::Kind::Hold, hold_ns},
           {PulseEvent::Kind::Readout, 0.0}}};
}

PulseSchedule PulseSchedule::idle(double detuning_ghz, double hold_ns) {
  return {{{PulseEvent::Kind::PrepareGround, 0.0},
           {PulseEvent::Kind::SetDetuning, detuning_ghz},
           {PulseEvent::Kind::Hold, hold_ns},
           {PulseEvent::Kind::Readout, 0.0}}};
}

std::vector<double> TimeTrace::population_column(int state_index) const {
  std::vector<double> out;
  out.reserve(populations.size());
  for (const auto& p : populations) out.push_back(p.at(state_index));
  return out;
}

CollectiveModel::CollectiveModel(QubitParams qp, EnsembleParams ep)
    : qp_(std::move(qp)), ep_(std::move(ep)) {}

Operator CollectiveModel::hamiltonian(double detuning_ghz) const {
  return collective_hamiltonian_at(ep_.bright_frequency_ghz() + detuning_ghz, ep_);
}

RunResult run_schedule(const CollectiveModel& model, const PulseSchedule& schedule,
                       const DissipationSpec& dissipation, const RunOptions& options) {
  schedule.validate();
  dissipation.validate();
  options.readout.validate();
  if (options.dt_ns <= 0.0) throw std::invalid_argument("dt must be > 0");
  if (options.sample_count < 1) throw std::invalid_argument("sample count must be >= 1");

  double f_max = std::max(model.resonance_ghz(), model.ensemble().d_ghz);
  for (const auto& e : schedule.events) {
    if (e.kind == PulseEvent::Kind::SetDetuning) {
      f_max = std::max(f_max, std::abs(model.resonance_ghz() + e.value_ns_or_ghz));
    }
  }
  if (options.dt_ns > 0.02 / f_max + 1e-15) {
    throw std::invalid_argument("dt must satisfy dt <= 0.02/max(F, D) to resolve the fastest phase");
  }

  Evolver evolver;
  evolver.unitary = !dissipation.any() && options.integrator == Integrator::Auto;
  evolver.dt_ns = options.dt_ns;
  evolver.channels = detail::prepare_channels<M4>(dissipation.collapse_ops());
  evolver.h = to4(model.hamiltonian(0.0));

  int last_hold = -1;
  for (std::size_t i = 0; i < schedule.events.size(); ++i) {
    if (schedule.events[i].kind == PulseEvent::Kind::Hold) last_hold = static_cast<int>(i);
  }

  M4 rho = M4::Zero();
  TimeTrace trace;
  const ReadoutMap& readout = options.readout;

  auto record = [&](double t, const M4& r) {
    check_trace(r);
    trace.times_ns.push_back(t);
    trace.populations.push_back(populations_of(r));
  };

  for (std::size_t i = 0; i < schedule.events.size(); ++i) {
    const auto& e = schedule.events[i];
    switch (e.kind) {
      case PulseEvent::Kind::PrepareGround:
        rho.setZero();
        rho(kGround, kGround) = 1.0;
        break;
      case PulseEvent::Kind::PiPulse:
        rho.row(kGround).swap(rho.row(kQubitExcited));
        rho.col(kGround).swap(rho.col(kQubitExcited));
        break;
      case PulseEvent::Kind::SetDetuning:
        // Sudden, non-adiabatic shift: the Hamiltonian changes, the state does not.
        evolver.h = to4(model.hamiltonian(e.value_ns_or_ghz));
        break;
      case PulseEvent::Kind::Hold: {
        const double duration = e.value_ns_or_ghz;
        if (static_cast<int>(i) != last_hold) {
          evolver.advance(rho, duration);
          break;
        }
        if (duration == 0.0 || options.sample_count == 1) {
          record(0.0, rho);
          break;
        }
        const double spacing = duration / (options.sample_count - 1);
        record(0.0, rho);
        for (int s = 1; s < options.sample_count; ++s) {
          evolver.advance(rho, spacing);
          record(s * spacing, rho);
        }
        break;
      }
      case PulseEvent::Kind::Readout:
        if (trace.times_ns.empty()) record(0.0, rho);
        trace.switching_probability.reserve(trace.populations.size());
        for (const auto& p : trace.populations) {
          trace.switching_probability.push_back(readout(p[kQubitExcited]));
        }
        break;
    }
  }
  return {std::move(trace), Matrix(rho)};
}

TimeTrace vacuum_rabi_trace(const CollectiveModel& model, const DissipationSpec& dissipation,
                            double detuning_ghz, double t_max_ns, const RunOptions& options) {
  if (t_max_ns <= 0.0) throw std::invalid_argument("t_max must be > 0");
  return run_schedule(model, PulseSchedule::vacuum_rabi(detuning_ghz, t_max_ns), dissipation,
                      options)
      .trace;
}

ChevronGrid chevron_scan(const CollectiveModel& model, const DissipationSpec& dissipation,
                         const std::vector<double>& detunings_ghz, double t_max_ns,
                         const RunOptions& options, const WorkerPool& pool) {
  if (detunings_ghz.empty()) throw std::invalid_argument("detuning grid is empty");
  ChevronGrid grid;
  grid.detunings_ghz = detunings_ghz;
  std::vector<TimeTrace> rows(detunings_ghz.size());
  pool.for_each_index(detunings_ghz.size(), [&](std::size_t i) {
    rows[i] = vacuum_rabi_trace(model, dissipation, detunings_ghz[i], t_max_ns, options);
  });
  grid.times_ns = rows.front().times_ns;
  grid.values.reserve(rows.size() * grid.times_ns.size());
  for (const auto& row : rows) {
    grid.values.insert(grid.values.end(), row.switching_probability.begin(),
                       row.switching_probability.end());
  }
  return grid;
}

GammaCalibration calibrate_gamma(double target_decay_ns, const CollectiveModel& model,
                                 const QubitParams& qp, double t_max_ns,
                                 const RunOptions& options) {
  if (target_decay_ns <= 0.0) throw std::invalid_argument("target decay must be > 0");

  int evaluations = 0;
  auto fitted_decay = [&](double gamma) {
    ++evaluations;
    const auto dissipation = DissipationSpec::from_params(qp, gamma);
    const TimeTrace trace = vacuum_rabi_trace(model, dissipation, 0.0, t_max_ns, options);
    const DampedCosineFit fit =
        fit_damped_cosine(trace.times_ns, trace.population_column(kQubitExcited));
    return fit.decay_ns;
  };

  const double tol = 0.02 * target_decay_ns;
  const double decay_at_zero = fitted_decay(0.0);
  GammaCalibration result;
  if (decay_at_zero <= target_decay_ns + tol) {
    result.gamma_ens_ghz = 0.0;
    result.achieved_decay_ns = decay_at_zero;
    result.iterations = evaluations;
    if (decay_at_zero < target_decay_ns - tol) {
      result.at_lower_bound = true;
      result.note = "relaxation/dephasing-limited decay is already faster than the target";
    }
    return result;
  }

  double lo = 0.0;
  double hi = 1e-3;
  double decay_hi = fitted_decay(hi);
  while (decay_hi > target_decay_ns && hi < 1.0) {
    lo = hi;
    hi *= 2.0;
    decay_hi = fitted_decay(hi);
  }
  if (decay_hi > target_decay_ns) {
    throw NumericError("calibrate_gamma: no bracket found in [0, 1] GHz");
  }

  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double decay = fitted_decay(mid);
    if (std::abs(decay - target_decay_ns) <= tol) {
      result.gamma_ens_ghz = mid;
      result.achieved_decay_ns = decay;
      result.iterations = evaluations;
      return result;
    }
    if (decay > target_decay_ns) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NumericError("calibrate_gamma: bisection did not converge");
}

}  // namespace fluxnv
