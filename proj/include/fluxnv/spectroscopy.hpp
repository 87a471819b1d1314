#pragma once

#include <string>
#include <vector>

#include "fluxnv/device.hpp"
#include "fluxnv/parallel.hpp"

namespace fluxnv {

// Which Hamiltonian the sweep diagonalizes: the 4-level collective model or
// the full 2*3^n model with n identical spins.
struct ModelSelection {
  bool exact = false;
  int n_spins = 1;

  static ModelSelection collective() { return {false, 0}; }
  static ModelSelection exact_n(int n) { return {true, n}; }
  std::string name() const { return exact ? "exact-" + std::to_string(n_spins) : "collective"; }
};

struct Transition {
  double frequency_ghz = 0.0;
  double weight = 0.0;  // |<k| drive |ground>|^2, drive = sigma_z (x) 1
};

struct SpectrumPoint {
  double bias_mphi0 = 0.0;
  double epsilon_ghz = 0.0;
  std::vector<Transition> transitions;  // ascending frequency, ground included at f = 0
};

struct SpectrumResult {
  std::vector<SpectrumPoint> points;
  std::string model;
  double g_ens_ghz = 0.0;
};

// Diagonalizes the model at every flux offset of the bias grid (mPhi0,
// relative to 3*Phi0/2) and emits the drive-weighted transition spectrum out
// of the ground state.
SpectrumResult sweep_spectrum(const QubitParams& qp, const EnsembleParams& ep,
                              const std::vector<double>& bias_grid_mphi0,
                              const ModelSelection& model, const WorkerPool& pool);

struct SplittingResult {
  double gap_ghz = 0.0;
  double bias_at_gap_mphi0 = 0.0;
};

// Minimum separation of the two drive-weighted branches over the bias axis,
// with parabolic refinement between grid points. Raises NumericError when the
// sweep holds no interior avoided crossing.
SplittingResult extract_splitting(const SpectrumResult& spectrum);

struct DarkStateVisibility {
  double bright_weight = 0.0;  // total weight into the coupled D+E manifold
  double dark_weight = 0.0;    // weight into the antisymmetric D-E branch
  double bright_frequency_ghz = 0.0;
  double dark_frequency_ghz = 0.0;
};

// Drive weights of the symmetric (D+E) and antisymmetric (D-E) collective
// branches at the configured bias.
DarkStateVisibility dark_state_visibility(const QubitParams& qp, const EnsembleParams& ep);

// Branch separation at a single bias point (the two lowest drive-weighted
// transitions). Shared by tests and the collective/exact comparisons.
double resonant_gap(const QubitParams& qp, const EnsembleParams& ep,
                    const ModelSelection& model);

}  // namespace fluxnv
