#pragma once

#include <span>
#include <string>

namespace fluxnv {

struct DampedCosineFit {
  double amplitude = 0.0;
  double decay_ns = 0.0;
  double frequency_ghz = 0.0;
  double phase_rad = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
  int iterations = 0;
};

// Least-squares fit of A exp(-t/tau) cos(2 pi f t + phi) + B. Initial guesses
// come from the discrete Fourier peak (f), the trace mean (B) and a
// log-envelope regression (tau); a damped Gauss-Newton refinement runs to
// gradient norm < 1e-10 with tau bounded to [0.1, 1e5] ns. Requires at least
// four oscillation periods sampled at eight or more points per period.
DampedCosineFit fit_damped_cosine(std::span<const double> times_ns,
                                  std::span<const double> values);

// N = g_ens^2 / (2 g^2); the factor 2 accounts for the two degenerate
// transitions each spin contributes.
double estimate_ensemble_size(double g_ens_ghz, double g_single_ghz);

// N = density * area * thickness with 1 um^3 = 1e-12 cm^3.
double density_cross_check(double density_per_cm3, double area_um2, double thickness_um);

struct ConsistencyReport {
  double spectro_gap_ghz = 0.0;
  double rabi_frequency_ghz = 0.0;
  double gap_frequency_rel_discrepancy = 0.0;
  double n_from_formula = 0.0;
  double n_from_density = 0.0;
  double n_rel_discrepancy = 0.0;
  bool coupling_absent = false;
  std::string note;
};

// Cross-validates the spectroscopic splitting, the fitted oscillation
// frequency and the two ensemble-size estimates.
ConsistencyReport consistency_report(double spectro_gap_ghz, const DampedCosineFit& rabi_fit,
                                     double g_single_ghz, double density_per_cm3,
                                     double area_um2, double thickness_um);

}  // namespace fluxnv
