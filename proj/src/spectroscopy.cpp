#include "fluxnv/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "fluxnv/errors.hpp"

namespace fluxnv {

namespace {

constexpr double kMinTransitionFreq = 1e-6;  // GHz; excludes the ground self-term
constexpr double kWeightFloor = 1e-8;        // relative to the strongest transition

struct ModelMatrices {
  Matrix h;
  Matrix drive;
};

ModelMatrices build_model(const QubitParams& qp, const EnsembleParams& ep,
                          const ModelSelection& model) {
  if (!model.exact) {
    return {coupled_hamiltonian_collective(qp, ep).matrix(), collective_drive(qp).matrix()};
  }
  const Operator h = coupled_hamiltonian_exact(qp, ep, model.n_spins);
  const int spins_dim = h.dim() / 2;
  const Operator drive = kron(pauli_z(), identity(spins_dim, "nv"));
  return {h.matrix(), drive.matrix()};
}

std::vector<Transition> transitions_of(const ModelMatrices& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.h);
  if (solver.info() != Eigen::Success) throw NumericError("spectrum eigensolver failed");
  const auto& vals = solver.eigenvalues();
  const Matrix& vecs = solver.eigenvectors();
  const Vector driven = m.drive * vecs.col(0);
  std::vector<Transition> out;
  out.reserve(vals.size());
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    const double w = std::norm(Complex(vecs.col(k).adjoint() * driven));
    out.push_back({vals(k) - vals(0), w});
  }
  return out;
}

// The two lowest drive-weighted transition frequencies, or nullopt when the
// point has fewer than two weighted branches.
std::optional<std::pair<double, double>> weighted_branches(const SpectrumPoint& point) {
  double max_weight = 0.0;
  for (const auto& tr : point.transitions) {
    if (tr.frequency_ghz > kMinTransitionFreq) max_weight = std::max(max_weight, tr.weight);
  }
  std::vector<double> freqs;
  for (const auto& tr : point.transitions) {
    if (tr.frequency_ghz > kMinTransitionFreq && tr.weight > kWeightFloor * max_weight) {
      freqs.push_back(tr.frequency_ghz);
    }
  }
  if (freqs.size() < 2) return std::nullopt;
  std::sort(freqs.begin(), freqs.end());
  return std::make_pair(freqs[0], freqs[1]);
}

}  // namespace

SpectrumResult sweep_spectrum(const QubitParams& qp, const EnsembleParams& ep,
                              const std::vector<double>& bias_grid_mphi0,
                              const ModelSelection& model, const WorkerPool& pool) {
  if (bias_grid_mphi0.empty()) throw std::invalid_argument("bias grid is empty");
  SpectrumResult result;
  result.model = model.name();
  result.g_ens_ghz = ep.g_ens_ghz();
  result.points.resize(bias_grid_mphi0.size());
  pool.for_each_index(bias_grid_mphi0.size(), [&](std::size_t i) {
    QubitParams biased = qp;
    biased.epsilon_ghz = flux_to_epsilon(bias_grid_mphi0[i] * 1e-3, qp.ip_na);
    SpectrumPoint point;
    point.bias_mphi0 = bias_grid_mphi0[i];
    point.epsilon_ghz = biased.epsilon_ghz;
    point.transitions = transitions_of(build_model(biased, ep, model));
    result.points[i] = std::move(point);
  });
  return result;
}

SplittingResult extract_splitting(const SpectrumResult& spectrum) {
  const auto& points = spectrum.points;
  const double invalid = std::numeric_limits<double>::infinity();
  std::vector<double> gaps(points.size(), invalid);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (const auto branches = weighted_branches(points[i])) {
      gaps[i] = branches->second - branches->first;
    }
  }

  std::size_t best = points.size();
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (gaps[i] < (best == points.size() ? invalid : gaps[best])) best = i;
  }
  if (best == points.size()) {
    throw NumericError(
        "extract_splitting: no avoided crossing (no bias point with two weighted branches)");
  }
  if (best == 0 || best + 1 == gaps.size() || !std::isfinite(gaps[best - 1]) ||
      !std::isfinite(gaps[best + 1])) {
    throw NumericError("extract_splitting: no interior minimum; grid too coarse or no crossing");
  }

  // Parabolic refinement through the minimum and its two neighbours.
  const double b0 = points[best - 1].bias_mphi0;
  const double b1 = points[best].bias_mphi0;
  const double b2 = points[best + 1].bias_mphi0;
  const double g0 = gaps[best - 1];
  const double g1 = gaps[best];
  const double g2 = gaps[best + 1];
  double bias = b1;
  double gap = g1;
  const double d01 = b1 - b0;
  const double d12 = b2 - b1;
  const double curvature = (g2 - g1) / d12 - (g1 - g0) / d01;
  if (curvature > 0.0) {
    const double slope = 0.5 * ((g2 - g1) / d12 + (g1 - g0) / d01);
    const double shift = -slope * 0.5 * (d01 + d12) / curvature;
    if (std::abs(shift) <= std::max(d01, d12)) {
      bias = b1 + shift;
      const double a = curvature / (d01 + d12);
      gap = g1 + slope * shift + a * shift * shift;
    }
  }
  if (gap <= 1e-9) {
    throw NumericError("extract_splitting: zero gap; crossing rather than avoided crossing");
  }
  return {gap, bias};
}

DarkStateVisibility dark_state_visibility(const QubitParams& qp, const EnsembleParams& ep) {
  const Matrix h = coupled_hamiltonian_collective(qp, ep).matrix();
  const Matrix drive = collective_drive(qp).matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed");
  const auto& vals = solver.eigenvalues();
  const Matrix& vecs = solver.eigenvectors();

  int ground = 0;  // ascending order: ground is the lowest state
  int dark = -1;
  double best_overlap = -1.0;
  for (int k = 0; k < 4; ++k) {
    const double overlap = std::norm(vecs(kDark, k));
    if (overlap > best_overlap) {
      best_overlap = overlap;
      dark = k;
    }
  }

  const Vector driven = drive * vecs.col(ground);
  DarkStateVisibility vis;
  double bright_weight_sum = 0.0;
  double bright_freq_sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (k == ground) continue;
    const double w = std::norm(Complex(vecs.col(k).adjoint() * driven));
    const double f = vals(k) - vals(ground);
    if (k == dark) {
      vis.dark_weight = w;
      vis.dark_frequency_ghz = f;
    } else {
      bright_weight_sum += w;
      bright_freq_sum += w * f;
    }
  }
  vis.bright_weight = bright_weight_sum;
  vis.bright_frequency_ghz = bright_weight_sum > 0.0 ? bright_freq_sum / bright_weight_sum : 0.0;
  return vis;
}

double resonant_gap(const QubitParams& qp, const EnsembleParams& ep,
                    const ModelSelection& model) {
  SpectrumPoint point;
  point.epsilon_ghz = qp.epsilon_ghz;
  point.transitions = transitions_of(build_model(qp, ep, model));
  const auto branches = weighted_branches(point);
  if (!branches) throw NumericError("resonant_gap: fewer than two drive-weighted branches");
  return branches->second - branches->first;
}

}  // namespace fluxnv
