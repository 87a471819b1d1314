#include "fluxnv/device.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fluxnv/errors.hpp"

namespace fluxnv {

namespace {

const Complex kI(0.0, 1.0);

Matrix pauli_x_m() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_y_m() {
  Matrix m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}

Matrix pauli_z_m() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

// Spin-1 operators in the {|+1>, |0>, |-1>} basis.
Matrix spin1_sx_m() {
  Matrix m(3, 3);
  const double s = 1.0 / std::sqrt(2.0);
  m << 0, s, 0, s, 0, s, 0, s, 0;
  return m;
}

Matrix spin1_sy_m() {
  Matrix m(3, 3);
  const Complex s = -kI / std::sqrt(2.0);
  m << 0, s, 0, -s, 0, s, 0, -s, 0;
  return m;
}

Matrix spin1_sz_m() {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(2, 2) = -1.0;
  return m;
}

Matrix nv_hamiltonian_m(const EnsembleParams& p) {
  const Matrix sx = spin1_sx_m();
  const Matrix sy = spin1_sy_m();
  const Matrix sz = spin1_sz_m();
  const double zeeman = kGNv * kMuBGhzPerMt * p.b_mt;
  return p.d_ghz * (sz * sz) + p.e_ghz * (sx * sx - sy * sy) + zeeman * sz;
}

// Site Hamiltonian and coupling operator of one truncated {|0>, |+1>} spin,
// ordered {|+1>, |0>}. Strain couples |+1> to |-1> only and drops out.
Matrix nv_truncated_m(const EnsembleParams& p) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = p.d_ghz + kGNv * kMuBGhzPerMt * p.b_mt;
  return m;
}

Matrix kron_m(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix embed(const Matrix& site, int index, int n, int site_dim) {
  auto power = [&](int k) {
    int d = 1;
    for (int i = 0; i < k; ++i) d *= site_dim;
    return d;
  };
  const Matrix left = Matrix::Identity(power(index), power(index));
  const Matrix right = Matrix::Identity(power(n - 1 - index), power(n - 1 - index));
  return kron_m(kron_m(left, site), right);
}

// Assembles the coupled model with an explicit coupling operator per spin.
Matrix coupled_exact_m(const QubitParams& qp, const EnsembleParams& ep, int n,
                       const Matrix& site_h, const Matrix& site_x, int site_dim) {
  const int spins_dim = static_cast<int>(std::pow(site_dim, n) + 0.5);
  const Matrix hq = (qp.delta_ghz * pauli_x_m() + qp.epsilon_ghz * pauli_z_m()) / 2.0;
  Matrix h = kron_m(hq, Matrix::Identity(spins_dim, spins_dim));
  const Matrix i2 = Matrix::Identity(2, 2);
  const Matrix sz = pauli_z_m();
  for (int i = 0; i < n; ++i) {
    h += kron_m(i2, embed(site_h, i, n, site_dim));
    h += (ep.g_single_ghz / 2.0) * kron_m(sz, embed(site_x, i, n, site_dim));
  }
  return h;
}

BasisLabels qubit_basis() { return {{"qubit", 2}}; }

BasisLabels exact_basis(int n, int site_dim) {
  BasisLabels basis = qubit_basis();
  for (int i = 0; i < n; ++i) basis.push_back({"nv" + std::to_string(i + 1), site_dim});
  return basis;
}

void check_spin_count(int n) {
  if (n < 1 || n > 6) {
    throw std::invalid_argument("exact model supports 1 <= n <= 6 spins (dimension guard)");
  }
}

// Separation of the two lowest drive-weighted transitions out of the ground
// state. Used to measure anti-crossing gaps at a single bias point.
double weighted_gap(const Matrix& h, const Matrix& drive) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericError("weighted_gap: eigensolver failed");
  const auto& vals = solver.eigenvalues();
  const Matrix& vecs = solver.eigenvectors();
  const Vector driven = drive * vecs.col(0);
  std::vector<std::pair<double, double>> transitions;  // (frequency, weight)
  double max_weight = 0.0;
  for (Eigen::Index k = 1; k < vals.size(); ++k) {
    const double w = std::norm(Complex(vecs.col(k).adjoint() * driven));
    max_weight = std::max(max_weight, w);
    transitions.emplace_back(vals(k) - vals(0), w);
  }
  std::vector<double> freqs;
  for (const auto& [f, w] : transitions) {
    if (w > 1e-8 * max_weight) freqs.push_back(f);
  }
  if (freqs.size() < 2) throw NumericError("weighted_gap: fewer than two drive-weighted branches");
  std::sort(freqs.begin(), freqs.end());
  return freqs[1] - freqs[0];
}

}  // namespace

double QubitParams::splitting_ghz() const {
  return std::hypot(epsilon_ghz, delta_ghz);
}

void QubitParams::validate() const {
  if (delta_ghz <= 0.0) throw ConfigError("qubit delta must be > 0");
  if (t1_ns <= 0.0) throw ConfigError("qubit t1 must be > 0");
  if (t2echo_ns <= 0.0) throw ConfigError("qubit t2echo must be > 0");
  if (t2echo_ns > 2.0 * t1_ns + 1e-12) {
    throw ConfigError("qubit t2echo must not exceed 2*t1");
  }
}

double EnsembleParams::g_ens_ghz() const {
  return std::sqrt(2.0 * n_spins) * g_single_ghz;
}

double EnsembleParams::bright_frequency_ghz() const { return d_ghz + e_ghz; }

void EnsembleParams::validate() const {
  if (d_ghz <= 0.0) throw ConfigError("ensemble zero-field splitting must be > 0");
  if (e_ghz < 0.0) throw ConfigError("ensemble strain splitting must be >= 0");
  if (g_single_ghz < 0.0) throw ConfigError("single-spin coupling must be >= 0");
  if (n_spins < 1.0) throw ConfigError("ensemble size must be >= 1");
  if (gamma_ens_ghz < 0.0) throw ConfigError("collective dephasing rate must be >= 0");
}

BasisLayout BasisLayout::collective() {
  return {Kind::Collective, {{"collective", 4}}};
}

BasisLayout BasisLayout::exact(int n_spins) {
  check_spin_count(n_spins);
  return {Kind::ExactN, exact_basis(n_spins, 3)};
}

BasisLayout BasisLayout::exact_truncated(int n_spins) {
  check_spin_count(n_spins);
  return {Kind::ExactN, exact_basis(n_spins, 2)};
}

Operator pauli_x() { return Operator(pauli_x_m(), qubit_basis()); }
Operator pauli_y() { return Operator(pauli_y_m(), qubit_basis()); }
Operator pauli_z() { return Operator(pauli_z_m(), qubit_basis()); }

Operator identity(int dim, const std::string& name) {
  return Operator(Matrix::Identity(dim, dim), {{name, dim}});
}

Operator spin1_sx() { return Operator(spin1_sx_m(), {{"nv", 3}}); }
Operator spin1_sy() { return Operator(spin1_sy_m(), {{"nv", 3}}); }
Operator spin1_sz() { return Operator(spin1_sz_m(), {{"nv", 3}}); }

double flux_to_epsilon(double phi_offset_phi0, double ip_na) {
  // 2 I_P (dPhi) / h with dPhi = phi_offset * Phi0 and Phi0 = h/2e reduces to
  // I_P * phi_offset / e; divide by 1e9 for GHz.
  return (ip_na * 1e-9) * phi_offset_phi0 / kElementaryChargeC / 1e9;
}

Operator qubit_hamiltonian(const QubitParams& p) {
  Matrix h = (p.delta_ghz * pauli_x_m() + p.epsilon_ghz * pauli_z_m()) / 2.0;
  return Operator::hamiltonian(std::move(h), qubit_basis());
}

Operator nv_hamiltonian(const EnsembleParams& p) {
  return Operator::hamiltonian(nv_hamiltonian_m(p), {{"nv", 3}});
}

Operator coupled_hamiltonian_exact(const QubitParams& qp, const EnsembleParams& ep, int n) {
  check_spin_count(n);
  const Matrix x = spin1_sx_m() / kSpinOneMatrixElement;
  Matrix h = coupled_exact_m(qp, ep, n, nv_hamiltonian_m(ep), x, 3);
  return Operator::hamiltonian(std::move(h), exact_basis(n, 3));
}

Operator coupled_hamiltonian_exact_truncated(const QubitParams& qp, const EnsembleParams& ep,
                                             int n) {
  check_spin_count(n);
  Matrix x(2, 2);
  x << 0, 1, 1, 0;  // <+1|Sx|0>/c = 1 restricted to the kept subspace
  Matrix h = coupled_exact_m(qp, ep, n, nv_truncated_m(ep), x, 2);
  return Operator::hamiltonian(std::move(h), exact_basis(n, 2));
}

Operator collective_hamiltonian_at(double qubit_splitting_ghz, const EnsembleParams& ep) {
  const double f = qubit_splitting_ghz;
  Matrix h = Matrix::Zero(4, 4);
  h(kGround, kGround) = -f / 2.0;
  h(kQubitExcited, kQubitExcited) = f / 2.0;
  h(kBright, kBright) = -f / 2.0 + ep.d_ghz + ep.e_ghz;
  h(kDark, kDark) = -f / 2.0 + ep.d_ghz - ep.e_ghz;
  h(kQubitExcited, kBright) = ep.g_ens_ghz() / 2.0;
  h(kBright, kQubitExcited) = ep.g_ens_ghz() / 2.0;
  return Operator::hamiltonian(std::move(h), BasisLayout::collective().labels);
}

Operator coupled_hamiltonian_collective(const QubitParams& qp, const EnsembleParams& ep) {
  return collective_hamiltonian_at(qp.splitting_ghz(), ep);
}

Operator collective_drive(const QubitParams& qp) {
  const double f = qp.splitting_ghz();
  const double cos_theta = qp.epsilon_ghz / f;
  const double sin_theta = qp.delta_ghz / f;
  Matrix d = Matrix::Zero(4, 4);
  d(kGround, kGround) = -cos_theta;
  d(kQubitExcited, kQubitExcited) = cos_theta;
  d(kBright, kBright) = -cos_theta;
  d(kDark, kDark) = -cos_theta;
  d(kGround, kQubitExcited) = -sin_theta;
  d(kQubitExcited, kGround) = -sin_theta;
  return Operator(std::move(d), BasisLayout::collective().labels);
}

CalibrationResult normalization_calibration(double g_ghz) {
  if (g_ghz <= 0.0) throw std::invalid_argument("calibration requires g > 0");
  EnsembleParams ep;
  ep.e_ghz = 0.0;
  ep.b_mt = 0.0;
  ep.g_single_ghz = g_ghz;
  ep.n_spins = 1.0;
  QubitParams qp;
  qp.delta_ghz = ep.d_ghz;  // resonance at the degeneracy point
  qp.epsilon_ghz = 0.0;

  const Matrix drive = kron_m(pauli_z_m(), Matrix::Identity(3, 3));

  // Raw model: coupling (g/2) sigma_z (x) Sx with the standard spin-1 Sx.
  const Matrix h_raw = coupled_exact_m(qp, ep, 1, nv_hamiltonian_m(ep), spin1_sx_m(), 3);
  const double gap_raw = weighted_gap(h_raw, drive);
  const double c = gap_raw / (std::sqrt(2.0) * g_ghz);

  const double gap_exact =
      weighted_gap(coupled_hamiltonian_exact(qp, ep, 1).matrix(), drive);
  const double gap_collective =
      weighted_gap(coupled_hamiltonian_collective(qp, ep).matrix(),
                   collective_drive(qp).matrix());

  CalibrationResult result;
  result.c = c;
  result.exact_gap_ghz = gap_exact;
  result.collective_gap_ghz = gap_collective;
  result.rel_gap_mismatch = std::abs(gap_exact - gap_collective) / gap_collective;
  return result;
}

}  // namespace fluxnv
