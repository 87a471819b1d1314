#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxnv {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 6.283185307179586476925287;

// One tensor factor of a composite Hilbert space.
struct Subsystem {
  std::string name;
  int dim = 0;
  friend bool operator==(const Subsystem&, const Subsystem&) = default;
};

using BasisLabels = std::vector<Subsystem>;

int basis_dim(const BasisLabels& basis);

/// Dense operator over a labelled basis. Hamiltonians are stored as ordinary
/// frequencies in GHz (h = 1); structural operators are dimensionless. Time is
/// always in ns, so every generated phase carries an explicit 2*pi.
class Operator {
 public:
  Operator(Matrix m, BasisLabels basis);

  // Same as the plain constructor but enforces H = H† (relative Frobenius
  // norm within 1e-12).
  static Operator hamiltonian(Matrix m, BasisLabels basis);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  const BasisLabels& basis() const { return basis_; }

  bool is_hermitian(double rel_tol = 1e-12) const;

 private:
  Matrix m_;
  BasisLabels basis_;
};

// Tensor product; basis labels are concatenated.
Operator kron(const Operator& a, const Operator& b);

struct Eigensystem {
  Eigen::VectorXd eigenvalues;  // ascending
  Matrix eigenvectors;          // unitary, one column per eigenvalue
};

// Hermitian eigendecomposition. Rejects non-Hermitian input.
Eigensystem eigh(const Operator& h);

enum class StateKind { Vector, DensityMatrix };

/// State vector or density matrix over a labelled basis. Construction
/// validates normalisation (vector: unit norm within 1e-9; density: unit
/// trace within 1e-9 and Hermitian within 1e-12).
class QuantumState {
 public:
  static QuantumState pure(Vector psi, BasisLabels basis);
  static QuantumState density(Matrix rho, BasisLabels basis);
  static QuantumState basis_state(int index, BasisLabels basis);

  StateKind kind() const { return kind_; }
  int dim() const;
  const BasisLabels& basis() const { return basis_; }
  const Vector& vector() const;
  const Matrix& density_matrix() const;
  QuantumState to_density() const;

  double population(int index) const;

  // Full invariant check including positivity (min eigenvalue >= -1e-9 for
  // density matrices). Throws on violation.
  void validate() const;

 private:
  QuantumState(StateKind kind, Vector v, Matrix m, BasisLabels basis);

  StateKind kind_;
  Vector vec_;
  Matrix mat_;
  BasisLabels basis_;
};

// U = exp(-i 2*pi H t) applied through the eigendecomposition of H.
// H in GHz, t in ns; negative durations are rejected.
QuantumState propagate(const Operator& h, const QuantumState& state, double t_ns);

struct Collapse {
  Operator op;
  double rate_ghz = 0.0;
};

// One fixed-step RK4 step of the master equation
//   drho/dt = 2*pi * ( -i [H, rho] + sum_k rate_k (L rho L† - {L†L, rho}/2) )
// with H and the rates in GHz and dt in ns. The uniform 2*pi matches the
// propagator convention, so a decay rate gamma quoted in GHz produces
// exp(-2*pi*gamma*t) population decay. A trace drift above 1e-6 in one step
// signals that dt is too large and raises NumericError.
Matrix lindblad_step(const Operator& h, const std::vector<Collapse>& collapses,
                     const Matrix& rho, double dt_ns);

namespace detail {

// Precomputed dissipation channel: L and L†L.
template <class M>
struct PreparedChannel {
  M l;
  M ldl;
  double rate;
};

template <class M>
std::vector<PreparedChannel<M>> prepare_channels(const std::vector<Collapse>& collapses) {
  std::vector<PreparedChannel<M>> out;
  out.reserve(collapses.size());
  for (const auto& c : collapses) {
    M l = c.op.matrix();
    out.push_back({l, M(l.adjoint() * l), c.rate_ghz});
  }
  return out;
}

template <class M>
M lindblad_rhs(const M& h, const std::vector<PreparedChannel<M>>& channels, const M& rho) {
  M out = Complex(0.0, -kTwoPi) * (h * rho - rho * h);
  for (const auto& ch : channels) {
    if (ch.rate == 0.0) continue;
    out += (kTwoPi * ch.rate) *
           (ch.l * rho * ch.l.adjoint() - 0.5 * (ch.ldl * rho + rho * ch.ldl));
  }
  return out;
}

template <class M>
M rk4_lindblad_step(const M& h, const std::vector<PreparedChannel<M>>& channels,
                    const M& rho, double dt) {
  const M k1 = lindblad_rhs(h, channels, rho);
  const M k2 = lindblad_rhs(h, channels, M(rho + (0.5 * dt) * k1));
  const M k3 = lindblad_rhs(h, channels, M(rho + (0.5 * dt) * k2));
  const M k4 = lindblad_rhs(h, channels, M(rho + dt * k3));
  return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

}  // namespace fluxnv
