#include "fluxnv/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "fluxnv/errors.hpp"

namespace fluxnv {

int basis_dim(const BasisLabels& basis) {
  int d = 1;
  for (const auto& sub : basis) {
    if (sub.dim < 1) throw std::invalid_argument("basis subsystem with dim < 1");
    d *= sub.dim;
  }
  return d;
}

Operator::Operator(Matrix m, BasisLabels basis) : m_(std::move(m)), basis_(std::move(basis)) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("operator matrix must be square");
  if (m_.rows() != basis_dim(basis_)) {
    throw std::invalid_argument("operator dim does not match basis labels");
  }
}

Operator Operator::hamiltonian(Matrix m, BasisLabels basis) {
  Operator op(std::move(m), std::move(basis));
  if (!op.is_hermitian()) throw std::invalid_argument("Hamiltonian is not Hermitian");
  return op;
}

bool Operator::is_hermitian(double rel_tol) const {
  const double scale = std::max(m_.norm(), 1.0);
  return (m_ - m_.adjoint()).norm() <= rel_tol * scale;
}

Operator kron(const Operator& a, const Operator& b) {
  const int da = a.dim();
  const int db = b.dim();
  Matrix out(da * db, da * db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j)
      out.block(i * db, j * db, db, db) = a.matrix()(i, j) * b.matrix();
  BasisLabels basis = a.basis();
  basis.insert(basis.end(), b.basis().begin(), b.basis().end());
  return Operator(std::move(out), std::move(basis));
}

Eigensystem eigh(const Operator& h) {
  if (!h.is_hermitian()) throw std::invalid_argument("eigh: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.matrix());
  if (solver.info() != Eigen::Success) throw NumericError("eigh: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

QuantumState::QuantumState(StateKind kind, Vector v, Matrix m, BasisLabels basis)
    : kind_(kind), vec_(std::move(v)), mat_(std::move(m)), basis_(std::move(basis)) {}

QuantumState QuantumState::pure(Vector psi, BasisLabels basis) {
  if (psi.size() != basis_dim(basis)) {
    throw std::invalid_argument("state dim does not match basis labels");
  }
  if (std::abs(psi.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("state vector is not normalised");
  }
  return QuantumState(StateKind::Vector, std::move(psi), Matrix(), std::move(basis));
}

QuantumState QuantumState::density(Matrix rho, BasisLabels basis) {
  if (rho.rows() != rho.cols() || rho.rows() != basis_dim(basis)) {
    throw std::invalid_argument("density matrix dim does not match basis labels");
  }
  if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9) {
    throw std::invalid_argument("density matrix trace is not 1");
  }
  const double scale = std::max(rho.norm(), 1.0);
  if ((rho - rho.adjoint()).norm() > 1e-12 * scale) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  return QuantumState(StateKind::DensityMatrix, Vector(), std::move(rho), std::move(basis));
}

QuantumState QuantumState::basis_state(int index, BasisLabels basis) {
  const int d = basis_dim(basis);
  if (index < 0 || index >= d) throw std::invalid_argument("basis_state: index out of range");
  Vector psi = Vector::Zero(d);
  psi(index) = 1.0;
  return pure(std::move(psi), std::move(basis));
}

int QuantumState::dim() const {
  return kind_ == StateKind::Vector ? static_cast<int>(vec_.size())
                                    : static_cast<int>(mat_.rows());
}

const Vector& QuantumState::vector() const {
  if (kind_ != StateKind::Vector) throw std::logic_error("state is not a vector");
  return vec_;
}

const Matrix& QuantumState::density_matrix() const {
  if (kind_ != StateKind::DensityMatrix) throw std::logic_error("state is not a density matrix");
  return mat_;
}

QuantumState QuantumState::to_density() const {
  if (kind_ == StateKind::DensityMatrix) return *this;
  return density(vec_ * vec_.adjoint(), basis_);
}

double QuantumState::population(int index) const {
  if (index < 0 || index >= dim()) throw std::invalid_argument("population: index out of range");
  if (kind_ == StateKind::Vector) return std::norm(vec_(index));
  return mat_(index, index).real();
}

void QuantumState::validate() const {
  if (kind_ == StateKind::Vector) {
    if (std::abs(vec_.norm() - 1.0) > 1e-9) throw NumericError("state norm drifted from 1");
    return;
  }
  if (std::abs(mat_.trace().real() - 1.0) > 1e-9) throw NumericError("density trace drifted from 1");
  const double scale = std::max(mat_.norm(), 1.0);
  if ((mat_ - mat_.adjoint()).norm() > 1e-12 * scale) {
    throw NumericError("density matrix lost Hermiticity");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(mat_, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -1e-9) {
    throw NumericError("density matrix lost positivity");
  }
}

QuantumState propagate(const Operator& h, const QuantumState& state, double t_ns) {
  if (t_ns < 0.0) throw std::invalid_argument("propagate: negative duration");
  if (h.dim() != state.dim()) throw std::invalid_argument("propagate: dim mismatch");
  const Eigensystem es = eigh(h);
  Vector phases(es.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases(k) = std::exp(Complex(0.0, -kTwoPi * es.eigenvalues(k) * t_ns));
  }
  const Matrix u = es.eigenvectors * phases.asDiagonal() * es.eigenvectors.adjoint();
  if (state.kind() == StateKind::Vector) {
    Vector psi = u * state.vector();
    psi /= psi.norm();  // absorb rounding at the 1e-16 level
    return QuantumState::pure(std::move(psi), state.basis());
  }
  Matrix rho = u * state.density_matrix() * u.adjoint();
  return QuantumState::density(std::move(rho), state.basis());
}

Matrix lindblad_step(const Operator& h, const std::vector<Collapse>& collapses,
                     const Matrix& rho, double dt_ns) {
  if (dt_ns <= 0.0) throw std::invalid_argument("lindblad_step: dt must be positive");
  for (const auto& c : collapses) {
    if (c.rate_ghz < 0.0) throw std::invalid_argument("lindblad_step: negative rate");
    if (c.op.dim() != h.dim()) throw std::invalid_argument("lindblad_step: collapse dim mismatch");
  }
  if (rho.rows() != h.dim() || rho.cols() != h.dim()) {
    throw std::invalid_argument("lindblad_step: rho dim mismatch");
  }
  const auto channels = detail::prepare_channels<Matrix>(collapses);
  Matrix next = detail::rk4_lindblad_step(h.matrix(), channels, rho, dt_ns);
  const double drift = std::abs(next.trace().real() - rho.trace().real()) +
                       std::abs(next.trace().imag() - rho.trace().imag());
  if (drift > 1e-6) {
    throw NumericError("lindblad_step: trace drift " + std::to_string(drift) +
                       " signals dt too large");
  }
  return next;
}

}  // namespace fluxnv
