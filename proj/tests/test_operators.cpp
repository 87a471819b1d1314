#include <doctest.h>

#include <random>

#include "fluxnv/device.hpp"
#include "fluxnv/errors.hpp"
#include "fluxnv/operators.hpp"

using namespace fluxnv;

namespace {

Operator random_hermitian(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(dist(rng), dist(rng));
  Matrix h = 0.5 * (m + m.adjoint());
  return Operator::hamiltonian(std::move(h), {{"sys", dim}});
}

}  // namespace

TEST_CASE("kron identities and spectra") {
  const Operator i2 = identity(2);
  const Operator i3 = identity(3);
  const Operator i6 = kron(i2, i3);
  CHECK(i6.dim() == 6);
  CHECK((i6.matrix() - Matrix::Identity(6, 6)).norm() == doctest::Approx(0.0));
  CHECK(i6.basis().size() == 2);

  const Operator zi = kron(pauli_z(), i3);
  const auto es = eigh(zi);
  for (int k = 0; k < 3; ++k) CHECK(es.eigenvalues(k) == doctest::Approx(-1.0));
  for (int k = 3; k < 6; ++k) CHECK(es.eigenvalues(k) == doctest::Approx(1.0));

  const Operator xx = kron(pauli_x(), pauli_x());
  CHECK((xx.matrix() * xx.matrix() - Matrix::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("eigh on Pauli matrices and the qubit Hamiltonian") {
  const auto ez = eigh(pauli_z());
  CHECK(ez.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(ez.eigenvalues(1) == doctest::Approx(1.0));

  const auto ex = eigh(pauli_x());
  CHECK(ex.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(ex.eigenvalues(1) == doctest::Approx(1.0));
  // eigenvectors (1, -1)/sqrt(2) and (1, 1)/sqrt(2) up to phase
  for (int k = 0; k < 2; ++k) {
    const Vector v = ex.eigenvectors.col(k);
    CHECK(std::abs(std::abs(v(0)) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(std::abs(std::abs(v(1)) - 1.0 / std::sqrt(2.0)) < 1e-12);
  }

  QubitParams qp;
  qp.delta_ghz = 3.0;
  qp.epsilon_ghz = 4.0;
  const auto eq = eigh(qubit_hamiltonian(qp));
  CHECK(eq.eigenvalues(0) == doctest::Approx(-2.5).epsilon(1e-12));
  CHECK(eq.eigenvalues(1) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("eigh rejects non-Hermitian input") {
  Matrix m(2, 2);
  m << 0, 1, 0, 0;
  const Operator op(m, {{"sys", 2}});
  CHECK_THROWS_AS(eigh(op), std::invalid_argument);
  CHECK_THROWS_AS(Operator::hamiltonian(m, {{"sys", 2}}), std::invalid_argument);
}

TEST_CASE("eigh reconstruction on random Hermitian matrices") {
  for (int dim : {2, 3, 6, 54, 243}) {
    const Operator h = random_hermitian(dim, 41 + dim);
    const auto es = eigh(h);
    const Matrix reconstructed =
        es.eigenvectors * es.eigenvalues.cast<Complex>().asDiagonal() * es.eigenvectors.adjoint();
    CHECK((reconstructed - h.matrix()).norm() / h.matrix().norm() < 1e-10);
    CHECK((es.eigenvectors.adjoint() * es.eigenvectors - Matrix::Identity(dim, dim)).norm() <
          1e-10);
    for (int k = 1; k < dim; ++k) CHECK(es.eigenvalues(k) >= es.eigenvalues(k - 1));
  }
}

TEST_CASE("eigh reconstruction at the maximum model dimension") {
  const int dim = 2 * 729;  // largest exact-model size, 2*3^6
  const Operator h = random_hermitian(dim, 7);
  const auto es = eigh(h);
  double worst = 0.0;
  for (int k = 0; k < dim; k += 97) {
    const Vector residual =
        h.matrix() * es.eigenvectors.col(k) - es.eigenvalues(k) * es.eigenvectors.col(k);
    worst = std::max(worst, residual.norm());
  }
  CHECK(worst < 1e-10 * h.matrix().norm());
}

TEST_CASE("propagate basics") {
  const BasisLabels basis{{"qubit", 2}};
  const QuantumState ground = QuantumState::basis_state(0, basis);

  QubitParams qp;
  const Operator h = qubit_hamiltonian(qp);
  const QuantumState same = propagate(h, ground, 0.0);
  CHECK((same.vector() - ground.vector()).norm() < 1e-14);

  CHECK_THROWS_AS(propagate(h, ground, -1.0), std::invalid_argument);

  // sigma_z/2 in GHz: |+x> returns to itself after 1 ns (one cycle at 1 GHz)
  const Operator hz(0.5 * pauli_z().matrix(), basis);
  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const QuantumState px = QuantumState::pure(plus, basis);
  const QuantumState cycled = propagate(hz, px, 1.0);
  const Complex overlap = (px.vector().adjoint() * cycled.vector())(0);
  CHECK(std::abs(std::abs(overlap) - 1.0) < 1e-12);
}

TEST_CASE("propagate reproduces the analytic Rabi swap") {
  // two-level H with off-diagonal g/2: full population swap at t = 1/(2g)
  const double g = 0.07;
  const BasisLabels basis{{"qubit", 2}};
  Matrix m(2, 2);
  m << 0.0, g / 2.0, g / 2.0, 0.0;
  const Operator h = Operator::hamiltonian(m, basis);
  const QuantumState excited = QuantumState::basis_state(0, basis);

  for (double t : {1.3, 4.0, 1.0 / (2.0 * g)}) {
    const QuantumState evolved = propagate(h, excited, t);
    const double expected = std::cos(kTwoPi * 0.5 * g * t) * std::cos(kTwoPi * 0.5 * g * t);
    CHECK(evolved.population(0) == doctest::Approx(expected).epsilon(1e-10));
  }
  const QuantumState swapped = propagate(h, excited, 1.0 / (2.0 * g));
  CHECK(swapped.population(1) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("propagate semigroup property") {
  const Operator h = random_hermitian(6, 99);
  const QuantumState psi = QuantumState::basis_state(2, {{"sys", 6}});
  const QuantumState one = propagate(h, propagate(h, psi, 1.7), 2.55);
  const QuantumState two = propagate(h, psi, 1.7 + 2.55);
  CHECK((one.vector() - two.vector()).norm() < 1e-9);
}

TEST_CASE("lindblad_step matches propagate in the unitary limit") {
  const double g = 0.3;
  const BasisLabels basis{{"qubit", 2}};
  Matrix m(2, 2);
  m << 0.1, g / 2.0, g / 2.0, -0.1;
  const Operator h = Operator::hamiltonian(m, basis);

  Matrix rho = QuantumState::basis_state(0, basis).to_density().density_matrix();
  const double dt = 0.01;
  for (int s = 0; s < 200; ++s) rho = lindblad_step(h, {}, rho, dt);
  const QuantumState expected = propagate(h, QuantumState::basis_state(0, basis), 200 * dt);
  CHECK((rho - expected.to_density().density_matrix()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lindblad_step reproduces exponential decay at rate 2*pi*gamma") {
  const BasisLabels basis{{"qubit", 2}};
  Matrix lower = Matrix::Zero(2, 2);
  lower(0, 1) = 1.0;  // sigma_minus onto the ground state at index 0
  const double gamma = 0.02;
  const std::vector<Collapse> collapses{{Operator(lower, basis), gamma}};
  const Operator h(Matrix::Zero(2, 2), basis);

  Matrix rho = QuantumState::basis_state(1, basis).to_density().density_matrix();
  const double dt = 0.01;
  double t = 0.0;
  for (int s = 0; s < 500; ++s) {
    rho = lindblad_step(h, collapses, rho, dt);
    t += dt;
  }
  CHECK(rho(1, 1).real() == doctest::Approx(std::exp(-kTwoPi * gamma * t)).epsilon(1e-7));
  CHECK(std::abs(rho.trace().real() - 1.0) < 1e-9);
}

TEST_CASE("dephasing preserves populations") {
  const BasisLabels basis{{"qubit", 2}};
  const std::vector<Collapse> collapses{{pauli_z(), 0.05}};
  Matrix m(2, 2);
  m << 0.2, 0.05, 0.05, -0.2;
  const Operator h = Operator::hamiltonian(m, basis);

  Vector psi(2);
  psi << std::sqrt(0.7), std::sqrt(0.3);
  Matrix rho = QuantumState::pure(psi, basis).to_density().density_matrix();

  // H = 0 so that nothing but the dephasing channel acts on the populations
  const Operator h0(Matrix::Zero(2, 2), basis);
  for (int s = 0; s < 300; ++s) rho = lindblad_step(h0, collapses, rho, 0.01);
  CHECK(rho(0, 0).real() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(rho(1, 1).real() == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::abs(rho(0, 1)) < 0.7);  // coherence decays
  (void)h;
}

TEST_CASE("lindblad_step input validation and trace guard") {
  const BasisLabels basis{{"qubit", 2}};
  const Operator h(Matrix::Zero(2, 2), basis);
  Matrix rho = QuantumState::basis_state(1, basis).to_density().density_matrix();
  CHECK_THROWS_AS(lindblad_step(h, {}, rho, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lindblad_step(h, {}, rho, -0.1), std::invalid_argument);

  Matrix lower = Matrix::Zero(2, 2);
  lower(0, 1) = 1.0;
  CHECK_THROWS_AS(lindblad_step(h, {{Operator(lower, basis), -1.0}}, rho, 0.01),
                  std::invalid_argument);

  // a GHz-scale Hamiltonian stepped at dt = 5 ns is violently unstable; the
  // state explodes within a few steps and the trace guard rejects the step
  QubitParams qp;
  const Operator hq = qubit_hamiltonian(qp);
  Vector psi(2);
  psi << std::sqrt(0.5), std::sqrt(0.5);
  Matrix unstable = QuantumState::pure(psi, basis).to_density().density_matrix();
  auto run_unstable = [&] {
    for (int s = 0; s < 20; ++s) {
      unstable = lindblad_step(hq, {{Operator(lower, basis), 1.0 / 150.0}}, unstable, 5.0);
    }
  };
  CHECK_THROWS_AS(run_unstable(), NumericError);
}

TEST_CASE("quantum state invariants") {
  const BasisLabels basis{{"qubit", 2}};
  Vector bad(2);
  bad << 1.0, 1.0;
  CHECK_THROWS_AS(QuantumState::pure(bad, basis), std::invalid_argument);

  Matrix not_trace_one = 0.5 * Matrix::Identity(2, 2);
  not_trace_one(0, 0) = 0.9;
  CHECK_THROWS_AS(QuantumState::density(not_trace_one, basis), std::invalid_argument);

  Matrix ok = Matrix::Zero(2, 2);
  ok(0, 0) = 0.25;
  ok(1, 1) = 0.75;
  const QuantumState rho = QuantumState::density(ok, basis);
  rho.validate();
  CHECK(rho.population(1) == doctest::Approx(0.75));

  // dim must equal the product of subsystem dimensions
  CHECK_THROWS_AS(QuantumState::basis_state(0, BasisLabels{{"a", 2}, {"b", 3}}).population(7),
                  std::invalid_argument);
  CHECK(basis_dim(BasisLabels{{"a", 2}, {"b", 3}}) == 6);
}
