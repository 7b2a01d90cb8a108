#include <cmath>

#include "doctest.h"
#include "wvfield/linalg.hpp"
#include "wvfield/rng.hpp"

using namespace wvf;

namespace {

StateVector plus_state() {
    Vec v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    return StateVector(v);
}

Mat random_hermitian(int dim, SubstreamRng& rng) {
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            m(i, j) = Complex(rng.next_double() - 0.5, rng.next_double() - 0.5);
    return 0.5 * (m + Mat(m.adjoint()));
}

}  // namespace

TEST_CASE("inner products") {
    const StateVector e0 = basis_state(2, 0);
    const StateVector e1 = basis_state(2, 1);
    CHECK(std::abs(inner(e0, e0) - 1.0) < 1e-15);
    CHECK(std::abs(inner(e0, e1)) < 1e-15);

    Vec minus(2);
    minus << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
    CHECK(std::abs(inner(plus_state(), StateVector(minus))) < 1e-15);

    // conjugate-linear in the bra
    Vec a(2), b(2);
    a << Complex(0.3, 0.4), Complex(-0.1, 0.9);
    b << Complex(0.7, -0.2), Complex(0.5, 0.1);
    const Complex lhs = inner(StateVector(Complex(0.0, 2.0) * a), StateVector(b));
    const Complex rhs = std::conj(Complex(0.0, 2.0)) * inner(StateVector(a), StateVector(b));
    CHECK(std::abs(lhs - rhs) < 1e-14);

    CHECK_THROWS_AS(inner(e0, basis_state(3, 0)), DimensionError);
}

TEST_CASE("tensor products") {
    const StateVector t = tensor(basis_state(2, 0), basis_state(2, 1));
    CHECK(t.dim() == 4);
    CHECK(std::abs(t[1] - 1.0) < 1e-15);
    CHECK(std::abs(t[0]) + std::abs(t[2]) + std::abs(t[3]) < 1e-15);

    const OperatorMatrix id4 = tensor(OperatorMatrix::identity(2), OperatorMatrix::identity(2));
    CHECK((id4.entries() - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-15);

    // sigma_z x sigma_z on |01> flips the sign
    const OperatorMatrix zz = tensor(pauli_z(), pauli_z());
    const StateVector s01 = tensor(basis_state(2, 0), basis_state(2, 1));
    CHECK((zz.apply(s01).amplitudes() + s01.amplitudes()).cwiseAbs().maxCoeff() < 1e-15);

    // associativity up to exact dims
    const OperatorMatrix abc1 = tensor(tensor(pauli_x(), pauli_y()), pauli_z());
    const OperatorMatrix abc2 = tensor(pauli_x(), tensor(pauli_y(), pauli_z()));
    CHECK((abc1.entries() - abc2.entries()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("evolve") {
    const Constants k;
    const StateVector psi = plus_state();
    const StateVector same = evolve(psi, pauli_x(), 0.0, k);
    CHECK((same.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-14);

    // exp(-i sigma_x pi/2) |0> = -i |1>, against the closed-form 2x2 exponential
    const StateVector out = evolve(basis_state(2, 0), pauli_x(), M_PI / 2.0, k);
    CHECK(std::abs(out[0]) < 1e-12);
    CHECK(std::abs(out[1] - Complex(0.0, -1.0)) < 1e-12);

    SubstreamRng rng(7, 0);
    const OperatorMatrix h(random_hermitian(8, rng));
    Vec raw(8);
    for (int i = 0; i < 8; ++i)
        raw(i) = Complex(rng.next_double() - 0.5, rng.next_double() - 0.5);
    const StateVector s = StateVector(raw).normalized();
    CHECK(evolve(s, h, 0.37, k).norm() == doctest::Approx(1.0).epsilon(1e-10));

    // composition in t
    const StateVector two_step = evolve(evolve(s, h, 0.2, k), h, 0.3, k);
    const StateVector one_step = evolve(s, h, 0.5, k);
    CHECK((two_step.amplitudes() - one_step.amplitudes()).cwiseAbs().maxCoeff() < 1e-9);

    Mat nh = Mat::Zero(2, 2);
    nh(0, 1) = 1.0;
    CHECK_THROWS_AS(evolve(psi, OperatorMatrix(nh), 1.0, k), Error);

    // hbar threading: evolving with hbar=2 is half the phase
    const Constants k2(2.0, 1.0);
    const StateVector a = evolve(basis_state(2, 0), pauli_z(), 1.0, k2);
    const StateVector b = evolve(basis_state(2, 0), pauli_z(), 0.5, k);
    CHECK((a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("matrix exponential") {
    const OperatorMatrix zero(Mat::Zero(3, 3));
    CHECK((matrix_exponential(zero, Complex(0.0, 0.0)).entries() - Mat::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-14);

    // exp(i pi sigma_z / 2) = diag(i, -i)
    const OperatorMatrix rot = matrix_exponential(pauli_z(), kI * M_PI / 2.0);
    CHECK(std::abs(rot.entries()(0, 0) - kI) < 1e-13);
    CHECK(std::abs(rot.entries()(1, 1) + kI) < 1e-13);
    CHECK(std::abs(rot.entries()(0, 1)) < 1e-13);

    SubstreamRng rng(11, 0);
    const Mat a = random_hermitian(8, rng);
    const Mat fwd = matrix_exponential(a, Complex(1.0, 0.0), 4096);
    const Mat bwd = matrix_exponential(a, Complex(-1.0, 0.0), 4096);
    CHECK((fwd * bwd - Mat::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-8);

    // non-Hermitian branch
    Mat nh(2, 2);
    nh << Complex(0.1, 0.2), Complex(0.5, 0.0), Complex(0.0, 0.0), Complex(-0.3, 0.1);
    const Mat f = matrix_exponential(nh, Complex(1.0, 0.0), 4096);
    const Mat g = matrix_exponential(nh, Complex(-1.0, 0.0), 4096);
    CHECK((f * g - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(matrix_exponential(zero, Complex(1.0, 0.0), 2), DimensionError);
}

TEST_CASE("truncated Fock operators") {
    const Constants k;
    const auto ops = truncated_fock_operators(8, 1.0, k);

    // vacuum annihilation
    CHECK(ops.a.apply(basis_state(8, 0)).norm() < 1e-15);
    // number eigenstate
    const StateVector n3 = ops.number.apply(basis_state(8, 3));
    CHECK(std::abs(n3[3] - 3.0) < 1e-14);

    // [x, p] = i hbar on the first n_max - 1 levels
    const Mat comm = ops.x.entries() * ops.p.entries() - ops.p.entries() * ops.x.entries();
    for (int n = 0; n < 7; ++n)
        CHECK(std::abs(comm(n, n) - kI * k.hbar) < 1e-12);

    CHECK_THROWS_AS(truncated_fock_operators(1, 1.0, k), Error);

    // x0/p0 scalings carry the constants
    const Constants k2(2.0, 3.0);
    const auto ops2 = truncated_fock_operators(4, 0.5, k2);
    const double x0 = std::sqrt(k2.hbar / (2.0 * k2.mass * 0.5));
    CHECK(std::abs(ops2.x.entries()(0, 1) - x0) < 1e-14);
}

TEST_CASE("coherent state") {
    double tail = 1.0;
    const StateVector vac = coherent_state(Complex(0.0, 0.0), 4, &tail);
    CHECK(std::abs(vac[0] - 1.0) < 1e-15);
    CHECK(tail < 1e-15);

    const StateVector alpha = coherent_state(Complex(1.2, 0.3), 48, &tail);
    CHECK(alpha.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tail < 1e-12);

    // a |alpha> = alpha |alpha> within truncation error
    Mat a = Mat::Zero(48, 48);
    for (int n = 1; n < 48; ++n) a(n - 1, n) = std::sqrt(double(n));
    const Vec lhs = a * alpha.amplitudes();
    const Vec rhs = Complex(1.2, 0.3) * alpha.amplitudes();
    CHECK((lhs - rhs).norm() < 1e-10);
}

TEST_CASE("operator flags") {
    CHECK(pauli_x().hermitian());
    CHECK(pauli_x().unitary());
    Mat m(2, 2);
    m << 1.0, 2.0, 2.0, -1.0;
    const OperatorMatrix om(m);
    CHECK(om.hermitian());
    CHECK_FALSE(om.unitary());
}
