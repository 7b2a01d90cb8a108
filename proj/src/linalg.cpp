#include "wvfield/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace wvf {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kUnitaryTol = 1e-10;

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

StateVector::StateVector(Vec amplitudes, std::string basis_label)
    : amps_(std::move(amplitudes)), label_(std::move(basis_label)) {
    if (amps_.size() < 1)
        throw DimensionError("StateVector: dim must be >= 1");
}

StateVector StateVector::normalized() const {
    const double n = norm();
    if (n == 0.0) throw Error("StateVector: cannot normalize zero vector");
    return StateVector(amps_ / n, label_);
}

OperatorMatrix::OperatorMatrix(Mat entries) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1)
        throw DimensionError("OperatorMatrix: matrix must be square, dim >= 1");
    hermitian_ = max_abs(m_ - m_.adjoint()) <= kHermitianTol;
    unitary_ =
        max_abs(m_.adjoint() * m_ - Mat::Identity(m_.rows(), m_.cols())) <=
        kUnitaryTol;
}

StateVector OperatorMatrix::apply(const StateVector& v) const {
    if (v.dim() != dim())
        throw DimensionError("OperatorMatrix::apply: dimension mismatch");
    return StateVector(m_ * v.amplitudes(), v.basis_label());
}

OperatorMatrix OperatorMatrix::identity(int dim) {
    return OperatorMatrix(Mat::Identity(dim, dim));
}

Complex inner(const StateVector& bra, const StateVector& ket) {
    if (bra.dim() != ket.dim())
        throw DimensionError("inner: dimension mismatch");
    return bra.amplitudes().dot(ket.amplitudes());  // Eigen dot conjugates lhs
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    const int da = a.dim(), db = b.dim();
    Vec out(static_cast<Eigen::Index>(da) * db);
    for (int i = 0; i < da; ++i)
        out.segment(static_cast<Eigen::Index>(i) * db, db) =
            a.amplitudes()(i) * b.amplitudes();
    return StateVector(std::move(out));
}

OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b) {
    const int da = a.dim(), db = b.dim();
    Mat out(static_cast<Eigen::Index>(da) * db,
            static_cast<Eigen::Index>(da) * db);
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j)
            out.block(static_cast<Eigen::Index>(i) * db,
                      static_cast<Eigen::Index>(j) * db, db, db) =
                a.entries()(i, j) * b.entries();
    return OperatorMatrix(std::move(out));
}

StateVector evolve(const StateVector& state, const OperatorMatrix& h, double t,
                   const Constants& k) {
    if (!h.hermitian()) throw Error("evolve: Hamiltonian must be Hermitian");
    if (state.dim() != h.dim())
        throw DimensionError("evolve: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Mat> es(h.entries());
    const Vec phases =
        (-kI * t / k.hbar * es.eigenvalues().array()).exp().matrix();
    const Vec in_eig = es.eigenvectors().adjoint() * state.amplitudes();
    return StateVector(es.eigenvectors() * phases.cwiseProduct(in_eig),
                       state.basis_label());
}

Mat matrix_exponential(const Mat& m, Complex scale, int dim_cap) {
    if (m.rows() > dim_cap)
        throw DimensionError("matrix_exponential: dimension cap exceeded");
    const bool herm = (m - m.adjoint()).cwiseAbs().maxCoeff() <= kHermitianTol;
    if (herm) {
        Eigen::SelfAdjointEigenSolver<Mat> es(m);
        const Vec phases =
            (scale * es.eigenvalues().array().cast<Complex>()).exp().matrix();
        return es.eigenvectors() * phases.asDiagonal() *
               es.eigenvectors().adjoint();
    }
    return Mat(scale * m).exp();
}

OperatorMatrix matrix_exponential(const OperatorMatrix& m, Complex scale,
                                  int dim_cap) {
    return OperatorMatrix(matrix_exponential(m.entries(), scale, dim_cap));
}

FockOperators truncated_fock_operators(int n_max, double omega,
                                       const Constants& k) {
    if (n_max < 2) throw Error("truncated_fock_operators: n_max must be >= 2");
    if (!(omega > 0.0))
        throw Error("truncated_fock_operators: omega must be > 0");
    Mat a = Mat::Zero(n_max, n_max);
    for (int n = 1; n < n_max; ++n) a(n - 1, n) = std::sqrt(double(n));
    const Mat a_dag = a.adjoint();
    const double x0 = std::sqrt(k.hbar / (2.0 * k.mass * omega));
    const double p0 = std::sqrt(k.hbar * k.mass * omega / 2.0);
    return FockOperators{
        OperatorMatrix(a),
        OperatorMatrix(a_dag),
        OperatorMatrix(x0 * (a + a_dag)),
        OperatorMatrix(kI * p0 * (a_dag - a)),
        OperatorMatrix(a_dag * a),
    };
}

StateVector coherent_state(Complex alpha, int n_max, double* tail_mass) {
    if (n_max < 1) throw Error("coherent_state: n_max must be >= 1");
    Vec amps(n_max);
    // c_n = exp(-|a|^2/2) a^n / sqrt(n!), built recursively.
    Complex c = std::exp(-0.5 * std::norm(alpha));
    double kept = 0.0;
    for (int n = 0; n < n_max; ++n) {
        amps(n) = c;
        kept += std::norm(c);
        c *= alpha / std::sqrt(double(n + 1));
    }
    if (tail_mass) *tail_mass = std::max(0.0, 1.0 - kept);
    return StateVector(std::move(amps), "fock").normalized();
}

OperatorMatrix pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return OperatorMatrix(m);
}

OperatorMatrix pauli_y() {
    Mat m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return OperatorMatrix(m);
}

OperatorMatrix pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return OperatorMatrix(m);
}

StateVector basis_state(int dim, int index) {
    if (index < 0 || index >= dim) throw DimensionError("basis_state: index");
    Vec v = Vec::Zero(dim);
    v(index) = 1.0;
    return StateVector(std::move(v));
}

}  // namespace wvf
