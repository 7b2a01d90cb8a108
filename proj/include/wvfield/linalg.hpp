#ifndef WVFIELD_LINALG_HPP
#define WVFIELD_LINALG_HPP

#include <string>
#include <utility>

#include "wvfield/types.hpp"

namespace wvf {

// Complex amplitudes over a labeled finite basis (system, pointer,
// polarization, or truncated Fock).
class StateVector {
  public:
    explicit StateVector(Vec amplitudes, std::string basis_label = "");

    int dim() const { return static_cast<int>(amps_.size()); }
    const Vec& amplitudes() const { return amps_; }
    const std::string& basis_label() const { return label_; }

    double norm() const { return amps_.norm(); }
    StateVector normalized() const;

    Complex operator[](int i) const { return amps_(i); }

  private:
    Vec amps_;
    std::string label_;
};

// Dense complex matrix with Hermiticity/unitarity checked once at
// construction and cached as flags.
class OperatorMatrix {
  public:
    explicit OperatorMatrix(Mat entries);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Mat& entries() const { return m_; }
    bool hermitian() const { return hermitian_; }
    bool unitary() const { return unitary_; }

    StateVector apply(const StateVector& v) const;

    static OperatorMatrix identity(int dim);

  private:
    Mat m_;
    bool hermitian_ = false;
    bool unitary_ = false;
};

// <bra|ket>, conjugate-linear in the first argument.
Complex inner(const StateVector& bra, const StateVector& ket);

// Kronecker products, a-major ordering: index(i,j) = i*dim(b) + j.
StateVector tensor(const StateVector& a, const StateVector& b);
OperatorMatrix tensor(const OperatorMatrix& a, const OperatorMatrix& b);

// exp(-i H t / hbar) |state>. H must be Hermitian.
StateVector evolve(const StateVector& state, const OperatorMatrix& h, double t,
                   const Constants& k = Constants());

// exp(scale * M). Eigendecomposition for Hermitian M, scaling-and-squaring
// otherwise. Dimension capped.
OperatorMatrix matrix_exponential(const OperatorMatrix& m, Complex scale,
                                  int dim_cap = 4096);
Mat matrix_exponential(const Mat& m, Complex scale, int dim_cap = 4096);

struct FockOperators {
    OperatorMatrix a;       // annihilation, sqrt(n) superdiagonal
    OperatorMatrix a_dag;   // creation
    OperatorMatrix x;       // sqrt(hbar/2 m omega) (a + a^dag)
    OperatorMatrix p;       // i sqrt(hbar m omega / 2) (a^dag - a)
    OperatorMatrix number;  // a^dag a
};

// Mode operators on the lowest n_max Fock levels; [x,p] = i hbar holds on the
// first n_max-1 levels.
FockOperators truncated_fock_operators(int n_max, double omega,
                                       const Constants& k = Constants());

// Coherent state |alpha> truncated to n_max levels, renormalized.
// tail_mass (optional out) receives the probability weight beyond the cut.
StateVector coherent_state(Complex alpha, int n_max,
                           double* tail_mass = nullptr);

// Convenience 2x2 blocks used throughout the test scenarios.
OperatorMatrix pauli_x();
OperatorMatrix pauli_y();
OperatorMatrix pauli_z();
StateVector basis_state(int dim, int index);

}  // namespace wvf

#endif
