#ifndef WVFIELD_EFFECTIVE_ACTION_HPP
#define WVFIELD_EFFECTIVE_ACTION_HPP

#include <iosfwd>
#include <vector>

#include "wvfield/linalg.hpp"
#include "wvfield/types.hpp"
#include "wvfield/weak_values.hpp"

namespace wvf {

// Time lattice for L = (m/2) phidot^2 - (m omega^2/2) phi^2 + J phi.
struct LatticeAction {
    int n_sites = 0;   // >= 3 so interior Euler-Lagrange equations exist
    double dt = 0.0;   // > 0
    double mass = 1.0;
    double omega = 0.0;  // 0 = free particle
    Vec source;          // J_k per site; empty means J = 0

    LatticeAction(int n_sites_, double dt_, double mass_, double omega_,
                  Vec source_ = Vec());
    Complex source_at(int k) const {
        return source.size() ? source(k) : Complex(0.0, 0.0);
    }
};

// Field values on the lattice; the first and last entries are boundary data
// and are never modified by any solver.
class LatticePath {
  public:
    explicit LatticePath(Vec values);
    int n_sites() const { return static_cast<int>(values_.size()); }
    const Vec& values() const { return values_; }
    Complex operator[](int k) const { return values_(k); }

  private:
    Vec values_;
};

// S = sum_k dt [ (m/2)((phi_{k+1}-phi_k)/dt)^2 - (m w^2/2) phi_k^2
//              + J_k phi_k ], complex-analytic in the field values.
Complex action_value(const LatticeAction& a, const LatticePath& path);

// Interior residuals r_k = -m (phi_{k+1}-2phi_k+phi_{k-1})/dt^2
//                        - m w^2 phi_k + J_k; dS/dphi_k = dt * r_k.
Vec el_residual(const LatticeAction& a, const LatticePath& path);

// Direct tridiagonal solve of r_k = 0 with the given boundary values.
// Pivots are monitored; a vanishing pivot means omega*T sits at a discrete
// resonance of the two-point boundary problem.
LatticePath solve_boundary_value(const LatticeAction& a, Complex phi_initial,
                                 Complex phi_final);

// x_w(t) = <F| x_H(t) |I> / <F|I> on the truncated Fock space, with the
// post state given in the Heisenberg picture (fixed boundary data, as in
// the figure: at the final surface it corresponds to U(T)|F>).
// omega = 0 selects the free Hamiltonian p^2/2m expressed in the ladder
// basis of reference frequency basis_omega.
struct WeakTrajectoryOptions {
    double basis_omega = 1.0;
    bool verify_truncation = true;  // recompute at 2 n_max, require < 1e-8
    double overlap_threshold = kOrthogonalityThreshold;
};

std::vector<Complex> weak_trajectory(const StateVector& pre,
                                     const StateVector& post, double omega,
                                     const std::vector<double>& times,
                                     int n_max,
                                     const Constants& constants = Constants(),
                                     const WeakTrajectoryOptions& options = {});

// Max interior Euler-Lagrange residual of the trajectory treated as a
// lattice path with its own endpoints as boundary data. Requires J = 0.
double classicality_check(const std::vector<Complex>& x_w,
                          const LatticeAction& a);

// Everything the Legendre-transform verification measures on a small
// (<= 8 slice) source lattice.
struct LegendreCheckResult {
    double dw_dj_error = 0.0;        // |dW/dJ_k - phi_k| worst case
    double exactness_error = 0.0;    // |Delta W - int phi dJ dt| worst path
    double path_dependence = 0.0;    // two path orderings compared
    double gamma_residual = 0.0;     // |Delta Gamma + int J dphi dt|
    double max_deviation = 0.0;
};

LegendreCheckResult legendre_check(const StateVector& pre,
                                   const StateVector& post,
                                   const TimeSlicedProcess& process,
                                   double j_scale = 0.1);

// CSV export: t, re_phi, im_phi, residual (residual blank at boundaries).
void write_trajectory_csv(std::ostream& out, const std::vector<double>& times,
                          const std::vector<Complex>& values,
                          const LatticeAction& a);

}  // namespace wvf

#endif
