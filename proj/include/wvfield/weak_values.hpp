#ifndef WVFIELD_WEAK_VALUES_HPP
#define WVFIELD_WEAK_VALUES_HPP

#include <vector>

#include "wvfield/linalg.hpp"
#include "wvfield/types.hpp"

namespace wvf {

// Complex conditioned average <F|A|I>/<F|I> plus conditioning metadata.
// conditioned == false means the pre/post overlap sits below the
// orthogonality threshold; value is then NaN, never a silent huge number.
struct WeakValueResult {
    Complex value{0.0, 0.0};
    double overlap_mag = 0.0;
    bool conditioned = false;
};

// Sliced evolution between the initial and final hypersurfaces: one Hermitian
// Hamiltonian per slice, uniform step dt, and the operator the source couples
// to.
//
// Coupling conventions, fixed once for the whole module:
//  * Sources and perturbations enter in Lagrangian form H -> H - lambda*Op,
//    realized as a unitary kick exp(+i lambda Op dt_eff / hbar) inserted
//    immediately after a slice's own evolution (dt_eff = dt per slice, or 1
//    for a delta-time kick). The action variation is dS = +lambda*Op*dt_eff,
//    so d(ln p)/d(lambda) = -(2/hbar) Im <Op>_w * dt_eff.
//  * Slice k's source insertion therefore sits at time (k+1)*dt, i.e. after
//    k+1 slice unitaries. kick_position counts slice unitaries applied
//    before a delta kick (0 = at the initial surface, n_slices = at the
//    final one).
class TimeSlicedProcess {
  public:
    TimeSlicedProcess(std::vector<OperatorMatrix> hamiltonians, double dt,
                      OperatorMatrix source_operator,
                      Constants constants = Constants());

    // All slices share one Hamiltonian; the slice unitary is computed once.
    static TimeSlicedProcess uniform(const OperatorMatrix& h, int n_slices,
                                     double dt,
                                     const OperatorMatrix& source_operator,
                                     Constants constants = Constants());

    int n_slices() const { return static_cast<int>(hams_.size()); }
    int dim() const { return hams_.front().dim(); }
    double dt() const { return dt_; }
    const std::vector<OperatorMatrix>& hamiltonians() const { return hams_; }
    const OperatorMatrix& source_operator() const { return source_op_; }
    const Constants& constants() const { return constants_; }
    bool uniform_hamiltonian() const { return uniform_; }

    bool delta_coupling = false;  // perturbation acts as a single kick
    int kick_position = 0;        // slice unitaries applied before the kick

  private:
    std::vector<OperatorMatrix> hams_;
    double dt_;
    OperatorMatrix source_op_;
    Constants constants_;
    bool uniform_ = false;
};

// Lattice source J: value j_values[i] attached to slice slice_indices[i].
struct SourceConfig {
    std::vector<double> j_values;
    std::vector<int> slice_indices;

    SourceConfig() = default;
    SourceConfig(std::vector<double> values, std::vector<int> indices);
    bool empty() const { return j_values.empty(); }
    void validate_for(const TimeSlicedProcess& process) const;
};

inline constexpr double kOrthogonalityThreshold = 1e-12;

WeakValueResult weak_value(const StateVector& pre, const StateVector& post,
                           const OperatorMatrix& a,
                           double threshold = kOrthogonalityThreshold);

// Normalized transition amplitude <F|U|I> for the unperturbed process.
Complex transition_amplitude(const StateVector& pre, const StateVector& post,
                             const TimeSlicedProcess& process);

// Amplitude with the Lagrangian-form perturbation H -> H - g*P switched on
// (per-slice kicks, or a single kick when the process flags delta coupling).
Complex perturbed_amplitude(const StateVector& pre, const StateVector& post,
                            const TimeSlicedProcess& process, double g,
                            const OperatorMatrix& perturbation);

// Amplitude with Hamiltonian-variation kicks exp(-i g dH_k dt / hbar), one
// per slice; the finite-difference oracle for action_derivative.
Complex perturbed_amplitude(const StateVector& pre, const StateVector& post,
                            const TimeSlicedProcess& process, double g,
                            const std::vector<OperatorMatrix>& dh_dg);

// p(g) = |<F|I>_g|^2 for the Lagrangian-form perturbation above.
double postselect_probability(const StateVector& pre, const StateVector& post,
                              const TimeSlicedProcess& process, double g,
                              const OperatorMatrix& perturbation);

// Analytic d(ln p)/dg at g = 0: -(2/hbar) Im of the time-ordered insertion
// weak value of the perturbation, times dt (or 1 for a delta kick).
double log_prob_derivative(const StateVector& pre, const StateVector& post,
                           const TimeSlicedProcess& process,
                           const OperatorMatrix& perturbation);

// Companion check: Richardson-extrapolated central difference of ln p(g).
double log_prob_derivative_fd(const StateVector& pre, const StateVector& post,
                              const TimeSlicedProcess& process,
                              const OperatorMatrix& perturbation,
                              double step = 1e-4);

// d<F|I>_g/dg at g = 0 as the time-ordered sum of action-variation
// insertions dS_k = -dH_dg[k]*dt.
Complex action_derivative(const StateVector& pre, const StateVector& post,
                          const TimeSlicedProcess& process,
                          const std::vector<OperatorMatrix>& dh_dg);

// W[J] = -i hbar ln <F|I>_J with the branch tracked continuously along a
// straight path from J = 0 (at most max_substeps unwrapping steps).
Complex generating_functional(const StateVector& pre, const StateVector& post,
                              const TimeSlicedProcess& process,
                              const SourceConfig& source,
                              int max_substeps = 64);

// dW/dJ_k / dt by Richardson central differences around the base source;
// equals the weak value of the Heisenberg field operator at slice k.
Complex background_field(const StateVector& pre, const StateVector& post,
                         const TimeSlicedProcess& process, int slice_k,
                         const SourceConfig& base = SourceConfig());

// Operator-insertion route for the same quantity (the cross-check that
// the source derivative must reproduce):
// <F| U_{N-1..k+1} phi U_{k..0} |I> / <F|U|I>.
Complex insertion_weak_value(const StateVector& pre, const StateVector& post,
                             const TimeSlicedProcess& process, int slice_k);

// Time-ordered double insertion at slices k < l over the bare amplitude.
Complex double_insertion_weak_value(const StateVector& pre,
                                    const StateVector& post,
                                    const TimeSlicedProcess& process,
                                    int slice_k, int slice_l);

// n-point correlator (n <= 2) via the nested finite-difference form
// exp(-iW/hbar) (-i hbar d/dJ)^n exp(+iW/hbar).
Complex npoint_correlation(const StateVector& pre, const StateVector& post,
                           const TimeSlicedProcess& process,
                           const std::vector<int>& slices);

// Weak value of the annihilation operator with pre = |alpha> truncated at
// n_max: equals alpha for any non-orthogonal post-selection.
Complex coherent_background(Complex alpha, const StateVector& post, int n_max);

}  // namespace wvf

#endif
