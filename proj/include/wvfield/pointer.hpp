#ifndef WVFIELD_POINTER_HPP
#define WVFIELD_POINTER_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wvfield/linalg.hpp"
#include "wvfield/types.hpp"

namespace wvf {

// Continuous detector degree of freedom on a uniform grid. n_points is a
// power of two so the momentum representation is a plain DFT.
class PointerState {
  public:
    PointerState(RealVec grid, Vec amplitudes, double sigma,
                 Constants constants = Constants());

    int n() const { return static_cast<int>(grid_.size()); }
    double dx() const { return grid_(1) - grid_(0); }
    const RealVec& grid() const { return grid_; }
    const Vec& amplitudes() const { return amps_; }
    double sigma() const { return sigma_; }
    const Constants& constants() const { return constants_; }

  private:
    RealVec grid_;
    Vec amps_;
    double sigma_;
    Constants constants_;
};

// Initial Gaussian of position variance sigma^2, centered on a symmetric
// grid spanning span_sigmas standard deviations each side.
PointerState make_gaussian_pointer(double sigma, int n_points,
                                   double span_sigmas = 10.0,
                                   Constants constants = Constants());

struct MeasurementScenario {
    StateVector sys_pre;
    StateVector sys_post;
    OperatorMatrix observable;  // Hermitian, dim <= 64
    PointerState pointer;
    double g = 0.0;  // impulsive coupling exp(-i g A x p_pointer / hbar)

    void validate() const;
};

enum class ReadoutBasis { position, momentum };

// Normalized conditional pointer density after post-selection, plus the
// post-selection success probability.
struct ConditionalDistribution {
    RealVec axis;     // ascending position or momentum values
    RealVec density;  // sum(density) * step = 1
    double p_post = 0.0;
    double step = 0.0;

    double mean() const;
    double variance() const;
};

ConditionalDistribution postselected_pointer_distribution(
    const MeasurementScenario& s, ReadoutBasis basis = ReadoutBasis::position);

// Initial-pointer moments used by the weak-value estimators; the momentum
// variance comes from the discrete Fourier representation of the same grid.
struct PointerStats {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double var_p = 0.0;
    double hbar = 1.0;
};

PointerStats pointer_statistics(const PointerState& pointer);

struct WeakEstimates {
    double re_est = 0.0;
    double im_est = 0.0;
    bool weakness_warning = false;  // g max|a_k| >= sigma/4
};

// Exact-distribution estimators: conditional mean shifts divided by the
// coupling, converging to Re/Im of the weak value as g -> 0.
WeakEstimates weak_estimators(const MeasurementScenario& s);

struct ShotRecord {
    std::int64_t shot_index = 0;
    bool passed = false;
    ReadoutBasis basis = ReadoutBasis::position;
    double reading = 0.0;  // valid iff passed
};

// Monte Carlo shots from the exact conditional density. Shot i uses the
// substream (seed, i), so any partitioning across workers reproduces the
// same records.
std::vector<ShotRecord> sample_shots(const MeasurementScenario& s,
                                     std::int64_t n_shots, std::uint64_t seed,
                                     ReadoutBasis basis);

struct ShotEstimates {
    double re_est = 0.0;
    double im_est = 0.0;
    double stderr_re = 0.0;
    double stderr_im = 0.0;
    std::int64_t n_passed_position = 0;
    std::int64_t n_passed_momentum = 0;
};

// Plug-in sample versions of weak_estimators with standard errors.
ShotEstimates estimate_from_shots(const std::vector<ShotRecord>& records,
                                  double g, const PointerStats& stats);

// CSV export, columns: shot_index, passed, basis, reading.
void write_shot_records_csv(std::ostream& out,
                            const std::vector<ShotRecord>& records);

struct SplitCheckResult {
    double lhs = 0.0;  // finite difference of ln p(g) at g = 0
    double rhs = 0.0;  // (2/hbar)[Re H1w Im H2w + Im H1w Re H2w]
};

// Product-state split of the joint imaginary weak value for the kick
// exp(-i g H1 x H2 / hbar). fd_step is the Richardson base step.
SplitCheckResult product_split_check(
    const StateVector& sys1_pre, const StateVector& sys1_post,
    const OperatorMatrix& h1, const StateVector& sys2_pre,
    const StateVector& sys2_post, const OperatorMatrix& h2,
    double fd_step = 1e-4, const Constants& constants = Constants());

}  // namespace wvf

#endif
