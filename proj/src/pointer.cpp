#include "wvfield/pointer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "wvfield/fft.hpp"
#include "wvfield/io.hpp"
#include "wvfield/rng.hpp"
#include "wvfield/weak_values.hpp"

namespace wvf {

namespace {

constexpr double kDegeneratePost = 1e-14;

// Momentum values in FFT bin order for an N-point grid of spacing dx.
double momentum_of_bin(int j, int n, double dx, double hbar) {
    return hbar * 2.0 * M_PI * fft::freq_index(j, n) / (n * dx);
}

// |phi(p)|^2 on the ascending momentum axis; Parseval-normalized so that
// sum(density) * dp = sum |psi|^2 dx.
void momentum_density(const Vec& psi, double dx, double hbar, RealVec& axis,
                      RealVec& density, double& dp) {
    const int n = static_cast<int>(psi.size());
    const Vec hat = fft::forward(psi);
    dp = 2.0 * M_PI * hbar / (n * dx);
    axis.resize(n);
    density.resize(n);
    const double scale = dx * dx / (2.0 * M_PI * hbar);
    for (int m = 0; m < n; ++m) {
        const int j = (m + n / 2) % n;  // ascending order
        axis(m) = momentum_of_bin(j, n, dx, hbar);
        density(m) = scale * std::norm(hat(j));
    }
}

}  // namespace

PointerState::PointerState(RealVec grid, Vec amplitudes, double sigma,
                           Constants constants)
    : grid_(std::move(grid)),
      amps_(std::move(amplitudes)),
      sigma_(sigma),
      constants_(constants) {
    const int n = static_cast<int>(grid_.size());
    if (n < 2 || grid_.size() != amps_.size())
        throw DimensionError("PointerState: grid/amplitude size mismatch");
    if (!fft::is_power_of_two(n))
        throw Error("PointerState: n_points must be a power of two");
    if (!(sigma_ > 0.0)) throw Error("PointerState: sigma must be > 0");
    const double step = grid_(1) - grid_(0);
    for (int i = 1; i < n; ++i)
        if (std::abs(grid_(i) - grid_(i - 1) - step) > 1e-12 * std::abs(step))
            throw Error("PointerState: grid must be uniform");
    if (n * step < 16.0 * sigma_)
        throw Error("PointerState: grid must span at least 8 sigma each side");
    const double norm = amps_.squaredNorm() * step;
    if (std::abs(norm - 1.0) > 1e-10)
        throw Error("PointerState: Riemann-sum norm must be 1");
    constants_.validate();
}

PointerState make_gaussian_pointer(double sigma, int n_points,
                                   double span_sigmas, Constants constants) {
    if (!(sigma > 0.0)) throw Error("make_gaussian_pointer: sigma must be > 0");
    if (span_sigmas < 8.0)
        throw Error("make_gaussian_pointer: span must be >= 8 sigma");
    if (!fft::is_power_of_two(n_points))
        throw Error("make_gaussian_pointer: n_points must be a power of two");
    const double half = span_sigmas * sigma;
    const double dx = 2.0 * half / n_points;
    RealVec grid(n_points);
    Vec amps(n_points);
    for (int i = 0; i < n_points; ++i) {
        grid(i) = -half + (i + 0.5) * dx;
        amps(i) = std::exp(-grid(i) * grid(i) / (4.0 * sigma * sigma));
    }
    amps /= std::sqrt(amps.squaredNorm() * dx);
    return PointerState(std::move(grid), std::move(amps), sigma, constants);
}

void MeasurementScenario::validate() const {
    if (!observable.hermitian())
        throw Error("MeasurementScenario: observable must be Hermitian");
    if (observable.dim() > 64)
        throw DimensionError("MeasurementScenario: observable dim > 64");
    if (sys_pre.dim() != observable.dim() || sys_post.dim() != observable.dim())
        throw DimensionError("MeasurementScenario: system dim mismatch");
    if (!std::isfinite(g)) throw Error("MeasurementScenario: g not finite");
}

double ConditionalDistribution::mean() const {
    return (axis.array() * density.array()).sum() * step;
}

double ConditionalDistribution::variance() const {
    const double m = mean();
    return ((axis.array() - m).square() * density.array()).sum() * step;
}

ConditionalDistribution postselected_pointer_distribution(
    const MeasurementScenario& s, ReadoutBasis basis) {
    s.validate();
    const Vec pre = s.sys_pre.normalized().amplitudes();
    const Vec post = s.sys_post.normalized().amplitudes();

    Eigen::SelfAdjointEigenSolver<Mat> es(s.observable.entries());
    const RealVec& eigs = es.eigenvalues();
    const Mat& vecs = es.eigenvectors();

    const PointerState& ptr = s.pointer;
    const int n = ptr.n();
    const double dx = ptr.dx();
    const double hbar = ptr.constants().hbar;

    // Branch weights <F|k><k|I>; the pointer branch for eigenvalue a_k is the
    // initial state translated by g a_k, applied spectrally (exact for the
    // band-limited Gaussian).
    const int d = s.observable.dim();
    Vec weights(d);
    for (int k = 0; k < d; ++k) {
        const Vec evec = vecs.col(k);
        weights(k) = Complex(post.dot(evec)) * Complex(evec.dot(pre));
    }

    const Vec psi0_hat = fft::forward(ptr.amplitudes());
    Vec cond_hat(n);
    for (int j = 0; j < n; ++j) {
        const double kappa = 2.0 * M_PI * fft::freq_index(j, n) / (n * dx);
        Complex factor{0.0, 0.0};
        for (int k = 0; k < d; ++k)
            factor += weights(k) * std::exp(-kI * kappa * (s.g * eigs(k)));
        cond_hat(j) = psi0_hat(j) * factor;
    }
    const Vec psi_c = fft::backward(cond_hat);

    ConditionalDistribution dist;
    dist.p_post = psi_c.squaredNorm() * dx;
    if (dist.p_post < kDegeneratePost)
        throw OrthogonalityError(
            "postselected_pointer_distribution: degenerate post-selection");

    if (basis == ReadoutBasis::position) {
        dist.axis = ptr.grid();
        dist.step = dx;
        dist.density =
            (psi_c.array().abs2() / dist.p_post).matrix();
    } else {
        double dp = 0.0;
        momentum_density(psi_c, dx, hbar, dist.axis, dist.density, dp);
        dist.step = dp;
        dist.density /= dist.p_post;
    }
    return dist;
}

PointerStats pointer_statistics(const PointerState& pointer) {
    PointerStats st;
    st.hbar = pointer.constants().hbar;
    const double dx = pointer.dx();
    st.mean_x = (pointer.grid().array() *
                 pointer.amplitudes().array().abs2())
                    .sum() *
                dx;
    RealVec axis, density;
    double dp = 0.0;
    momentum_density(pointer.amplitudes(), dx, st.hbar, axis, density, dp);
    st.mean_p = (axis.array() * density.array()).sum() * dp;
    st.var_p =
        ((axis.array() - st.mean_p).square() * density.array()).sum() * dp;
    return st;
}

WeakEstimates weak_estimators(const MeasurementScenario& s) {
    s.validate();
    if (s.g == 0.0) throw Error("weak_estimators: g must be nonzero");
    const PointerStats st = pointer_statistics(s.pointer);

    Eigen::SelfAdjointEigenSolver<Mat> es(s.observable.entries());
    const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();

    WeakEstimates est;
    est.weakness_warning =
        std::abs(s.g) * max_eig >= s.pointer.sigma() / 4.0;

    const auto pos = postselected_pointer_distribution(s, ReadoutBasis::position);
    const auto mom = postselected_pointer_distribution(s, ReadoutBasis::momentum);
    est.re_est = (pos.mean() - st.mean_x) / s.g;
    est.im_est = st.hbar * (mom.mean() - st.mean_p) / (2.0 * s.g * st.var_p);
    return est;
}

namespace {

// Inverse-CDF sampler over a piecewise-constant density.
struct GridSampler {
    RealVec axis;
    RealVec cumulative;  // cumulative cell mass, last entry ~ 1
    double step;

    explicit GridSampler(const ConditionalDistribution& dist)
        : axis(dist.axis), cumulative(dist.density.size()), step(dist.step) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < dist.density.size(); ++i) {
            acc += dist.density(i) * step;
            cumulative(i) = acc;
        }
    }

    double draw(double u) const {
        const double target = u * cumulative(cumulative.size() - 1);
        const double* begin = cumulative.data();
        const double* end = begin + cumulative.size();
        const double* it = std::upper_bound(begin, end, target);
        const Eigen::Index i = std::min<Eigen::Index>(
            it - begin, cumulative.size() - 1);
        const double lo = i == 0 ? 0.0 : cumulative(i - 1);
        const double mass = cumulative(i) - lo;
        const double frac = mass > 0.0 ? (target - lo) / mass : 0.5;
        return axis(i) + (frac - 0.5) * step;
    }
};

}  // namespace

std::vector<ShotRecord> sample_shots(const MeasurementScenario& s,
                                     std::int64_t n_shots, std::uint64_t seed,
                                     ReadoutBasis basis) {
    if (n_shots < 1) throw Error("sample_shots: n_shots must be >= 1");
    const auto dist = postselected_pointer_distribution(s, basis);
    const GridSampler sampler(dist);
    std::vector<ShotRecord> records;
    records.reserve(static_cast<std::size_t>(n_shots));
    for (std::int64_t i = 0; i < n_shots; ++i) {
        SubstreamRng rng(seed, static_cast<std::uint64_t>(i));
        ShotRecord rec;
        rec.shot_index = i;
        rec.basis = basis;
        rec.passed = rng.next_double() < dist.p_post;
        if (rec.passed) rec.reading = sampler.draw(rng.next_double());
        records.push_back(rec);
    }
    return records;
}

ShotEstimates estimate_from_shots(const std::vector<ShotRecord>& records,
                                  double g, const PointerStats& stats) {
    if (g == 0.0) throw Error("estimate_from_shots: g must be nonzero");
    double sum_x = 0.0, sum_x2 = 0.0, sum_p = 0.0, sum_p2 = 0.0;
    std::int64_t nx = 0, np = 0;
    for (const auto& rec : records) {
        if (!rec.passed) continue;
        if (rec.basis == ReadoutBasis::position) {
            sum_x += rec.reading;
            sum_x2 += rec.reading * rec.reading;
            ++nx;
        } else {
            sum_p += rec.reading;
            sum_p2 += rec.reading * rec.reading;
            ++np;
        }
    }
    if (nx + np < 2)
        throw Error("estimate_from_shots: fewer than 2 passed shots");

    ShotEstimates est;
    est.n_passed_position = nx;
    est.n_passed_momentum = np;
    if (nx >= 2) {
        const double mean = sum_x / nx;
        const double var = (sum_x2 - nx * mean * mean) / (nx - 1);
        est.re_est = (mean - stats.mean_x) / g;
        est.stderr_re = std::sqrt(std::max(0.0, var) / nx) / std::abs(g);
    }
    if (np >= 2) {
        const double mean = sum_p / np;
        const double var = (sum_p2 - np * mean * mean) / (np - 1);
        const double scale = stats.hbar / (2.0 * g * stats.var_p);
        est.im_est = scale * (mean - stats.mean_p);
        est.stderr_im = std::abs(scale) * std::sqrt(std::max(0.0, var) / np);
    }
    return est;
}

void write_shot_records_csv(std::ostream& out,
                            const std::vector<ShotRecord>& records) {
    out << "shot_index,passed,basis,reading\n";
    for (const auto& rec : records) {
        out << rec.shot_index << ',' << (rec.passed ? 1 : 0) << ','
            << (rec.basis == ReadoutBasis::position ? "position" : "momentum")
            << ',';
        if (rec.passed) out << io::format_double(rec.reading);
        out << '\n';
    }
}

SplitCheckResult product_split_check(
    const StateVector& sys1_pre, const StateVector& sys1_post,
    const OperatorMatrix& h1, const StateVector& sys2_pre,
    const StateVector& sys2_post, const OperatorMatrix& h2, double fd_step,
    const Constants& constants) {
    if (!h1.hermitian() || !h2.hermitian())
        throw Error("product_split_check: H1, H2 must be Hermitian");

    const WeakValueResult w1 = weak_value(sys1_pre, sys1_post, h1);
    const WeakValueResult w2 = weak_value(sys2_pre, sys2_post, h2);
    if (!w1.conditioned || !w2.conditioned)
        throw OrthogonalityError(
            "product_split_check: orthogonal factor overlap");

    const double hbar = constants.hbar;
    SplitCheckResult res;
    res.rhs = (2.0 / hbar) * (w1.value.real() * w2.value.imag() +
                              w1.value.imag() * w2.value.real());

    const Vec pre =
        tensor(sys1_pre.normalized(), sys2_pre.normalized()).amplitudes();
    const Vec post =
        tensor(sys1_post.normalized(), sys2_post.normalized()).amplitudes();
    const Mat joint = tensor(h1, h2).entries();
    const auto ln_p = [&](double g) {
        const Mat kick = matrix_exponential(joint, -kI * g / hbar);
        const double p = std::norm(Complex(post.dot(kick * pre)));
        if (p <= 0.0)
            throw OrthogonalityError("product_split_check: p vanished");
        return std::log(p);
    };
    const double d1 = (ln_p(fd_step) - ln_p(-fd_step)) / (2.0 * fd_step);
    const double d2 = (ln_p(fd_step / 2) - ln_p(-fd_step / 2)) / fd_step;
    res.lhs = (4.0 * d2 - d1) / 3.0;
    return res;
}

}  // namespace wvf
