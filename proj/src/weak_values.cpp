#include "wvfield/weak_values.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Eigenvalues>

namespace wvf {

namespace {

constexpr double kAmplitudeFloor = 1e-14;

// Diagonalized Hermitian generator; apply(v, theta) = exp(i theta G) v.
struct KickOperator {
    Mat vectors;
    RealVec eigenvalues;

    explicit KickOperator(const Mat& generator) {
        Eigen::SelfAdjointEigenSolver<Mat> es(generator);
        vectors = es.eigenvectors();
        eigenvalues = es.eigenvalues();
    }

    Vec apply(const Vec& v, double theta) const {
        Vec w = vectors.adjoint() * v;
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w(i) *= std::exp(kI * theta * eigenvalues(i));
        return vectors * w;
    }
};

// Normalized boundary states, slice unitaries, and the forward/backward
// partial evolutions everything in this module is assembled from.
class Workspace {
  public:
    Workspace(const StateVector& pre, const StateVector& post,
              const TimeSlicedProcess& process)
        : process_(process) {
        const int n = process.n_slices();
        if (pre.dim() != process.dim() || post.dim() != process.dim())
            throw DimensionError("weak-values: state/process dim mismatch");
        const Vec pre_n = pre.normalized().amplitudes();
        const Vec post_n = post.normalized().amplitudes();

        const Complex scale = -kI * process.dt() / process.constants().hbar;
        if (process.uniform_hamiltonian()) {
            unitaries_.push_back(
                matrix_exponential(process.hamiltonians().front().entries(),
                                   scale));
        } else {
            unitaries_.reserve(n);
            for (const auto& h : process.hamiltonians())
                unitaries_.push_back(matrix_exponential(h.entries(), scale));
        }

        fwd_.resize(n + 1);
        bwd_.resize(n + 1);
        fwd_[0] = pre_n;
        for (int k = 0; k < n; ++k) fwd_[k + 1] = u(k) * fwd_[k];
        bwd_[n] = post_n;
        for (int k = n - 1; k >= 0; --k) bwd_[k] = u(k).adjoint() * bwd_[k + 1];
    }

    const Mat& u(int k) const {
        return unitaries_[process_.uniform_hamiltonian() ? 0 : k];
    }

    // U_{c-1}..U_0 |pre>.
    const Vec& fwd(int c) const { return fwd_[c]; }
    // (U_{N-1}..U_c)^dag |post>, so <post| U_{N-1}..U_c = bwd(c)^dag.
    const Vec& bwd(int c) const { return bwd_[c]; }

    Complex amplitude() const { return bwd_[0].dot(fwd_[0]); }

    // <F| U_(N-1..c) X U_(c-1..0) |I> with X inserted after c unitaries.
    Complex inserted(const Mat& x, int c) const {
        return bwd_[c].dot(x * fwd_[c]);
    }

    // Amplitude with source kicks exp(+i J_k phi dt / hbar) after each
    // listed slice. J given densely over slices.
    Complex source_amplitude(const std::vector<double>& j_dense,
                             const KickOperator& phi) const {
        int first = -1, last = -1;
        for (int k = 0; k < static_cast<int>(j_dense.size()); ++k) {
            if (j_dense[k] != 0.0) {
                if (first < 0) first = k;
                last = k;
            }
        }
        if (first < 0) return amplitude();
        const double dt_over_hbar =
            process_.dt() / process_.constants().hbar;
        Vec v = phi.apply(fwd(first + 1), j_dense[first] * dt_over_hbar);
        for (int k = first + 1; k <= last; ++k) {
            v = u(k) * v;
            if (j_dense[k] != 0.0)
                v = phi.apply(v, j_dense[k] * dt_over_hbar);
        }
        return bwd(last + 1).dot(v);
    }

    const TimeSlicedProcess& process() const { return process_; }

  private:
    const TimeSlicedProcess& process_;
    std::vector<Mat> unitaries_;
    std::vector<Vec> fwd_;
    std::vector<Vec> bwd_;
};

std::vector<double> dense_source(const SourceConfig& source, int n_slices) {
    std::vector<double> j(n_slices, 0.0);
    for (std::size_t i = 0; i < source.j_values.size(); ++i)
        j[source.slice_indices[i]] += source.j_values[i];
    return j;
}

// W = -i hbar ln(a) with the phase unwrapped along a straight path from
// J = 0; a(s) evaluated by the caller-provided functor.
template <typename AmpFn>
Complex unwrapped_log_functional(AmpFn&& amp_at, double hbar,
                                 int max_substeps) {
    Complex prev = amp_at(0.0);
    if (std::abs(prev) < kAmplitudeFloor)
        throw BranchError("generating functional: amplitude vanishes at J=0");
    double theta = std::arg(prev);
    Complex a = prev;
    for (int i = 1; i <= max_substeps; ++i) {
        a = amp_at(double(i) / max_substeps);
        if (std::abs(a) < kAmplitudeFloor)
            throw BranchError(
                "generating functional: amplitude vanishes on the unwrapping "
                "path");
        const double step = std::arg(a / prev);
        if (std::abs(step) > 1.5)
            throw BranchError(
                "generating functional: phase step too large for reliable "
                "unwrapping");
        theta += step;
        prev = a;
    }
    return hbar * theta - kI * hbar * std::log(std::abs(a));
}

void require_slice_in_range(int slice_k, const TimeSlicedProcess& process) {
    if (slice_k < 0 || slice_k >= process.n_slices())
        throw DimensionError("slice index out of range");
}

}  // namespace

TimeSlicedProcess::TimeSlicedProcess(std::vector<OperatorMatrix> hamiltonians,
                                     double dt, OperatorMatrix source_operator,
                                     Constants constants)
    : hams_(std::move(hamiltonians)),
      dt_(dt),
      source_op_(std::move(source_operator)),
      constants_(constants) {
    if (hams_.empty())
        throw Error("TimeSlicedProcess: at least one slice required");
    if (!(dt_ > 0.0)) throw Error("TimeSlicedProcess: dt must be > 0");
    const int d = hams_.front().dim();
    for (const auto& h : hams_) {
        if (!h.hermitian())
            throw Error("TimeSlicedProcess: non-Hermitian slice Hamiltonian");
        if (h.dim() != d)
            throw DimensionError("TimeSlicedProcess: slice dim mismatch");
    }
    if (source_op_.dim() != d)
        throw DimensionError("TimeSlicedProcess: source operator dim mismatch");
    if (!source_op_.hermitian())
        throw Error("TimeSlicedProcess: source operator must be Hermitian");
    constants_.validate();
}

TimeSlicedProcess TimeSlicedProcess::uniform(
    const OperatorMatrix& h, int n_slices, double dt,
    const OperatorMatrix& source_operator, Constants constants) {
    if (n_slices < 1) throw Error("TimeSlicedProcess: n_slices must be >= 1");
    TimeSlicedProcess p(std::vector<OperatorMatrix>(n_slices, h), dt,
                        source_operator, constants);
    p.uniform_ = true;
    return p;
}

SourceConfig::SourceConfig(std::vector<double> values,
                           std::vector<int> indices)
    : j_values(std::move(values)), slice_indices(std::move(indices)) {
    if (j_values.size() != slice_indices.size())
        throw Error("SourceConfig: values/indices length mismatch");
}

void SourceConfig::validate_for(const TimeSlicedProcess& process) const {
    if (j_values.size() != slice_indices.size())
        throw Error("SourceConfig: values/indices length mismatch");
    std::set<int> seen;
    for (std::size_t i = 0; i < j_values.size(); ++i) {
        if (!std::isfinite(j_values[i]))
            throw Error("SourceConfig: non-finite source value");
        const int k = slice_indices[i];
        if (k < 0 || k >= process.n_slices())
            throw DimensionError("SourceConfig: slice index out of range");
        if (!seen.insert(k).second)
            throw Error("SourceConfig: duplicate slice index");
    }
}

WeakValueResult weak_value(const StateVector& pre, const StateVector& post,
                           const OperatorMatrix& a, double threshold) {
    if (pre.dim() != post.dim() || pre.dim() != a.dim())
        throw DimensionError("weak_value: dimension mismatch");
    const Vec pre_n = pre.normalized().amplitudes();
    const Vec post_n = post.normalized().amplitudes();
    WeakValueResult result;
    const Complex overlap = post_n.dot(pre_n);
    result.overlap_mag = std::abs(overlap);
    result.conditioned = result.overlap_mag >= threshold;
    if (!result.conditioned) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        result.value = Complex(nan, nan);
        return result;
    }
    result.value = post_n.dot(a.entries() * pre_n) / overlap;
    return result;
}

Complex transition_amplitude(const StateVector& pre, const StateVector& post,
                             const TimeSlicedProcess& process) {
    return Workspace(pre, post, process).amplitude();
}

Complex perturbed_amplitude(const StateVector& pre, const StateVector& post,
                            const TimeSlicedProcess& process, double g,
                            const OperatorMatrix& perturbation) {
    if (!perturbation.hermitian())
        throw Error("perturbed_amplitude: perturbation must be Hermitian");
    if (perturbation.dim() != process.dim())
        throw DimensionError("perturbed_amplitude: dimension mismatch");
    if (!std::isfinite(g)) throw Error("perturbed_amplitude: g not finite");

    Workspace ws(pre, post, process);
    const double hbar = process.constants().hbar;
    const KickOperator kick(perturbation.entries());
    if (process.delta_coupling) {
        const int c = process.kick_position;
        if (c < 0 || c > process.n_slices())
            throw DimensionError("perturbed_amplitude: kick position");
        return ws.bwd(c).dot(kick.apply(ws.fwd(c), g / hbar));
    }
    Vec v = ws.fwd(0);
    for (int k = 0; k < process.n_slices(); ++k) {
        v = ws.u(k) * v;
        v = kick.apply(v, g * process.dt() / hbar);
    }
    return ws.bwd(process.n_slices()).dot(v);
}

Complex perturbed_amplitude(const StateVector& pre, const StateVector& post,
                            const TimeSlicedProcess& process, double g,
                            const std::vector<OperatorMatrix>& dh_dg) {
    if (static_cast<int>(dh_dg.size()) != process.n_slices())
        throw DimensionError("perturbed_amplitude: one dH per slice required");
    Workspace ws(pre, post, process);
    const double hbar = process.constants().hbar;
    Vec v = ws.fwd(0);
    for (int k = 0; k < process.n_slices(); ++k) {
        if (dh_dg[k].dim() != process.dim())
            throw DimensionError("perturbed_amplitude: dH dim mismatch");
        v = ws.u(k) * v;
        if (g != 0.0) {
            const KickOperator kick(dh_dg[k].entries());
            v = kick.apply(v, -g * process.dt() / hbar);
        }
    }
    return ws.bwd(process.n_slices()).dot(v);
}

double postselect_probability(const StateVector& pre, const StateVector& post,
                              const TimeSlicedProcess& process, double g,
                              const OperatorMatrix& perturbation) {
    const Complex a = perturbed_amplitude(pre, post, process, g, perturbation);
    return std::norm(a);
}

double log_prob_derivative(const StateVector& pre, const StateVector& post,
                           const TimeSlicedProcess& process,
                           const OperatorMatrix& perturbation) {
    if (!perturbation.hermitian())
        throw Error("log_prob_derivative: perturbation must be Hermitian");
    Workspace ws(pre, post, process);
    const Complex a = ws.amplitude();
    if (std::abs(a) < kOrthogonalityThreshold)
        throw OrthogonalityError(
            "log_prob_derivative: pre/post orthogonal under the unperturbed "
            "process");
    const double hbar = process.constants().hbar;
    if (process.delta_coupling) {
        const Complex ins =
            ws.inserted(perturbation.entries(), process.kick_position);
        return -(2.0 / hbar) * std::imag(ins / a);
    }
    double sum = 0.0;
    for (int k = 0; k < process.n_slices(); ++k)
        sum += std::imag(ws.inserted(perturbation.entries(), k + 1) / a);
    return -(2.0 / hbar) * process.dt() * sum;
}

double log_prob_derivative_fd(const StateVector& pre, const StateVector& post,
                              const TimeSlicedProcess& process,
                              const OperatorMatrix& perturbation,
                              double step) {
    const auto ln_p = [&](double g) {
        const double p = postselect_probability(pre, post, process, g,
                                                perturbation);
        if (p <= 0.0)
            throw OrthogonalityError(
                "log_prob_derivative_fd: probability vanished at finite g");
        return std::log(p);
    };
    const double d1 = (ln_p(step) - ln_p(-step)) / (2.0 * step);
    const double d2 = (ln_p(step / 2) - ln_p(-step / 2)) / step;
    return (4.0 * d2 - d1) / 3.0;
}

Complex action_derivative(const StateVector& pre, const StateVector& post,
                          const TimeSlicedProcess& process,
                          const std::vector<OperatorMatrix>& dh_dg) {
    if (static_cast<int>(dh_dg.size()) != process.n_slices())
        throw DimensionError("action_derivative: one dH per slice required");
    Workspace ws(pre, post, process);
    const double hbar = process.constants().hbar;
    Complex sum{0.0, 0.0};
    for (int k = 0; k < process.n_slices(); ++k) {
        if (dh_dg[k].dim() != process.dim())
            throw DimensionError("action_derivative: dH dim mismatch");
        // dS_k = -dH_k dt, inserted after slice k.
        sum += ws.inserted(-process.dt() * dh_dg[k].entries(), k + 1);
    }
    return kI / hbar * sum;
}

Complex generating_functional(const StateVector& pre, const StateVector& post,
                              const TimeSlicedProcess& process,
                              const SourceConfig& source, int max_substeps) {
    source.validate_for(process);
    Workspace ws(pre, post, process);
    const KickOperator phi(process.source_operator().entries());
    const std::vector<double> j = dense_source(source, process.n_slices());
    const auto amp_at = [&](double s) {
        std::vector<double> scaled(j.size());
        for (std::size_t k = 0; k < j.size(); ++k) scaled[k] = s * j[k];
        return ws.source_amplitude(scaled, phi);
    };
    return unwrapped_log_functional(amp_at, process.constants().hbar,
                                    max_substeps);
}

namespace {

// W[J] with a shared workspace, for the finite-difference stencils below.
Complex w_of(const Workspace& ws, const KickOperator& phi,
             const std::vector<double>& j_dense, double hbar,
             int max_substeps = 64) {
    const auto amp_at = [&](double s) {
        std::vector<double> scaled(j_dense.size());
        for (std::size_t k = 0; k < j_dense.size(); ++k)
            scaled[k] = s * j_dense[k];
        return ws.source_amplitude(scaled, phi);
    };
    return unwrapped_log_functional(amp_at, hbar, max_substeps);
}

double fd_step_for(const std::vector<double>& j_dense) {
    double scale = 1.0;
    for (double v : j_dense) scale = std::max(scale, std::abs(v));
    return 1e-4 * scale;
}

}  // namespace

Complex background_field(const StateVector& pre, const StateVector& post,
                         const TimeSlicedProcess& process, int slice_k,
                         const SourceConfig& base) {
    require_slice_in_range(slice_k, process);
    base.validate_for(process);
    Workspace ws(pre, post, process);
    const KickOperator phi(process.source_operator().entries());
    const double hbar = process.constants().hbar;
    std::vector<double> j = dense_source(base, process.n_slices());
    const double eps = fd_step_for(j);

    const auto w_shift = [&](double delta) {
        std::vector<double> shifted = j;
        shifted[slice_k] += delta;
        return w_of(ws, phi, shifted, hbar);
    };
    const Complex d1 = (w_shift(eps) - w_shift(-eps)) / (2.0 * eps);
    const Complex d2 = (w_shift(eps / 2) - w_shift(-eps / 2)) / eps;
    return (4.0 * d2 - d1) / 3.0 / process.dt();
}

Complex insertion_weak_value(const StateVector& pre, const StateVector& post,
                             const TimeSlicedProcess& process, int slice_k) {
    require_slice_in_range(slice_k, process);
    Workspace ws(pre, post, process);
    const Complex a = ws.amplitude();
    if (std::abs(a) < kOrthogonalityThreshold)
        throw OrthogonalityError("insertion_weak_value: orthogonal boundary");
    return ws.inserted(process.source_operator().entries(), slice_k + 1) / a;
}

Complex double_insertion_weak_value(const StateVector& pre,
                                    const StateVector& post,
                                    const TimeSlicedProcess& process,
                                    int slice_k, int slice_l) {
    require_slice_in_range(slice_k, process);
    require_slice_in_range(slice_l, process);
    if (slice_k >= slice_l)
        throw Error("double_insertion_weak_value: slices must be ordered");
    Workspace ws(pre, post, process);
    const Complex a = ws.amplitude();
    if (std::abs(a) < kOrthogonalityThreshold)
        throw OrthogonalityError(
            "double_insertion_weak_value: orthogonal boundary");
    const Mat& phi = process.source_operator().entries();
    Vec v = phi * ws.fwd(slice_k + 1);
    for (int k = slice_k + 1; k <= slice_l; ++k) v = ws.u(k) * v;
    v = phi * v;
    return ws.bwd(slice_l + 1).dot(v) / a;
}

Complex npoint_correlation(const StateVector& pre, const StateVector& post,
                           const TimeSlicedProcess& process,
                           const std::vector<int>& slices) {
    if (slices.empty() || slices.size() > 2)
        throw Error("npoint_correlation: only n in {1, 2} supported");
    if (!std::is_sorted(slices.begin(), slices.end()))
        throw Error("npoint_correlation: slices must be sorted");
    for (int k : slices) require_slice_in_range(k, process);
    if (slices.size() == 1)
        return background_field(pre, post, process, slices[0]);
    if (slices[0] == slices[1])
        throw Error(
            "npoint_correlation: equal-time double insertion not defined; "
            "use distinct slices");

    Workspace ws(pre, post, process);
    const KickOperator phi(process.source_operator().entries());
    const double hbar = process.constants().hbar;
    std::vector<double> j(process.n_slices(), 0.0);
    // larger base step than the first-derivative stencil: the mixed second
    // difference divides by eps^2, so roundoff needs more headroom; one
    // Richardson level still removes the leading truncation term
    const double eps = 1e-3;

    // Z = exp(iW/hbar) evaluated through W so the branch machinery is the
    // one being exercised.
    const auto z_at = [&](double dk, double dl) {
        std::vector<double> shifted = j;
        shifted[slices[0]] += dk;
        shifted[slices[1]] += dl;
        return std::exp(kI * w_of(ws, phi, shifted, hbar) / hbar);
    };
    const auto mixed = [&](double e) {
        return (z_at(e, e) - z_at(e, -e) - z_at(-e, e) + z_at(-e, -e)) /
               (4.0 * e * e);
    };
    const Complex m1 = mixed(eps);
    const Complex m2 = mixed(eps / 2);
    const Complex mixed_r = (4.0 * m2 - m1) / 3.0;
    const Complex z0 = z_at(0.0, 0.0);
    const double dt = process.dt();
    return (-kI * hbar) * (-kI * hbar) * mixed_r / (dt * dt * z0);
}

Complex coherent_background(Complex alpha, const StateVector& post,
                            int n_max) {
    double tail = 0.0;
    const StateVector pre = coherent_state(alpha, n_max, &tail);
    if (tail >= 1e-10)
        throw TruncationError(
            "coherent_background: coherent-state tail mass beyond n_max "
            "exceeds 1e-10");
    Mat a = Mat::Zero(n_max, n_max);
    for (int n = 1; n < n_max; ++n) a(n - 1, n) = std::sqrt(double(n));
    const WeakValueResult wv = weak_value(pre, post, OperatorMatrix(a));
    if (!wv.conditioned)
        throw OrthogonalityError("coherent_background: orthogonal post");
    return wv.value;
}

}  // namespace wvf
