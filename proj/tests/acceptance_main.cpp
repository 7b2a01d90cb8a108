// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wvfield/effective_action.hpp"
#include "wvfield/linalg.hpp"
#include "wvfield/pointer.hpp"
#include "wvfield/rng.hpp"
#include "wvfield/wave_field.hpp"
#include "wvfield/weak_values.hpp"

using namespace wvf;

namespace {

namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Mat random_hermitian(int dim, SubstreamRng& rng) {
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            m(i, j) = Complex(rng.next_double() - 0.5, rng.next_double() - 0.5);
    return 0.5 * (m + Mat(m.adjoint()));
}

StateVector random_state(int dim, SubstreamRng& rng) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i)
        v(i) = Complex(rng.next_double() - 0.5, rng.next_double() - 0.5);
    return StateVector(v).normalized();
}

StateVector plus_state() {
    Vec v(2);
    v << M_SQRT1_2, M_SQRT1_2;
    return StateVector(v);
}

StateVector anomalous_post() {
    Vec v(2);
    v << std::cos(M_PI / 8.0), -std::sin(M_PI / 8.0);
    return StateVector(v);
}

StateVector circular_post() {
    Vec v(2);
    v << M_SQRT1_2, Complex(0.0, -M_SQRT1_2);
    return StateVector(v);
}

const double kAnomalous = 1.0 + M_SQRT2;

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(x.size());
    my /= double(y.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

// --- criterion 1: Schwinger identity ---------------------------------------

Outcome criterion_schwinger() {
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        SubstreamRng rng(4001, std::uint64_t(i));
        const int dim = 2 + int(rng.next_below(15));      // 2..16
        const int n_slices = 1 + int(rng.next_below(8));  // 1..8
        std::vector<OperatorMatrix> hams, dh;
        for (int k = 0; k < n_slices; ++k) {
            hams.emplace_back(random_hermitian(dim, rng));
            dh.emplace_back(random_hermitian(dim, rng));
        }
        TimeSlicedProcess process(hams, 0.2, OperatorMatrix::identity(dim));
        StateVector pre = random_state(dim, rng);
        StateVector post = random_state(dim, rng);
        while (std::abs(transition_amplitude(pre, post, process)) < 0.05)
            post = random_state(dim, rng);
        const Complex analytic = action_derivative(pre, post, process, dh);
        const auto amp = [&](double g) {
            return perturbed_amplitude(pre, post, process, g, dh);
        };
        const Complex d1 = (amp(1e-4) - amp(-1e-4)) / 2e-4;
        const Complex d2 = (amp(5e-5) - amp(-5e-5)) / 1e-4;
        const Complex fd = (4.0 * d2 - d1) / 3.0;
        worst = std::max(worst,
                         std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
    }
    std::ostringstream detail;
    detail << "25 random processes, max relative deviation " << worst;
    return {worst <= 1e-6, detail.str()};
}

// --- criterion 2: background field = weak value ------------------------------

Outcome criterion_background_field() {
    double worst = 0.0;
    int tested = 0;
    for (int i = 0; i < 20; ++i) {
        SubstreamRng rng(4002, std::uint64_t(i));
        const int dim = 2 + int(rng.next_below(7));  // 2..8
        const int n_slices = 2 + int(rng.next_below(5));
        std::vector<OperatorMatrix> hams;
        for (int k = 0; k < n_slices; ++k)
            hams.emplace_back(random_hermitian(dim, rng));
        TimeSlicedProcess process(hams, 0.25,
                                  OperatorMatrix(random_hermitian(dim, rng)));
        StateVector pre = random_state(dim, rng);
        StateVector post = random_state(dim, rng);
        while (std::abs(transition_amplitude(pre, post, process)) < 0.05)
            post = random_state(dim, rng);
        for (int probe = 0; probe < 2; ++probe) {
            const int slice = int(rng.next_below(std::uint64_t(n_slices)));
            const Complex fd = background_field(pre, post, process, slice);
            const Complex ins = insertion_weak_value(pre, post, process, slice);
            worst = std::max(worst, std::abs(fd - ins) /
                                        std::max(1.0, std::abs(ins)));
            ++tested;
        }
    }
    // truncated-Fock scenarios at n_max = 64
    const int n_max = 64;
    const Constants k;
    for (int i = 0; i < 5; ++i) {
        SubstreamRng rng(4102, std::uint64_t(i));
        const double omega = 0.7 + 0.3 * double(rng.next_below(3));
        const auto ops = truncated_fock_operators(n_max, omega, k);
        const Mat h =
            k.hbar * omega *
            (ops.number.entries() + 0.5 * Mat::Identity(n_max, n_max));
        const int n_slices = 4 + int(rng.next_below(5));
        const auto process = TimeSlicedProcess::uniform(
            OperatorMatrix(h), n_slices, 0.1 + 0.1 * rng.next_double(), ops.x,
            k);
        const Complex alpha(0.8 * (rng.next_double() - 0.5),
                            0.8 * (rng.next_double() - 0.5));
        const Complex beta(0.8 * (rng.next_double() - 0.5),
                           0.8 * (rng.next_double() - 0.5));
        const StateVector pre = coherent_state(alpha, n_max);
        const StateVector post = coherent_state(beta, n_max);
        for (int slice : {0, n_slices / 2, n_slices - 1}) {
            const Complex fd = background_field(pre, post, process, slice);
            const Complex ins = insertion_weak_value(pre, post, process, slice);
            worst = std::max(worst, std::abs(fd - ins) /
                                        std::max(1.0, std::abs(ins)));
            ++tested;
        }
    }
    std::ostringstream detail;
    detail << tested << " slice probes over 25 scenarios (incl. Fock n=64), "
           << "max deviation " << worst;
    return {worst <= 1e-6, detail.str()};
}

// --- criterion 3: log-probability slope ---------------------------------------------------

Outcome criterion_eq6() {
    // worked case: Im <sigma_z>_w = -1, so the slope is +2 at hbar = 1
    auto trivial = TimeSlicedProcess::uniform(
        OperatorMatrix(Mat::Zero(2, 2)), 1, 1.0, OperatorMatrix::identity(2));
    trivial.delta_coupling = true;
    const double worked =
        log_prob_derivative(plus_state(), circular_post(), trivial, pauli_z());
    if (std::abs(worked - 2.0) > 1e-12)
        return {false, "worked case slope != +2"};
    const double worked_fd = log_prob_derivative_fd(
        plus_state(), circular_post(), trivial, pauli_z());
    double worst = std::abs(worked - worked_fd);

    int tested = 1;
    for (int i = 0; tested < 50; ++i) {
        SubstreamRng rng(4003, std::uint64_t(i));
        const int dim = 2 << (i % 3);
        const int n_slices = 1 + int(rng.next_below(5));
        std::vector<OperatorMatrix> hams;
        for (int s = 0; s < n_slices; ++s)
            hams.emplace_back(random_hermitian(dim, rng));
        TimeSlicedProcess process(hams, 0.25, OperatorMatrix::identity(dim));
        process.delta_coupling = (i % 2 == 0);
        process.kick_position = int(rng.next_below(std::uint64_t(n_slices) + 1));
        const StateVector pre = random_state(dim, rng);
        const StateVector post = random_state(dim, rng);
        if (std::abs(transition_amplitude(pre, post, process)) < 0.05)
            continue;
        const OperatorMatrix pert(random_hermitian(dim, rng));
        const double analytic = log_prob_derivative(pre, post, process, pert);
        const double fd = log_prob_derivative_fd(pre, post, process, pert);
        worst = std::max(worst,
                         std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
        ++tested;
    }
    std::ostringstream detail;
    detail << "worked slope +2 and " << tested
           << " scenarios, max relative deviation " << worst;
    return {worst <= 1e-6, detail.str()};
}

// --- criterion 4: product split ---------------------------------------------------

Outcome criterion_eq7() {
    const auto fixture =
        product_split_check(plus_state(), anomalous_post(), pauli_z(),
                            plus_state(), circular_post(), pauli_z());
    if (std::abs(fixture.rhs - (-2.0 * kAnomalous)) > 1e-12)
        return {false, "fixture rhs != -2(1+sqrt 2)"};
    double worst = std::abs(fixture.lhs - fixture.rhs);

    int tested = 1;
    for (int i = 0; tested < 50; ++i) {
        SubstreamRng rng(4004, std::uint64_t(i));
        const int d1 = 2 + int(rng.next_below(2));  // 2 or 3
        const int d2 = 2 + int(rng.next_below(2));
        const OperatorMatrix h1(random_hermitian(d1, rng));
        const OperatorMatrix h2(random_hermitian(d2, rng));
        const StateVector pre1 = random_state(d1, rng);
        const StateVector pre2 = random_state(d2, rng);
        StateVector post1 = random_state(d1, rng);
        StateVector post2 = random_state(d2, rng);
        if (std::abs(inner(post1, pre1)) < 0.15 ||
            std::abs(inner(post2, pre2)) < 0.15)
            continue;
        const auto res = product_split_check(pre1, post1, h1, pre2, post2, h2);
        worst = std::max(worst, std::abs(res.lhs - res.rhs));
        ++tested;
    }
    std::ostringstream detail;
    detail << "fixture rhs = " << fixture.rhs << " and " << tested
           << " random product scenarios, max |lhs - rhs| = " << worst;
    return {worst <= 1e-5, detail.str()};
}

// --- criterion 5: two-point correlator ---------------------------------------

Outcome criterion_npoint() {
    double worst = 0.0;
    int tested = 0;
    for (int i = 0; tested < 10; ++i) {
        SubstreamRng rng(4005, std::uint64_t(i));
        const int dim = 2 + int(rng.next_below(3));  // 2..4
        const int n_slices = 3 + int(rng.next_below(4));
        std::vector<OperatorMatrix> hams;
        for (int s = 0; s < n_slices; ++s)
            hams.emplace_back(random_hermitian(dim, rng));
        TimeSlicedProcess process(hams, 0.25,
                                  OperatorMatrix(random_hermitian(dim, rng)));
        const StateVector pre = random_state(dim, rng);
        const StateVector post = random_state(dim, rng);
        if (std::abs(transition_amplitude(pre, post, process)) < 0.1) continue;
        const int ka = int(rng.next_below(std::uint64_t(n_slices) - 1));
        const int lb =
            ka + 1 + int(rng.next_below(std::uint64_t(n_slices - ka - 1)));
        const Complex nested = npoint_correlation(pre, post, process, {ka, lb});
        const Complex direct =
            double_insertion_weak_value(pre, post, process, ka, lb);
        worst = std::max(worst, std::abs(nested - direct) /
                                    std::max(1.0, std::abs(direct)));
        ++tested;
    }
    std::ostringstream detail;
    detail << tested << " scenarios, max deviation " << worst;
    return {worst <= 1e-5, detail.str()};
}

// --- criterion 6: weak-limit convergence -------------------------------------

Outcome criterion_weak_limit() {
    const double sigma = 1.0;
    const auto pointer = make_gaussian_pointer(sigma, 4096, 16.0);
    const std::vector<double> gs{sigma / 25.0, sigma / 50.0, sigma / 100.0,
                                 sigma / 200.0};

    std::vector<double> lg, lre, lim;
    double re_at_g100 = 0.0, im_at_g100 = 0.0;
    for (double g : gs) {
        const MeasurementScenario re_s{plus_state(), anomalous_post(),
                                       pauli_z(), pointer, g};
        const MeasurementScenario im_s{plus_state(), circular_post(),
                                       pauli_z(), pointer, g};
        const auto re_est = weak_estimators(re_s);
        const auto im_est = weak_estimators(im_s);
        lg.push_back(std::log(g));
        lre.push_back(std::log(std::abs(re_est.re_est - kAnomalous)));
        lim.push_back(std::log(std::abs(im_est.im_est - (-1.0))));
        if (g == sigma / 100.0) {
            re_at_g100 = re_est.re_est;
            im_at_g100 = im_est.im_est;
        }
    }
    const double slope_re = fit_slope(lg, lre);
    const double slope_im = fit_slope(lg, lim);
    const bool anomalous_ok =
        std::abs(re_at_g100 - kAnomalous) <= 0.01 * kAnomalous;
    const bool imag_ok = std::abs(im_at_g100 - (-1.0)) <= 0.01;

    std::ostringstream detail;
    detail << "orders re " << slope_re << ", im " << slope_im
           << "; estimates at g = sigma/100: re " << re_at_g100 << ", im "
           << im_at_g100;
    return {slope_re >= 1.9 && slope_im >= 1.9 && anomalous_ok && imag_ok,
            detail.str()};
}

// --- criterion 7: Monte Carlo soundness --------------------------------------

Outcome criterion_monte_carlo() {
    const double sigma = 1.0, g = sigma / 100.0;
    const auto pointer = make_gaussian_pointer(sigma, 2048, 12.0);
    const MeasurementScenario re_s{plus_state(), anomalous_post(), pauli_z(),
                                   pointer, g};
    const MeasurementScenario im_s{plus_state(), circular_post(), pauli_z(),
                                   pointer, g};
    const auto exact_re = weak_estimators(re_s);
    const auto exact_im = weak_estimators(im_s);
    const PointerStats stats = pointer_statistics(pointer);

    const auto recs = sample_shots(re_s, 100000, 7001, ReadoutBasis::position);
    const auto momentum_recs =
        sample_shots(im_s, 100000, 7002, ReadoutBasis::momentum);
    const auto est_re = estimate_from_shots(recs, g, stats);
    const auto est_im = estimate_from_shots(momentum_recs, g, stats);
    const bool re_ok =
        std::abs(est_re.re_est - exact_re.re_est) <= 3.0 * est_re.stderr_re;
    const bool im_ok =
        std::abs(est_im.im_est - exact_im.im_est) <= 3.0 * est_im.stderr_im;

    // stderr halves per 4x shots (within 20%)
    std::vector<double> errs;
    for (std::int64_t n : {25000, 100000, 400000}) {
        const auto r = sample_shots(re_s, n, 7003, ReadoutBasis::position);
        errs.push_back(estimate_from_shots(r, g, stats).stderr_re);
    }
    const double r1 = errs[1] / errs[0];
    const double r2 = errs[2] / errs[1];
    const bool scaling_ok = r1 >= 0.4 && r1 <= 0.6 && r2 >= 0.4 && r2 <= 0.6;

    std::ostringstream detail;
    detail << "re " << est_re.re_est << " +- " << est_re.stderr_re << " (exact "
           << exact_re.re_est << "), im " << est_im.im_est << " +- "
           << est_im.stderr_im << " (exact " << exact_im.im_est
           << "), stderr ratios " << r1 << ", " << r2;
    return {re_ok && im_ok && scaling_ok, detail.str()};
}

// --- criterion 8: weak map vs classical probes --------------------------------------

Outcome criterion_kocsis() {
    TwoSlitParams p;
    p.slit_separation = 4.0;
    p.slit_width = 0.3;
    p.propagation_time = 1.0;
    p.n_nodes = 1024;
    p.half_width = 16.0;
    p.n_frames = 600;
    const auto frames = two_slit_scenario(p);
    const WaveField& field = frames.back();
    const MomentumField local = local_momentum(field);

    // probe vs weak map at 10 matched dim windows
    const int cross_nodes = 3;
    const auto windows = choose_probe_windows(field, 10, cross_nodes);
    std::vector<double> positions;
    for (const auto& w : windows)
        positions.push_back(field.x_at(w.first) +
                            0.5 * (cross_nodes - 1) * field.dx());

    const auto probes = classical_probe_sample(
        field, positions, cross_nodes * field.dx(), 1000000, 8001);
    WeakMapOptions opts;
    opts.g = 0.01;
    const auto map = weak_momentum_map(field, windows, 40000000, 8002, opts);

    int agree = 0;
    double worst_sigma = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (probes[i].empty || !map.valid[i]) continue;
        const double combined =
            std::sqrt(probes[i].stderr_p * probes[i].stderr_p +
                      map.stderr_p[i] * map.stderr_p[i]);
        const double dist =
            std::abs(probes[i].mean_p - map.mean_p[i]) / combined;
        worst_sigma = std::max(worst_sigma, dist);
        if (dist <= 3.0) ++agree;
    }

    // streamlines: non-crossing, endpoint histogram vs final intensity
    std::vector<MomentumField> maps;
    maps.reserve(frames.size());
    for (const auto& f : frames) maps.push_back(local_momentum(f));
    const WaveField& initial = frames.front();
    RealVec cum = initial.amplitudes().array().abs2() * initial.dx();
    for (Eigen::Index i = 1; i < cum.size(); ++i) cum(i) += cum(i - 1);
    std::vector<std::pair<double, double>> seeds;
    const int n_seeds = 1000;
    for (int i = 0; i < n_seeds; ++i) {
        const double target = (i + 0.5) / n_seeds * cum(cum.size() - 1);
        const double* it =
            std::upper_bound(cum.data(), cum.data() + cum.size(), target);
        const Eigen::Index cell =
            std::min<Eigen::Index>(it - cum.data(), cum.size() - 1);
        const double lo = cell == 0 ? 0.0 : cum(cell - 1);
        const double frac = (target - lo) / std::max(cum(cell) - lo, 1e-300);
        seeds.emplace_back(
            initial.x_at(int(cell)) + (frac - 0.5) * initial.dx(), 0.0);
    }
    const double frame_dt = p.propagation_time / p.n_frames;
    const auto trajectories = streamlines(maps, seeds, frame_dt, 1.0, 4);
    const int crossings = count_crossings(trajectories);

    const int tv_bins = 50;
    const double x_lo = field.x_at(0), x_hi = field.x_at(field.nx() - 1);
    std::vector<double> h(tv_bins, 0.0), q(tv_bins, 0.0);
    int counted = 0;
    for (const auto& t : trajectories) {
        if (t.truncated) continue;
        int b = int((t.x.back() - x_lo) / (x_hi - x_lo) * tv_bins);
        b = std::clamp(b, 0, tv_bins - 1);
        h[b] += 1.0;
        ++counted;
    }
    const RealVec fmass = field.amplitudes().array().abs2() * field.dx();
    double total = 0.0;
    for (int i = 0; i < field.nx(); ++i) {
        int b = int((field.x_at(i) - x_lo) / (x_hi - x_lo) * tv_bins);
        b = std::clamp(b, 0, tv_bins - 1);
        q[b] += fmass(i);
        total += fmass(i);
    }
    double tv = 0.0;
    for (int b = 0; b < tv_bins; ++b)
        tv += std::abs(h[b] / std::max(counted, 1) - q[b] / total);
    tv *= 0.5;

    std::ostringstream detail;
    detail << agree << "/10 probes within combined 3 sigma (worst "
           << worst_sigma << "), crossings " << crossings << ", endpoint TV "
           << tv;
    return {agree == 10 && crossings == 0 && tv <= 0.05, detail.str()};
}

// --- criterion 9: direct state reconstruction -------------------------------

Outcome criterion_lundeen() {
    const int n = 64;
    const double half = 6.0, sigma = 1.5, chirp = 0.1;
    const double dx = 2.0 * half / n;
    Vec psi(n);
    for (int i = 0; i < n; ++i) {
        const double x = -half + (i + 0.5) * dx;
        psi(i) = std::exp(-x * x / (2.0 * sigma * sigma)) *
                 std::exp(kI * chirp * x * x);
    }
    const WaveField field =
        WaveField::line(n, dx, -half + 0.5 * dx, std::move(psi)).normalized();

    const auto exact = direct_state_measurement(field, 0.0);
    const bool exact_ok = exact.fidelity >= 1.0 - 1e-12;

    // as specified: 64 nodes, 1e5 shots/node, small coupling
    const auto simulated = direct_state_measurement(field, 0.3, 100000, 9001);
    const bool simulated_ok = simulated.fidelity > 0.999;

    // supplementary convergence evidence at larger budgets
    const auto more = direct_state_measurement(field, 0.5, 4000000, 9002);
    const auto most = direct_state_measurement(field, 0.5, 40000000, 9003);

    std::ostringstream detail;
    detail << "exact fidelity " << exact.fidelity
           << "; ancilla fidelity at 1e5 shots/node (g = 0.3): "
           << simulated.fidelity << " [estimator converges: " << more.fidelity
           << " at 4e6 and " << most.fidelity
           << " at 4e7 shots/node, g = 0.5]";
    return {exact_ok && simulated_ok, detail.str()};
}

// --- criterion 10: classicality of the weak trajectory -------------------------

Outcome criterion_classicality() {
    const int n_max = 64;
    const double dt = 1e-3, t_total = 0.5;
    const int n_sites = int(std::round(t_total / dt)) + 1;
    std::vector<double> times(n_sites);
    for (int i = 0; i < n_sites; ++i) times[i] = i * dt;
    const StateVector pre = coherent_state(Complex(0.1, 0.05), n_max);
    const StateVector post = coherent_state(Complex(0.07, -0.04), n_max);

    double worst_residual = 0.0, worst_dev = 0.0;
    for (double omega : {0.0, 0.8}) {
        const auto xw = weak_trajectory(pre, post, omega, times, n_max);
        const LatticeAction action(n_sites, dt, 1.0, omega);
        worst_residual =
            std::max(worst_residual, classicality_check(xw, action));
        const LatticePath extremal =
            solve_boundary_value(action, xw.front(), xw.back());
        for (int i = 0; i < n_sites; ++i)
            worst_dev = std::max(worst_dev, std::abs(xw[i] - extremal[i]));
    }
    std::ostringstream detail;
    detail << "free + harmonic: max EL residual " << worst_residual
           << ", max deviation from the extremal path " << worst_dev;
    return {worst_residual < 1e-8 && worst_dev < 1e-8, detail.str()};
}

// --- criterion 11: variational solver ------------------------------------------

Outcome criterion_variational() {
    SubstreamRng rng(4011, 0);
    const int n = 12;
    Vec source(n), path_v(n);
    for (int i = 0; i < n; ++i) {
        source(i) = Complex(rng.next_double() - 0.5, 0.2 * rng.next_double());
        path_v(i) = Complex(rng.next_double() - 0.5, rng.next_double() - 0.5);
    }
    const LatticeAction a(n, 0.07, 1.4, 0.9, source);
    const LatticePath path(path_v);
    const Vec r = el_residual(a, path);
    double grad_err = 0.0;
    for (int k = 1; k + 1 < n; ++k) {
        Vec up = path_v, dn = path_v;
        up(k) += 1e-4;
        dn(k) -= 1e-4;
        const Complex grad = (action_value(a, LatticePath(up)) -
                              action_value(a, LatticePath(dn))) /
                             2e-4;
        grad_err = std::max(grad_err, std::abs(grad / a.dt - r(k - 1)));
    }

    const double omega = 1.1, T = 1.0;
    std::vector<double> lg, le;
    std::vector<double> bvp_err;
    for (int sites : {101, 201, 401}) {
        const double dt = T / (sites - 1);
        const LatticeAction h(sites, dt, 1.0, omega);
        Vec v(sites);
        for (int k = 0; k < sites; ++k)
            v(k) = std::sin(omega * k * dt) / std::sin(omega * T);
        lg.push_back(std::log(dt));
        le.push_back(
            std::log(el_residual(h, LatticePath(v)).cwiseAbs().maxCoeff()));
        const LatticePath solved = solve_boundary_value(h, 0.0, 1.0);
        double err = 0.0;
        for (int k = 0; k < sites; ++k)
            err = std::max(err, std::abs(solved[k] - v(k)));
        bvp_err.push_back(err);
    }
    const double order = fit_slope(lg, le);
    const bool converging =
        bvp_err[1] < bvp_err[0] / 3.0 && bvp_err[2] < bvp_err[1] / 3.0;

    std::ostringstream detail;
    detail << "gradient deviation " << grad_err << ", residual order " << order
           << ", harmonic BVP errors " << bvp_err[0] << " -> " << bvp_err[1]
           << " -> " << bvp_err[2];
    return {grad_err <= 1e-8 && order >= 1.9 && order <= 2.1 && converging,
            detail.str()};
}

// --- criterion 12: Legendre consistency ------------------------------------------

Outcome criterion_legendre() {
    Mat h(2, 2);
    h << 0.4, Complex(0.2, 0.1), Complex(0.2, -0.1), -0.3;
    double worst_exact = 0.0, worst_path = 0.0, worst_dwdj = 0.0;
    for (int slices : {4, 8}) {
        const auto process = TimeSlicedProcess::uniform(OperatorMatrix(h),
                                                        slices, 0.3, pauli_z());
        Vec pre_v(2), post_v(2);
        pre_v << Complex(0.8, 0.1), Complex(0.5, -0.2);
        post_v << Complex(0.3, -0.4), Complex(0.7, 0.2);
        const auto res =
            legendre_check(StateVector(pre_v).normalized(),
                           StateVector(post_v).normalized(), process, 0.1);
        worst_exact = std::max(worst_exact, res.exactness_error);
        worst_path = std::max(worst_path, res.path_dependence);
        worst_dwdj = std::max(worst_dwdj, res.dw_dj_error);
    }
    std::ostringstream detail;
    detail << "dW/dJ deviation " << worst_dwdj << ", path dependence "
           << worst_path << ", exactness " << worst_exact;
    return {worst_dwdj <= 1e-6 && worst_path <= 1e-5 && worst_exact <= 1e-5,
            detail.str()};
}

// --- criterion 13: CLI reproducibility ---------------------------------------

std::string find_cli() {
    if (const char* env = std::getenv("WVFIELD_CLI"); env && *env) return env;
    for (const char* candidate : {"./wvfield", "../wvfield", "build/wvfield"})
        if (fs::exists(candidate)) return candidate;
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Outcome criterion_reproducibility() {
    const std::string cli = find_cli();
    if (cli.empty()) return {false, "CLI binary not found (set WVFIELD_CLI)"};

    const std::vector<std::pair<std::string, std::string>> configs = {
        {"weak_value", ""},
        {"eq6_check", ""},
        {"eq7_check", ""},
        {"schwinger_check", "n_scenarios = 5\nmax_dim = 6\n"},
        {"background_field", "n_max = 32\nslices = 0,2\nn_slices = 4\n"},
        {"npoint", ""},
        {"pointer_mc", "n_shots = 2000\nn_points = 512\n"},
        {"two_slit_streamlines",
         "n_nodes = 512\nhalf_width = 8\npropagation_time = 0.6\n"
         "n_frames = 240\nn_seeds = 300\ntv_bins = 32\n"},
        {"probe_vs_weak",
         "n_probes = 4\nprobe_shots = 100000\nmap_shots = 400000\n"},
        {"direct_state", "mode = ancilla\nshots_per_node = 2000\n"},
        {"weak_trajectory", "t_total = 0.1\nn_max = 32\n"},
        {"legendre_check", ""},
    };

    const fs::path work = fs::temp_directory_path() / "wvfield_acceptance_cli";
    fs::remove_all(work);
    fs::create_directories(work);

    int checked = 0;
    for (const auto& [kind, extra] : configs) {
        const fs::path cfg = work / (kind + ".cfg");
        {
            std::ofstream out(cfg);
            out << "[scenario]\nkind = " << kind << "\nseed = 42\n\n[params]\n"
                << extra;
        }
        const fs::path dir_a = work / (kind + "_a");
        const fs::path dir_b = work / (kind + "_b");
        for (const fs::path& dir : {dir_a, dir_b}) {
            std::ostringstream cmd;
            cmd << cli << " run " << cfg << " --out-dir " << dir
                << " >/dev/null 2>&1";
            const int rc = std::system(cmd.str().c_str());
            const int exit_code = WEXITSTATUS(rc);
            if (exit_code != 0)
                return {false,
                        kind + ": CLI exit code " + std::to_string(exit_code)};
        }
        for (const auto& entry : fs::directory_iterator(dir_a)) {
            const std::string name = entry.path().filename().string();
            if (name == "manifest.json") continue;  // carries timestamps
            if (slurp(entry.path()) != slurp(dir_b / name))
                return {false, kind + ": " + name + " differs between runs"};
            ++checked;
        }
    }
    std::ostringstream detail;
    detail << configs.size() << " scenario kinds, " << checked
           << " output files byte-identical across repeated runs";
    return {true, detail.str()};
}

struct Criterion {
    int id;
    std::string label;
    std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    const std::vector<Criterion> criteria = {
        {1, "Schwinger identity (action derivative vs finite difference)",
         criterion_schwinger},
        {2, "background field equals the operator-insertion weak value",
         criterion_background_field},
        {3, "log-probability derivative matches d ln p / dg", criterion_eq6},
        {4, "product-state split of the joint weak value", criterion_eq7},
        {5, "two-point correlator vs direct time-ordered insertion",
         criterion_npoint},
        {6, "pointer estimators converge at second order in g",
         criterion_weak_limit},
        {7, "Monte Carlo estimators are sound and scale as 1/sqrt(n)",
         criterion_monte_carlo},
        {8, "weak map and classical probes agree on the two-slit field",
         criterion_kocsis},
        {9, "direct state reconstruction (exact and ancilla-simulated)",
         criterion_lundeen},
        {10, "weak-valued trajectory satisfies the classical equations",
         criterion_classicality},
        {11, "variational solver: gradient, order, and convergence",
         criterion_variational},
        {12, "Legendre transform consistency on small source lattices",
         criterion_legendre},
        {13, "CLI runs are byte-reproducible for every scenario kind",
         criterion_reproducibility},
    };

    int failed = 0;
    const auto suite_start = std::chrono::steady_clock::now();
    for (const auto& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion "
                  << criterion.id << ": " << criterion.label << " -- "
                  << outcome.detail << " (" << std::fixed
                  << std::setprecision(1) << seconds << " s)\n"
                  << std::defaultfloat << std::setprecision(6);
        failed += !outcome.pass;
    }
    const double total = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - suite_start)
                             .count();
    std::cout << (failed == 0 ? "all criteria passed" : "criteria failed")
              << " (total " << std::fixed << std::setprecision(1) << total
              << " s)\n";
    return failed;
}
