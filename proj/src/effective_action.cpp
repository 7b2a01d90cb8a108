#include "wvfield/effective_action.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "wvfield/io.hpp"

namespace wvf {

LatticeAction::LatticeAction(int n_sites_, double dt_, double mass_,
                             double omega_, Vec source_)
    : n_sites(n_sites_),
      dt(dt_),
      mass(mass_),
      omega(omega_),
      source(std::move(source_)) {
    if (n_sites < 3) throw Error("LatticeAction: n_sites must be >= 3");
    if (!(dt > 0.0)) throw Error("LatticeAction: dt must be > 0");
    if (!(mass > 0.0)) throw Error("LatticeAction: mass must be > 0");
    if (omega < 0.0) throw Error("LatticeAction: omega must be >= 0");
    if (dt * omega >= 0.5)
        throw Error("LatticeAction: dt * omega must be < 0.5");
    if (source.size() != 0 && source.size() != n_sites)
        throw DimensionError("LatticeAction: source length mismatch");
}

LatticePath::LatticePath(Vec values) : values_(std::move(values)) {
    if (values_.size() < 3)
        throw DimensionError("LatticePath: need at least 3 sites");
}

Complex action_value(const LatticeAction& a, const LatticePath& path) {
    if (path.n_sites() != a.n_sites)
        throw DimensionError("action_value: path length mismatch");
    Complex s{0.0, 0.0};
    const double w2 = a.omega * a.omega;
    for (int k = 0; k + 1 < a.n_sites; ++k) {
        const Complex vel = (path[k + 1] - path[k]) / a.dt;
        s += a.dt * (0.5 * a.mass * vel * vel -
                     0.5 * a.mass * w2 * path[k] * path[k] +
                     a.source_at(k) * path[k]);
    }
    return s;
}

Vec el_residual(const LatticeAction& a, const LatticePath& path) {
    if (path.n_sites() != a.n_sites)
        throw DimensionError("el_residual: path length mismatch");
    Vec r(a.n_sites - 2);
    const double w2 = a.omega * a.omega;
    for (int k = 1; k + 1 < a.n_sites; ++k) {
        r(k - 1) = -a.mass * (path[k + 1] - 2.0 * path[k] + path[k - 1]) /
                       (a.dt * a.dt) -
                   a.mass * w2 * path[k] + a.source_at(k);
    }
    return r;
}

LatticePath solve_boundary_value(const LatticeAction& a, Complex phi_initial,
                                 Complex phi_final) {
    const int m = a.n_sites - 2;  // interior unknowns
    const double diag = 2.0 * a.mass / (a.dt * a.dt) -
                        a.mass * a.omega * a.omega;
    const double off = -a.mass / (a.dt * a.dt);
    const double pivot_floor = 1e-12 * (std::abs(diag) + 2.0 * std::abs(off));

    // Thomas solve of  off*phi_{k-1} + diag*phi_k + off*phi_{k+1} = -J_k.
    Vec rhs(m);
    for (int k = 0; k < m; ++k) rhs(k) = -a.source_at(k + 1);
    rhs(0) -= off * phi_initial;
    rhs(m - 1) -= off * phi_final;

    RealVec c_prime(m);
    Vec d_prime(m);
    double denom = diag;
    const auto check_pivot = [&](double d) {
        if (std::abs(d) < pivot_floor) {
            std::ostringstream msg;
            msg << "solve_boundary_value: singular system, omega*T = "
                << a.omega * a.dt * (a.n_sites - 1)
                << " sits at a discrete resonance";
            throw ResonanceError(msg.str());
        }
    };
    check_pivot(denom);
    c_prime(0) = off / denom;
    d_prime(0) = rhs(0) / denom;
    for (int k = 1; k < m; ++k) {
        denom = diag - off * c_prime(k - 1);
        check_pivot(denom);
        c_prime(k) = off / denom;
        d_prime(k) = (rhs(k) - off * d_prime(k - 1)) / denom;
    }

    Vec values(a.n_sites);
    values(0) = phi_initial;
    values(a.n_sites - 1) = phi_final;
    values(m) = d_prime(m - 1);
    for (int k = m - 2; k >= 0; --k)
        values(k + 1) = d_prime(k) - c_prime(k) * values(k + 2);
    return LatticePath(std::move(values));
}

namespace {

// H and x in the truncated ladder basis; omega = 0 means the free particle
// expressed at reference frequency basis_omega.
void build_fock_system(double omega, int n_max, const Constants& constants,
                       double basis_omega, Mat& h, Mat& x) {
    const double wb = omega > 0.0 ? omega : basis_omega;
    const FockOperators ops = truncated_fock_operators(n_max, wb, constants);
    x = ops.x.entries();
    if (omega > 0.0) {
        h = constants.hbar * omega *
            (ops.number.entries() +
             0.5 * Mat::Identity(n_max, n_max));
    } else {
        h = ops.p.entries() * ops.p.entries() / (2.0 * constants.mass);
    }
}

std::vector<Complex> trajectory_at(const Vec& pre, const Vec& post,
                                   double omega,
                                   const std::vector<double>& times, int n_max,
                                   const Constants& constants,
                                   double basis_omega,
                                   double overlap_threshold) {
    Mat h, x;
    build_fock_system(omega, n_max, constants, basis_omega, h, x);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const Mat& v = es.eigenvectors();
    const RealVec& e = es.eigenvalues();

    const Vec pre_e = v.adjoint() * pre;
    const Vec post_e = v.adjoint() * post;
    const Mat x_e = v.adjoint() * x * v;

    const Complex overlap = post.dot(pre);
    if (std::abs(overlap) < overlap_threshold)
        throw OrthogonalityError("weak_trajectory: orthogonal boundary states");

    std::vector<Complex> out;
    out.reserve(times.size());
    for (double t : times) {
        // <F| e^{iHt} x e^{-iHt} |I> assembled in the energy basis
        Vec right = pre_e;
        for (int n = 0; n < n_max; ++n)
            right(n) *= std::exp(-kI * e(n) * t / constants.hbar);
        Vec left = post_e;
        for (int n = 0; n < n_max; ++n)
            left(n) *= std::exp(-kI * e(n) * t / constants.hbar);
        out.push_back(Complex(left.dot(x_e * right)) / overlap);
    }
    return out;
}

}  // namespace

std::vector<Complex> weak_trajectory(const StateVector& pre,
                                     const StateVector& post, double omega,
                                     const std::vector<double>& times,
                                     int n_max, const Constants& constants,
                                     const WeakTrajectoryOptions& options) {
    if (pre.dim() != n_max || post.dim() != n_max)
        throw DimensionError("weak_trajectory: states must have dim n_max");
    if (times.empty()) throw Error("weak_trajectory: no sample times");
    if (omega < 0.0) throw Error("weak_trajectory: omega must be >= 0");

    const Vec pre_n = pre.normalized().amplitudes();
    const Vec post_n = post.normalized().amplitudes();
    auto result = trajectory_at(pre_n, post_n, omega, times, n_max, constants,
                                options.basis_omega, options.overlap_threshold);

    if (options.verify_truncation) {
        Vec pre2 = Vec::Zero(2 * n_max);
        Vec post2 = Vec::Zero(2 * n_max);
        pre2.head(n_max) = pre_n;
        post2.head(n_max) = post_n;
        const auto doubled =
            trajectory_at(pre2, post2, omega, times, 2 * n_max, constants,
                          options.basis_omega, options.overlap_threshold);
        double drift = 0.0;
        for (std::size_t i = 0; i < result.size(); ++i)
            drift = std::max(drift, std::abs(result[i] - doubled[i]));
        if (drift >= 1e-8) {
            std::ostringstream msg;
            msg << "weak_trajectory: truncation not converged, doubling "
                   "n_max moves the trajectory by "
                << drift;
            throw TruncationError(msg.str());
        }
    }
    return result;
}

double classicality_check(const std::vector<Complex>& x_w,
                          const LatticeAction& a) {
    if (static_cast<int>(x_w.size()) != a.n_sites)
        throw DimensionError("classicality_check: trajectory length mismatch");
    for (int k = 0; k < a.source.size(); ++k)
        if (a.source(k) != Complex(0.0, 0.0))
            throw Error("classicality_check: requires J = 0");
    Vec values(a.n_sites);
    for (int k = 0; k < a.n_sites; ++k) values(k) = x_w[k];
    const Vec r = el_residual(a, LatticePath(std::move(values)));
    return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

namespace {

// phi_k = dW/dJ_k / dt at base source J (dense vector over slices).
Complex phi_at(const StateVector& pre, const StateVector& post,
               const TimeSlicedProcess& process, int site,
               const std::vector<double>& j_dense) {
    std::vector<double> values;
    std::vector<int> indices;
    for (int k = 0; k < static_cast<int>(j_dense.size()); ++k) {
        if (j_dense[k] != 0.0) {
            values.push_back(j_dense[k]);
            indices.push_back(k);
        }
    }
    return background_field(pre, post, process, site,
                            SourceConfig(values, indices));
}

Complex w_at(const StateVector& pre, const StateVector& post,
             const TimeSlicedProcess& process,
             const std::vector<double>& j_dense) {
    std::vector<double> values;
    std::vector<int> indices;
    for (int k = 0; k < static_cast<int>(j_dense.size()); ++k) {
        if (j_dense[k] != 0.0) {
            values.push_back(j_dense[k]);
            indices.push_back(k);
        }
    }
    return generating_functional(pre, post, process,
                                 SourceConfig(values, indices));
}

}  // namespace

LegendreCheckResult legendre_check(const StateVector& pre,
                                   const StateVector& post,
                                   const TimeSlicedProcess& process,
                                   double j_scale) {
    const int n = process.n_slices();
    if (n > 8)
        throw Error("legendre_check: at most 8 source sites supported");
    const int site_a = 0;
    const int site_b = n - 1;
    if (site_a == site_b)
        throw Error("legendre_check: need at least 2 slices");
    const double dt = process.dt();

    LegendreCheckResult res;

    // (1) dW/dJ_k versus the background field, at J = 0 and at the target.
    for (const double base : {0.0, j_scale}) {
        std::vector<double> j(n, 0.0);
        j[site_a] = base;
        j[site_b] = base * 0.5;
        for (int site : {site_a, site_b}) {
            const double eps = 2e-5;
            std::vector<double> up = j, dn = j;
            up[site] += eps;
            dn[site] -= eps;
            const Complex raw_fd =
                (w_at(pre, post, process, up) - w_at(pre, post, process, dn)) /
                (2.0 * eps * dt);
            const Complex phi = phi_at(pre, post, process, site, j);
            res.dw_dj_error =
                std::max(res.dw_dj_error, std::abs(raw_fd - phi));
        }
    }

    // (2) exactness of dW = sum_k phi_k dJ_k dt along two path orderings
    // from J = 0 to the target (J_a, J_b) = (j_scale, 0.6 j_scale).
    const double ja = j_scale, jb = 0.6 * j_scale;
    const auto leg_integral = [&](int site, double from, double to,
                                  std::vector<double> frozen) {
        // Simpson rule over the moving component.
        const int intervals = 8;  // even
        Complex acc{0.0, 0.0};
        const double h = (to - from) / intervals;
        for (int i = 0; i <= intervals; ++i) {
            std::vector<double> j = frozen;
            j[site] = from + i * h;
            const double weight =
                (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += weight * phi_at(pre, post, process, site, j);
        }
        return acc * (h / 3.0) * dt;
    };

    std::vector<double> zero(n, 0.0), target(n, 0.0);
    target[site_a] = ja;
    target[site_b] = jb;
    std::vector<double> mid_a = zero, mid_b = zero;
    mid_a[site_a] = ja;  // path A: raise J_a first
    mid_b[site_b] = jb;  // path B: raise J_b first

    const Complex path_a = leg_integral(site_a, 0.0, ja, zero) +
                           leg_integral(site_b, 0.0, jb, mid_a);
    const Complex path_b = leg_integral(site_b, 0.0, jb, zero) +
                           leg_integral(site_a, 0.0, ja, mid_b);
    const Complex dw = w_at(pre, post, process, target) -
                       w_at(pre, post, process, zero);
    res.path_dependence = std::abs(path_a - path_b);
    res.exactness_error =
        std::max(std::abs(path_a - dw), std::abs(path_b - dw));

    // (3) Gamma = W - sum J phi dt along path A: dGamma = -sum J dphi dt.
    const auto gamma_at = [&](const std::vector<double>& j) {
        Complex jphi{0.0, 0.0};
        for (int k = 0; k < n; ++k)
            if (j[k] != 0.0) jphi += j[k] * phi_at(pre, post, process, k, j);
        return w_at(pre, post, process, j) - jphi * dt;
    };
    // quadrature of -sum_k J_k dphi_k dt along the second leg of path A
    const int intervals = 8;
    Complex j_dphi{0.0, 0.0};
    std::vector<Complex> phi_a(intervals + 1), phi_b(intervals + 1);
    for (int i = 0; i <= intervals; ++i) {
        std::vector<double> j = mid_a;
        j[site_b] = jb * i / intervals;
        phi_a[i] = phi_at(pre, post, process, site_a, j);
        phi_b[i] = phi_at(pre, post, process, site_b, j);
    }
    for (int i = 0; i < intervals; ++i) {
        // trapezoid in phi-increments, J evaluated at the midpoint
        const double jb_mid = jb * (i + 0.5) / intervals;
        j_dphi += ja * (phi_a[i + 1] - phi_a[i]) +
                  jb_mid * (phi_b[i + 1] - phi_b[i]);
    }
    const Complex dgamma = gamma_at(target) - gamma_at(mid_a);
    res.gamma_residual = std::abs(dgamma + j_dphi * dt);

    res.max_deviation =
        std::max({res.dw_dj_error, res.exactness_error, res.path_dependence,
                  res.gamma_residual});
    return res;
}

void write_trajectory_csv(std::ostream& out, const std::vector<double>& times,
                          const std::vector<Complex>& values,
                          const LatticeAction& a) {
    Vec path(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) path(i) = values[i];
    const Vec r = el_residual(a, LatticePath(path));
    out << "t,re_phi,im_phi,residual\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << io::format_double(times[i]) << ','
            << io::format_double(values[i].real()) << ','
            << io::format_double(values[i].imag()) << ',';
        if (i > 0 && i + 1 < values.size())
            out << io::format_double(std::abs(r(i - 1)));
        out << '\n';
    }
}

}  // namespace wvf
