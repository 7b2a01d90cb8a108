#include "wvfield/wave_field.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "wvfield/fft.hpp"
#include "wvfield/io.hpp"
#include "wvfield/rng.hpp"

namespace wvf {

namespace {

// Inverse-CDF draw over cumulative cell masses with in-cell interpolation.
int draw_cell(const RealVec& cumulative, double u, double* frac = nullptr) {
    const double target = u * cumulative(cumulative.size() - 1);
    const double* begin = cumulative.data();
    const double* it =
        std::upper_bound(begin, begin + cumulative.size(), target);
    const Eigen::Index i =
        std::min<Eigen::Index>(it - begin, cumulative.size() - 1);
    if (frac) {
        const double lo = i == 0 ? 0.0 : cumulative(i - 1);
        const double mass = cumulative(i) - lo;
        *frac = mass > 0.0 ? (target - lo) / mass : 0.5;
    }
    return static_cast<int>(i);
}

RealVec cumulative_from(const RealVec& weights) {
    RealVec cum(weights.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights(i);
        cum(i) = acc;
    }
    if (!(acc > 0.0)) throw Error("empty distribution");
    return cum;
}

}  // namespace

WaveField::WaveField(int nx, int ny, double dx, double dy, double x0,
                     double y0, Vec amplitudes, double time,
                     Constants constants)
    : nx_(nx),
      ny_(ny),
      dx_(dx),
      dy_(dy),
      x0_(x0),
      y0_(y0),
      amps_(std::move(amplitudes)),
      time_(time),
      constants_(constants) {
    if (!fft::is_power_of_two(nx_) || !fft::is_power_of_two(ny_))
        throw Error("WaveField: grid dimensions must be powers of two");
    if (!(dx_ > 0.0) || (ny_ > 1 && !(dy_ > 0.0)))
        throw Error("WaveField: grid spacing must be > 0");
    if (amps_.size() != static_cast<Eigen::Index>(nx_) * ny_)
        throw DimensionError("WaveField: amplitude size mismatch");
    constants_.validate();
}

WaveField WaveField::line(int nx, double dx, double x0, Vec amplitudes,
                          double time, Constants constants) {
    return WaveField(nx, 1, dx, 1.0, x0, 0.0, std::move(amplitudes), time,
                     constants);
}

WaveField WaveField::normalized() const {
    const double n = std::sqrt(norm());
    if (n == 0.0) throw Error("WaveField: zero norm");
    WaveField out = *this;
    out.amps_ /= n;
    return out;
}

WaveField propagate(const WaveField& field, const RealVec& potential,
                    double dt, int steps, const RealVec* absorbing_mask) {
    if (steps < 0) throw Error("propagate: steps must be >= 0");
    if (potential.size() != 0 && potential.size() != field.amplitudes().size())
        throw DimensionError("propagate: potential size mismatch");
    if (absorbing_mask && absorbing_mask->size() != field.amplitudes().size())
        throw DimensionError("propagate: mask size mismatch");
    if (steps == 0) return field;
    if (!(dt > 0.0)) throw Error("propagate: dt must be > 0");

    const double hbar = field.constants().hbar;
    const double m = field.constants().mass;
    const int nx = field.nx(), ny = field.ny();
    double kmax2 = std::pow(M_PI / field.dx(), 2);
    if (ny > 1) kmax2 += std::pow(M_PI / field.dy(), 2);
    if (hbar * kmax2 * dt / (2.0 * m) >= M_PI)
        throw Error(
            "propagate: split-step spectral kick per step exceeds pi; reduce "
            "dt");

    // kinetic phase per step for every grid mode
    Vec kinetic(static_cast<Eigen::Index>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        const double ky =
            ny > 1 ? 2.0 * M_PI * fft::freq_index(iy, ny) / (ny * field.dy())
                   : 0.0;
        for (int ix = 0; ix < nx; ++ix) {
            const double kx =
                2.0 * M_PI * fft::freq_index(ix, nx) / (nx * field.dx());
            kinetic(static_cast<Eigen::Index>(iy) * nx + ix) =
                std::exp(-kI * hbar * (kx * kx + ky * ky) * dt / (2.0 * m));
        }
    }
    Vec half_v;
    if (potential.size())
        half_v = (-kI * dt / (2.0 * hbar) * potential.array().cast<Complex>())
                     .exp()
                     .matrix();

    Vec psi = field.amplitudes();
    const auto to_k = [&](Vec& v) {
        v = ny > 1 ? fft::forward_2d(v, nx, ny) : fft::forward(v);
    };
    const auto to_x = [&](Vec& v) {
        v = ny > 1 ? fft::backward_2d(v, nx, ny) : fft::backward(v);
    };
    for (int s = 0; s < steps; ++s) {
        if (potential.size()) psi = psi.cwiseProduct(half_v);
        to_k(psi);
        psi = psi.cwiseProduct(kinetic);
        to_x(psi);
        if (potential.size()) psi = psi.cwiseProduct(half_v);
        if (absorbing_mask)
            psi = psi.cwiseProduct(absorbing_mask->cast<Complex>());
    }
    return WaveField(nx, ny, field.dx(), field.dy(), field.x_at(0),
                     field.y_at(0), std::move(psi), field.time() + steps * dt,
                     field.constants());
}

MomentumField local_momentum(const WaveField& field,
                             double intensity_floor_rel) {
    const int nx = field.nx(), ny = field.ny();
    const double hbar = field.constants().hbar;
    const Vec& psi = field.amplitudes();

    const auto gradient_axis = [&](bool along_x) {
        Vec hat = ny > 1 ? fft::forward_2d(psi, nx, ny) : fft::forward(psi);
        for (int iy = 0; iy < ny; ++iy) {
            const double ky =
                ny > 1
                    ? 2.0 * M_PI * fft::freq_index(iy, ny) / (ny * field.dy())
                    : 0.0;
            for (int ix = 0; ix < nx; ++ix) {
                const double kx =
                    2.0 * M_PI * fft::freq_index(ix, nx) / (nx * field.dx());
                hat(static_cast<Eigen::Index>(iy) * nx + ix) *=
                    kI * (along_x ? kx : ky);
            }
        }
        return ny > 1 ? fft::backward_2d(hat, nx, ny) : fft::backward(hat);
    };

    MomentumField out;
    out.nx = nx;
    out.ny = ny;
    out.dx = field.dx();
    out.dy = field.dy();
    out.x0 = field.x_at(0);
    out.y0 = field.y_at(0);
    out.intensity = psi.array().abs2();
    const double floor = intensity_floor_rel * out.intensity.maxCoeff();
    out.valid.assign(psi.size(), 1);
    out.px.resize(psi.size());
    const Vec gx = gradient_axis(true);
    Vec gy;
    if (ny > 1) {
        gy = gradient_axis(false);
        out.py.resize(psi.size());
    }
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
        if (out.intensity(i) < floor) {
            out.valid[i] = 0;
            out.px(i) = 0.0;
            if (ny > 1) out.py(i) = 0.0;
            continue;
        }
        out.px(i) = hbar * std::imag(gx(i) / psi(i));
        if (ny > 1) out.py(i) = hbar * std::imag(gy(i) / psi(i));
    }
    return out;
}

std::vector<WaveField> two_slit_scenario(const TwoSlitParams& p) {
    if (p.n_frames < 1) throw Error("two_slit_scenario: n_frames >= 1");
    const double dx = 2.0 * p.half_width / p.n_nodes;
    if (p.slit_width < 8.0 * dx)
        throw Error("two_slit_scenario: need >= 8 nodes per slit width");
    if (std::abs(p.slit_separation) / 2.0 + 4.0 * p.slit_width >
        0.9 * p.half_width)
        throw Error("two_slit_scenario: slits do not fit the grid");

    Vec psi(p.n_nodes);
    for (int i = 0; i < p.n_nodes; ++i) {
        const double x = -p.half_width + (i + 0.5) * dx;
        const double w2 = 2.0 * p.slit_width * p.slit_width;
        psi(i) = std::exp(-std::pow(x - p.slit_separation / 2.0, 2) / w2) +
                 std::exp(-std::pow(x + p.slit_separation / 2.0, 2) / w2);
    }
    WaveField field = WaveField::line(p.n_nodes, dx, -p.half_width + 0.5 * dx,
                                      std::move(psi), 0.0, p.constants)
                          .normalized();

    const double kmax2 = std::pow(M_PI / dx, 2);
    const double dt_max =
        0.9 * 2.0 * M_PI * p.constants.mass / (p.constants.hbar * kmax2);
    const double chunk = p.propagation_time / p.n_frames;
    const int steps = std::max(1, int(std::ceil(chunk / dt_max)));

    std::vector<WaveField> frames;
    frames.reserve(p.n_frames + 1);
    frames.push_back(field);
    for (int f = 0; f < p.n_frames; ++f)
        frames.push_back(
            propagate(frames.back(), RealVec(), chunk / steps, steps));
    return frames;
}

double two_slit_fringe_period(const TwoSlitParams& p) {
    return 2.0 * M_PI * p.constants.hbar * p.propagation_time /
           (p.constants.mass * p.slit_separation);
}

double measured_fringe_spacing(const WaveField& field) {
    const RealVec intensity = field.amplitudes().array().abs2();
    const double floor = 0.2 * intensity.maxCoeff();
    std::vector<int> peaks;
    for (int i = 1; i + 1 < field.nx(); ++i)
        if (intensity(i) > intensity(i - 1) &&
            intensity(i) > intensity(i + 1) && intensity(i) >= floor)
            peaks.push_back(i);
    if (peaks.size() < 2)
        throw Error("measured_fringe_spacing: fewer than two fringe maxima");
    std::vector<double> gaps;
    for (std::size_t i = 1; i < peaks.size(); ++i)
        gaps.push_back((peaks[i] - peaks[i - 1]) * field.dx());
    std::sort(gaps.begin(), gaps.end());
    return gaps[gaps.size() / 2];  // median spacing
}

double fringe_visibility(const WaveField& field) {
    // deepest interior local minimum against its bracketing maxima; a smooth
    // single-slit envelope has no interior minima and scores 0
    const RealVec intensity = field.amplitudes().array().abs2();
    const double imax = intensity.maxCoeff();
    double deepest = 0.0;
    for (int i = 1; i + 1 < field.nx(); ++i) {
        if (intensity(i) < intensity(i - 1) &&
            intensity(i) < intensity(i + 1)) {
            double left = 0.0, right = 0.0;
            for (int l = i; l >= 0; --l) left = std::max(left, intensity(l));
            for (int r = i; r < field.nx(); ++r)
                right = std::max(right, intensity(r));
            const double bracket = std::min(left, right);
            if (bracket > 0.05 * imax)
                deepest = std::max(
                    deepest, (bracket - intensity(i)) / (bracket + intensity(i)));
        }
    }
    return deepest;
}

namespace {

struct MapInterp {
    const MomentumField& map;

    bool sample(double x, double y, double& px, double& py) const {
        const double fx = (x - map.x0) / map.dx;
        const int ix = int(std::floor(fx));
        if (ix < 0 || ix + 1 >= map.nx) return false;
        const double wx = fx - ix;
        if (map.ny == 1) {
            if (!map.valid[ix] || !map.valid[ix + 1]) return false;
            px = (1.0 - wx) * map.px(ix) + wx * map.px(ix + 1);
            py = 0.0;
            return true;
        }
        const double fy = (y - map.y0) / map.dy;
        const int iy = int(std::floor(fy));
        if (iy < 0 || iy + 1 >= map.ny) return false;
        const double wy = fy - iy;
        const auto at = [&](int jx, int jy) { return jy * map.nx + jx; };
        for (int a : {0, 1})
            for (int b : {0, 1})
                if (!map.valid[at(ix + a, iy + b)]) return false;
        const auto bilin = [&](const RealVec& v) {
            return (1 - wx) * (1 - wy) * v(at(ix, iy)) +
                   wx * (1 - wy) * v(at(ix + 1, iy)) +
                   (1 - wx) * wy * v(at(ix, iy + 1)) +
                   wx * wy * v(at(ix + 1, iy + 1));
        };
        px = bilin(map.px);
        py = bilin(map.py);
        return true;
    }
};

}  // namespace

std::vector<Trajectory> streamlines(
    const std::vector<MomentumField>& maps,
    const std::vector<std::pair<double, double>>& seeds, double frame_dt,
    double mass, int substeps_per_frame) {
    if (maps.size() < 2) throw Error("streamlines: need at least two maps");
    if (!(frame_dt > 0.0) || substeps_per_frame < 1)
        throw Error("streamlines: bad step parameters");

    const auto velocity = [&](double x, double y, double t, double& vx,
                              double& vy) {
        const double tau = t / frame_dt;
        int j = int(std::floor(tau));
        j = std::clamp(j, 0, static_cast<int>(maps.size()) - 2);
        const double w = std::clamp(tau - j, 0.0, 1.0);
        double px0, py0, px1, py1;
        if (!MapInterp{maps[j]}.sample(x, y, px0, py0) ||
            !MapInterp{maps[j + 1]}.sample(x, y, px1, py1))
            return false;
        vx = ((1.0 - w) * px0 + w * px1) / mass;
        vy = ((1.0 - w) * py0 + w * py1) / mass;
        return true;
    };

    std::vector<Trajectory> out;
    out.reserve(seeds.size());
    const bool two_d = maps.front().ny > 1;
    for (const auto& seed : seeds) {
        double vx, vy;
        if (!velocity(seed.first, seed.second, 0.0, vx, vy))
            throw Error("streamlines: seed in masked or out-of-grid region");
        Trajectory traj;
        traj.seed_x = seed.first;
        traj.seed_y = seed.second;
        double x = seed.first, y = seed.second, t = 0.0;
        traj.t.push_back(0.0);
        traj.x.push_back(x);
        if (two_d) traj.y.push_back(y);

        const double h = frame_dt / substeps_per_frame;
        for (std::size_t f = 0; f + 1 < maps.size() && !traj.truncated; ++f) {
            for (int s = 0; s < substeps_per_frame; ++s) {
                double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
                if (!velocity(x, y, t, k1x, k1y) ||
                    !velocity(x + 0.5 * h * k1x, y + 0.5 * h * k1y,
                              t + 0.5 * h, k2x, k2y) ||
                    !velocity(x + 0.5 * h * k2x, y + 0.5 * h * k2y,
                              t + 0.5 * h, k3x, k3y) ||
                    !velocity(x + h * k3x, y + h * k3y, t + h, k4x, k4y)) {
                    traj.truncated = true;
                    break;
                }
                x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
                y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
                t += h;
            }
            if (!traj.truncated) {
                traj.t.push_back(t);
                traj.x.push_back(x);
                if (two_d) traj.y.push_back(y);
            }
        }
        out.push_back(std::move(traj));
    }
    return out;
}

int count_crossings(const std::vector<Trajectory>& trajectories) {
    int crossings = 0;
    std::size_t steps = 0;
    for (const auto& t : trajectories) steps = std::max(steps, t.x.size());
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t i = 0; i + 1 < trajectories.size(); ++i) {
            const auto& a = trajectories[i];
            const auto& b = trajectories[i + 1];
            if (s < a.x.size() && s < b.x.size() && b.x[s] < a.x[s])
                ++crossings;
        }
    }
    return crossings;
}

std::vector<std::pair<int, int>> uniform_windows(int n_nodes, int n_bins) {
    if (n_bins < 1 || n_bins > n_nodes)
        throw Error("uniform_windows: bad bin count");
    std::vector<std::pair<int, int>> w;
    w.reserve(n_bins);
    for (int b = 0; b < n_bins; ++b)
        w.emplace_back(b * n_nodes / n_bins, (b + 1) * n_nodes / n_bins);
    return w;
}

namespace {

void require_1d(const WaveField& field, const char* who) {
    if (!field.is_1d())
        throw Error(std::string(who) + ": only 1D fields supported");
}

}  // namespace

BinnedMomentum weak_momentum_map(
    const WaveField& field, const std::vector<std::pair<int, int>>& windows,
    std::int64_t shots, std::uint64_t seed, const WeakMapOptions& options) {
    require_1d(field, "weak_momentum_map");
    if (windows.empty()) throw Error("weak_momentum_map: no windows");
    for (const auto& [lo, hi] : windows)
        if (lo < 0 || hi > field.nx() || lo >= hi)
            throw DimensionError("weak_momentum_map: window out of range");

    const WaveField psi = field.normalized();
    const MomentumField local =
        local_momentum(psi, options.intensity_floor_rel);

    BinnedMomentum out;
    out.windows = windows;
    const std::size_t nb = windows.size();
    out.center.assign(nb, 0.0);
    out.mean_p.assign(nb, 0.0);
    out.stderr_p.assign(nb, 0.0);
    out.count.assign(nb, 0);
    out.valid.assign(nb, 0);

    // exact mode: intensity-weighted window averages of the local momentum
    const double total_intensity = local.intensity.sum();
    for (std::size_t b = 0; b < nb; ++b) {
        double mass = 0.0, mean = 0.0, center = 0.0;
        for (int i = windows[b].first; i < windows[b].second; ++i) {
            if (!local.valid[i]) continue;
            mass += local.intensity(i);
            mean += local.intensity(i) * local.px(i);
            center += local.intensity(i) * psi.x_at(i);
        }
        if (mass > options.intensity_floor_rel * total_intensity) {
            out.valid[b] = 1;
            out.mean_p[b] = mean / mass;
            out.center[b] = center / mass;
        }
    }
    if (shots == 0) return out;

    // Monte Carlo mode: exact joint state of field (x) Gaussian pointer
    // after the impulsive coupling exp(-i g p (x) p_pointer / hbar), then
    // per-photon position post-selection and pointer readout.
    const int nx = psi.nx();
    const double hbar = psi.constants().hbar;
    const double sigma = options.pointer_sigma;
    const double kmax = M_PI / psi.dx();
    double g = options.g;
    if (g == 0.0) g = 0.1 * sigma / (hbar * kmax);

    const int ny = options.pointer_points;
    const double yhalf = 8.0 * sigma + std::abs(g) * hbar * kmax;
    const double dy = 2.0 * yhalf / ny;
    RealVec ygrid(ny);
    for (int j = 0; j < ny; ++j) ygrid(j) = -yhalf + (j + 0.5) * dy;
    const double norm0 = std::pow(2.0 * M_PI * sigma * sigma, -0.25);

    // joint amplitude Psi(x_i, y_j), assembled one pointer row at a time:
    // Psi(., y) = IDFT of psi_hat(k) Phi0(y - g hbar k)
    const Vec psi_hat = fft::forward(psi.amplitudes());
    RealVec node_mass = RealVec::Zero(nx);
    std::vector<RealVec> y_cdf(nx, RealVec::Zero(ny));
    {
        Vec spectrum(nx);
        for (int j = 0; j < ny; ++j) {
            for (int q = 0; q < nx; ++q) {
                const double k =
                    2.0 * M_PI * fft::freq_index(q, nx) / (nx * psi.dx());
                const double shift = ygrid(j) - g * hbar * k;
                spectrum(q) = psi_hat(q) * norm0 *
                              std::exp(-shift * shift / (4.0 * sigma * sigma));
            }
            const Vec column = fft::backward(spectrum);
            for (int i = 0; i < nx; ++i) {
                const double w = std::norm(column(i));
                y_cdf[i](j) = w;
                node_mass(i) += w;
            }
        }
    }
    for (int i = 0; i < nx; ++i) {
        double acc = 0.0;
        for (int j = 0; j < ny; ++j) {
            acc += y_cdf[i](j);
            y_cdf[i](j) = acc;
        }
    }
    const RealVec node_cum = cumulative_from(node_mass);

    std::vector<int> window_of(nx, -1);
    for (std::size_t b = 0; b < nb; ++b)
        for (int i = windows[b].first; i < windows[b].second; ++i)
            window_of[i] = static_cast<int>(b);

    std::vector<double> sum(nb, 0.0), sum2(nb, 0.0);
    std::vector<std::int64_t> count(nb, 0);
    for (std::int64_t s = 0; s < shots; ++s) {
        SubstreamRng rng(seed, static_cast<std::uint64_t>(s));
        const int node = draw_cell(node_cum, rng.next_double());
        const double u = rng.next_double();
        const int b = window_of[node];
        if (b < 0) continue;
        double frac;
        const int j = draw_cell(y_cdf[node], u, &frac);
        const double reading = ygrid(j) + (frac - 0.5) * dy;
        sum[b] += reading;
        sum2[b] += reading * reading;
        ++count[b];
    }
    for (std::size_t b = 0; b < nb; ++b) {
        out.count[b] = count[b];
        if (count[b] < 2) {
            out.valid[b] = 0;
            continue;
        }
        const double mean = sum[b] / count[b];
        const double var = (sum2[b] - count[b] * mean * mean) / (count[b] - 1);
        out.mean_p[b] = mean / g;
        out.stderr_p[b] =
            std::sqrt(std::max(0.0, var) / count[b]) / std::abs(g);
    }
    return out;
}

std::vector<std::pair<int, int>> choose_probe_windows(
    const WaveField& field, int n_probes, int cross_nodes, double budget,
    double min_mass, double max_mass) {
    require_1d(field, "choose_probe_windows");
    const WaveField psi = field.normalized();
    const MomentumField local = local_momentum(psi);
    const RealVec mass = local.intensity * psi.dx();

    struct Candidate {
        int lo;
        double mass;
    };
    std::vector<Candidate> candidates;
    int last_end = -1000;
    for (int i = 8; i + cross_nodes + 8 < psi.nx(); ++i) {
        if (i < last_end + 4 * cross_nodes) continue;  // keep probes apart
        double m = 0.0;
        bool ok = true;
        for (int j = i; j < i + cross_nodes; ++j) {
            m += mass(j);
            ok = ok && local.valid[j];
        }
        if (!ok || m < min_mass || m > max_mass) continue;
        candidates.push_back({i, m});
        last_end = i + cross_nodes;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  return a.mass > b.mass;
              });
    std::vector<std::pair<int, int>> windows;
    double used = 0.0;
    for (const Candidate& c : candidates) {
        if (int(windows.size()) == n_probes) break;
        if (used + c.mass >= budget) continue;
        windows.emplace_back(c.lo, c.lo + cross_nodes);
        used += c.mass;
    }
    if (int(windows.size()) < n_probes)
        throw Error(
            "choose_probe_windows: cannot place the requested probes inside "
            "the weak-on-average absorption budget");
    std::sort(windows.begin(), windows.end());
    return windows;
}

std::vector<ProbeSample> classical_probe_sample(
    const WaveField& field, const std::vector<double>& probe_positions,
    double cross_section, std::int64_t shots, std::uint64_t seed,
    double intensity_floor_rel) {
    require_1d(field, "classical_probe_sample");
    if (probe_positions.empty())
        throw Error("classical_probe_sample: no probes");
    if (cross_section < field.dx())
        throw Error("classical_probe_sample: cross_section must be >= dx");
    if (shots < 1) throw Error("classical_probe_sample: shots must be >= 1");

    const WaveField psi = field.normalized();
    const MomentumField local = local_momentum(psi, intensity_floor_rel);
    const int nx = psi.nx();

    std::vector<int> probe_of(nx, -1);
    double absorbed_fraction = 0.0;
    const RealVec mass = local.intensity * psi.dx();
    for (std::size_t p = 0; p < probe_positions.size(); ++p) {
        const double lo = probe_positions[p] - cross_section / 2.0;
        const double hi = probe_positions[p] + cross_section / 2.0;
        for (int i = 0; i < nx; ++i) {
            const double x = psi.x_at(i);
            if (x >= lo && x < hi) {
                if (probe_of[i] != -1)
                    throw Error("classical_probe_sample: overlapping probes");
                probe_of[i] = static_cast<int>(p);
                absorbed_fraction += mass(i);
            }
        }
    }
    if (absorbed_fraction >= 1e-3)
        throw Error(
            "classical_probe_sample: weak-on-average criterion violated, "
            "probes would absorb >= 1e-3 of the field intensity");

    const RealVec cum = cumulative_from(mass);
    std::vector<double> sum(probe_positions.size(), 0.0);
    std::vector<double> sum2(probe_positions.size(), 0.0);
    std::vector<std::int64_t> count(probe_positions.size(), 0);
    for (std::int64_t s = 0; s < shots; ++s) {
        SubstreamRng rng(seed, static_cast<std::uint64_t>(s));
        const int node = draw_cell(cum, rng.next_double());
        const int p = probe_of[node];
        if (p < 0 || !local.valid[node]) continue;
        const double reading = local.px(node);
        sum[p] += reading;
        sum2[p] += reading * reading;
        ++count[p];
    }

    std::vector<ProbeSample> out(probe_positions.size());
    for (std::size_t p = 0; p < probe_positions.size(); ++p) {
        out[p].position = probe_positions[p];
        out[p].absorbed = count[p];
        if (count[p] < 2) {
            out[p].empty = true;
            continue;
        }
        const double mean = sum[p] / count[p];
        const double var = (sum2[p] - count[p] * mean * mean) / (count[p] - 1);
        out[p].mean_p = mean;
        out[p].stderr_p = std::sqrt(std::max(0.0, var) / count[p]);
    }
    return out;
}

DirectStateResult direct_state_measurement(const WaveField& field, double g,
                                           std::int64_t shots_per_node,
                                           std::uint64_t seed,
                                           double p0_threshold) {
    require_1d(field, "direct_state_measurement");
    const WaveField psi_field = field.normalized();
    const int n = psi_field.nx();
    const double cell = psi_field.cell();
    const Vec psi = psi_field.amplitudes() * std::sqrt(cell);  // l2 norm 1
    const double inv_sqrt_n = 1.0 / std::sqrt(double(n));
    const Complex a0 = inv_sqrt_n * psi.sum();  // <p=0|psi>
    if (std::abs(a0) < p0_threshold)
        throw Error(
            "direct_state_measurement: zero-momentum component below "
            "threshold");

    Vec rec(n);
    if (shots_per_node == 0) {
        // exact weak value of |x><x| post-selected on p = 0: proportional to
        // psi(x) identically
        for (int i = 0; i < n; ++i) rec(i) = inv_sqrt_n * psi(i) / a0;
    } else {
        if (!(g > 0.0))
            throw Error("direct_state_measurement: g must be > 0");
        const double sg = std::sin(g), cg = std::cos(g);
        const std::int64_t half = shots_per_node / 2;
        if (half < 1)
            throw Error("direct_state_measurement: need >= 2 shots per node");
        for (int i = 0; i < n; ++i) {
            // ancilla state after the Zeeman-like kick and p = 0
            // post-selection: a|0> + b|1>
            const Complex k = inv_sqrt_n * psi(i);
            const Complex a = a0 + (cg - 1.0) * k;
            const Complex b = sg * k;
            const double p_pass = std::norm(a) + std::norm(b);
            const Complex cross = 2.0 * std::conj(a) * b;
            const double sx = cross.real() / p_pass;
            const double sy = cross.imag() / p_pass;

            std::int64_t passed = 0;
            std::int64_t plus_x = 0, n_x = 0, plus_y = 0, n_y = 0;
            for (std::int64_t s = 0; s < 2 * half; ++s) {
                SubstreamRng rng(seed, (static_cast<std::uint64_t>(i) << 34) ^
                                           static_cast<std::uint64_t>(s));
                if (rng.next_double() >= p_pass) continue;
                ++passed;
                const bool x_basis = (s % 2 == 0);
                const double expect = x_basis ? sx : sy;
                const bool plus = rng.next_double() < 0.5 * (1.0 + expect);
                if (x_basis) {
                    ++n_x;
                    plus_x += plus;
                } else {
                    ++n_y;
                    plus_y += plus;
                }
            }
            if (n_x == 0 || n_y == 0) {
                rec(i) = Complex(0.0, 0.0);
                continue;
            }
            const double p_hat = double(passed) / double(2 * half);
            const double sx_hat = 2.0 * double(plus_x) / n_x - 1.0;
            const double sy_hat = 2.0 * double(plus_y) / n_y - 1.0;
            rec(i) = p_hat * Complex(sx_hat, sy_hat) / (2.0 * sg);
        }
    }

    const double rec_norm = rec.norm();
    if (rec_norm == 0.0)
        throw Error("direct_state_measurement: empty reconstruction");
    rec /= rec_norm;

    DirectStateResult res;
    res.fidelity = std::norm(Complex(rec.dot(psi)));
    res.reconstructed = rec / std::sqrt(cell);
    return res;
}

void write_field_csv(std::ostream& out, const WaveField& field) {
    const bool two_d = !field.is_1d();
    out << (two_d ? "x,y,re_psi,im_psi,intensity\n"
                  : "x,re_psi,im_psi,intensity\n");
    for (int iy = 0; iy < field.ny(); ++iy) {
        for (int ix = 0; ix < field.nx(); ++ix) {
            const Complex v = field.amplitudes()(
                static_cast<Eigen::Index>(iy) * field.nx() + ix);
            out << io::format_double(field.x_at(ix)) << ',';
            if (two_d) out << io::format_double(field.y_at(iy)) << ',';
            out << io::format_double(v.real()) << ','
                << io::format_double(v.imag()) << ','
                << io::format_double(std::norm(v)) << '\n';
        }
    }
}

void write_momentum_map_csv(std::ostream& out, const MomentumField& map) {
    const bool two_d = map.ny > 1;
    out << (two_d ? "x,y,px,py,intensity,valid\n" : "x,px,intensity,valid\n");
    for (int iy = 0; iy < map.ny; ++iy) {
        for (int ix = 0; ix < map.nx; ++ix) {
            const Eigen::Index i = static_cast<Eigen::Index>(iy) * map.nx + ix;
            out << io::format_double(map.x0 + ix * map.dx) << ',';
            if (two_d) out << io::format_double(map.y0 + iy * map.dy) << ',';
            out << io::format_double(map.px(i)) << ',';
            if (two_d) out << io::format_double(map.py(i)) << ',';
            out << io::format_double(map.intensity(i)) << ','
                << int(map.valid[i]) << '\n';
        }
    }
}

void write_binned_momentum_csv(std::ostream& out, const WaveField& field,
                               const BinnedMomentum& map) {
    out << "bin,lo_x,hi_x,center,mean_p,stderr_p,count,valid\n";
    for (std::size_t b = 0; b < map.windows.size(); ++b) {
        out << b << ',' << io::format_double(field.x_at(map.windows[b].first))
            << ','
            << io::format_double(field.x_at(map.windows[b].second - 1) +
                                 field.dx())
            << ',' << io::format_double(map.center[b]) << ','
            << io::format_double(map.mean_p[b]) << ','
            << io::format_double(map.stderr_p[b]) << ',' << map.count[b] << ','
            << int(map.valid[b]) << '\n';
    }
}

}  // namespace wvf
