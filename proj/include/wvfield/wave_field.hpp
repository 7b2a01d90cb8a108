#ifndef WVFIELD_WAVE_FIELD_HPP
#define WVFIELD_WAVE_FIELD_HPP

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "wvfield/types.hpp"

namespace wvf {

// Complex field on a uniform 1D or 2D grid at one time slice. Node (ix, iy)
// lives at flat index iy * nx + ix; ny == 1 means 1D. Grid sizes are powers
// of two so spectral derivatives and propagation are plain FFTs.
class WaveField {
  public:
    WaveField(int nx, int ny, double dx, double dy, double x0, double y0,
              Vec amplitudes, double time = 0.0,
              Constants constants = Constants());

    static WaveField line(int nx, double dx, double x0, Vec amplitudes,
                          double time = 0.0, Constants constants = Constants());

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    bool is_1d() const { return ny_ == 1; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double x_at(int ix) const { return x0_ + ix * dx_; }
    double y_at(int iy) const { return y0_ + iy * dy_; }
    double x0() const { return x0_; }
    double time() const { return time_; }
    const Vec& amplitudes() const { return amps_; }
    const Constants& constants() const { return constants_; }

    double cell() const { return is_1d() ? dx_ : dx_ * dy_; }
    double norm() const { return amps_.squaredNorm() * cell(); }
    WaveField normalized() const;

  private:
    int nx_, ny_;
    double dx_, dy_, x0_, y0_;
    Vec amps_;
    double time_;
    Constants constants_;
};

// Locally averaged momentum p = hbar Im(grad psi / psi) with an intensity
// mask: nodes dimmer than floor_rel * max intensity carry no momentum value.
struct MomentumField {
    int nx = 0, ny = 1;
    double dx = 0.0, dy = 0.0, x0 = 0.0, y0 = 0.0;
    RealVec px, py;       // py empty in 1D
    RealVec intensity;    // |psi|^2 per node
    std::vector<char> valid;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> y;  // empty in 1D
    double seed_x = 0.0, seed_y = 0.0;
    bool truncated = false;
};

// Symmetric split-step spectral propagation (V/2, T, V/2 per step) under
// iham_bar d psi/dt = -hbar^2/(2m) lap psi + V psi, periodic boundaries.
// Preconditions: the kinetic phase advance of the largest grid mode per
// step stays below pi. An optional absorbing mask (values in [0,1]) is
// applied after each step.
WaveField propagate(const WaveField& field, const RealVec& potential,
                    double dt, int steps,
                    const RealVec* absorbing_mask = nullptr);

MomentumField local_momentum(const WaveField& field,
                             double intensity_floor_rel = 1e-10);

struct TwoSlitParams {
    double slit_separation = 4.0;
    double slit_width = 0.15;       // Gaussian width of each slit packet
    double propagation_time = 1.0;  // paraxial distance plays the role of time
    int n_nodes = 1024;
    double half_width = 8.0;  // domain is [-half_width, half_width)
    int n_frames = 256;       // recorded planes after t = 0
    Constants constants;
};

// Two Gaussian slit packets propagating freely; returns n_frames + 1 fields
// including the initial plane.
std::vector<WaveField> two_slit_scenario(const TwoSlitParams& params);

// Fringe period lambda D / d of the paraxial parameterization.
double two_slit_fringe_period(const TwoSlitParams& params);

// Average spacing of interference maxima near the axis (peak finding).
double measured_fringe_spacing(const WaveField& field);
double fringe_visibility(const WaveField& field);

// RK4 streamlines of dx/dt = p(x, t)/m through momentum maps sampled at
// uniform spacing frame_dt, with linear interpolation in x (bilinear in 2D)
// and t. Trajectories leaving the grid or entering masked nodes are
// truncated and flagged.
std::vector<Trajectory> streamlines(const std::vector<MomentumField>& maps,
                                    const std::vector<std::pair<double, double>>& seeds,
                                    double frame_dt, double mass,
                                    int substeps_per_frame = 4);

// Adjacent-order inversions across time steps; 0 means non-crossing (1D).
int count_crossings(const std::vector<Trajectory>& trajectories);

// Per-window weak momentum values on a 1D field.
struct BinnedMomentum {
    std::vector<std::pair<int, int>> windows;  // node ranges [lo, hi)
    std::vector<double> center;                // intensity-weighted position
    std::vector<double> mean_p;
    std::vector<double> stderr_p;  // 0 in exact mode
    std::vector<std::int64_t> count;
    std::vector<char> valid;
};

std::vector<std::pair<int, int>> uniform_windows(int n_nodes, int n_bins);

struct WeakMapOptions {
    double pointer_sigma = 1.0;
    int pointer_points = 512;
    double g = 0.0;  // 0 = auto: 0.1 * sigma / (hbar k_max)
    double intensity_floor_rel = 1e-10;
};

// shots == 0 runs exact mode (intensity-weighted bin averages of the local
// momentum). shots > 0 runs the full von Neumann simulation: every photon
// weakly couples p to a Gaussian pointer, is post-selected at a position
// node drawn from the exact joint distribution, and contributes its pointer
// reading to that node's window.
BinnedMomentum weak_momentum_map(const WaveField& field,
                                 const std::vector<std::pair<int, int>>& windows,
                                 std::int64_t shots, std::uint64_t seed,
                                 const WeakMapOptions& options = {});

struct ProbeSample {
    double position = 0.0;
    double mean_p = 0.0;
    double stderr_p = 0.0;
    std::int64_t absorbed = 0;
    bool empty = false;
};

// Deterministic placement of n_probes dim windows (cross_nodes wide) whose
// total intensity stays inside the weak-on-average absorption budget.
// Brightest admissible windows are preferred so every probe collects shots.
std::vector<std::pair<int, int>> choose_probe_windows(
    const WaveField& field, int n_probes, int cross_nodes,
    double budget = 9.5e-4, double min_mass = 5e-6, double max_mass = 1.5e-4);

// Strong-per-photon probes: each absorbed photon deposits the local average
// momentum at its landing node. The total intensity falling on the probes
// must stay below 1e-3 of the field norm (weak-on-average criterion).
std::vector<ProbeSample> classical_probe_sample(
    const WaveField& field, const std::vector<double>& probe_positions,
    double cross_section, std::int64_t shots, std::uint64_t seed,
    double intensity_floor_rel = 1e-10);

struct DirectStateResult {
    Vec reconstructed;      // unit Riemann norm
    double fidelity = 0.0;  // |<psi_rec|psi>|^2
};

// Weak value of the position projector post-selected on p = 0. shots == 0 is
// the exact mode (the weak value is proportional to psi(x) identically);
// shots > 0 simulates a two-level ancilla coupled at strength g per node with
// binomial readout of sigma_x and sigma_y.
DirectStateResult direct_state_measurement(const WaveField& field, double g,
                                           std::int64_t shots_per_node = 0,
                                           std::uint64_t seed = 0,
                                           double p0_threshold = 1e-6);

// CSV exports: node coordinates, field values, intensity, momentum.
void write_field_csv(std::ostream& out, const WaveField& field);
void write_momentum_map_csv(std::ostream& out, const MomentumField& map);
void write_binned_momentum_csv(std::ostream& out, const WaveField& field,
                               const BinnedMomentum& map);

}  // namespace wvf

#endif
