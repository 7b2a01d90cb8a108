#include "wvfield/fft.hpp"

#include <map>
#include <utility>

#include <fftw3.h>

namespace wvf::fft {

namespace {

// One cached plan pair per size. Plans are built once with FFTW_ESTIMATE on
// an internal aligned buffer and executed on copies, which keeps results
// independent of caller buffer alignment. Not thread-safe; all callers in
// this project run transforms from a single thread.
struct PlanSet {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    std::size_t n = 0;

    PlanSet(int nx, int ny) {
        n = static_cast<std::size_t>(nx) * (ny > 0 ? ny : 1);
        buf = fftw_alloc_complex(n);
        if (ny > 0) {
            fwd = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_FORWARD,
                                   FFTW_ESTIMATE);
            bwd = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
        } else {
            fwd = fftw_plan_dft_1d(nx, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_1d(nx, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
    }
    ~PlanSet() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(buf);
    }
    PlanSet(const PlanSet&) = delete;
    PlanSet& operator=(const PlanSet&) = delete;
};

PlanSet& plans_for(int nx, int ny) {
    static std::map<std::pair<int, int>, PlanSet> cache;
    auto it = cache.find({nx, ny});
    if (it == cache.end()) it = cache.try_emplace({nx, ny}, nx, ny).first;
    return it->second;
}

Vec run(const Vec& x, int nx, int ny, bool forward_dir) {
    PlanSet& p = plans_for(nx, ny);
    if (static_cast<std::size_t>(x.size()) != p.n)
        throw DimensionError("fft: size mismatch");
    for (std::size_t i = 0; i < p.n; ++i) {
        p.buf[i][0] = x(static_cast<Eigen::Index>(i)).real();
        p.buf[i][1] = x(static_cast<Eigen::Index>(i)).imag();
    }
    fftw_execute(forward_dir ? p.fwd : p.bwd);
    Vec out(x.size());
    const double scale = forward_dir ? 1.0 : 1.0 / double(p.n);
    for (std::size_t i = 0; i < p.n; ++i)
        out(static_cast<Eigen::Index>(i)) =
            Complex(p.buf[i][0], p.buf[i][1]) * scale;
    return out;
}

}  // namespace

Vec forward(const Vec& x) {
    return run(x, static_cast<int>(x.size()), 0, true);
}
Vec backward(const Vec& x) {
    return run(x, static_cast<int>(x.size()), 0, false);
}

Vec forward_2d(const Vec& x, int nx, int ny) { return run(x, nx, ny, true); }
Vec backward_2d(const Vec& x, int nx, int ny) { return run(x, nx, ny, false); }

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace wvf::fft
