#ifndef WVFIELD_FFT_HPP
#define WVFIELD_FFT_HPP

#include "wvfield/types.hpp"

namespace wvf::fft {

// Unnormalized forward DFT: X_j = sum_r x_r exp(-2 pi i j r / N).
Vec forward(const Vec& x);
// Inverse of forward (includes the 1/N).
Vec backward(const Vec& x);

// 2D transforms on row-major data of shape (ny rows, nx cols) flattened as
// index = iy * nx + ix.
Vec forward_2d(const Vec& x, int nx, int ny);
Vec backward_2d(const Vec& x, int nx, int ny);

// Signed frequency index for bin j of an N-point transform: j for j < N/2,
// j - N otherwise.
inline int freq_index(int j, int n) { return j < n / 2 ? j : j - n; }

bool is_power_of_two(int n);

}  // namespace wvf::fft

#endif
