#pragma once

// Thin wrapper over FFTW for unnormalized 2-D complex transforms on
// row-major grids. Plans are created with FFTW_ESTIMATE | FFTW_UNALIGNED and
// cached per (rows, cols, direction); the cache is mutex-guarded and plan
// execution uses the new-array interface, so concurrent calls are safe.

#include <complex>
#include <vector>

namespace reld::fft {

using complex = std::complex<double>;

/// Row-major rows x cols complex grid.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<complex> values;

  Grid() = default;
  Grid(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c) {}

  complex& operator()(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  const complex& operator()(int r, int c) const {
    return values[static_cast<std::size_t>(r) * cols + c];
  }
};

/// Forward DFT: X[k,l] = sum_{m,n} x[m,n] exp(-2 pi i (km/R + ln/C)).
Grid forward(const Grid& x);

/// Inverse DFT including the 1/(R*C) normalization, so inverse(forward(x)) == x.
Grid inverse(const Grid& x);

/// Forward DFT of a real plane.
Grid forward_real(const std::vector<double>& plane, int rows, int cols);

/// Real part of the normalized inverse DFT.
std::vector<double> inverse_real(const Grid& spectrum);

}  // namespace reld::fft
