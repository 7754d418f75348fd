#pragma once

// 2D discrete Fourier transform with amplitude/phase decomposition. The
// spectrum is stored with the DC component at (H/2, W/2) so that "central
// region" means the low-frequency block. Forward is unnormalized, inverse
// divides by H*W; any H x W is supported (radix-2 for powers of two,
// Bluestein otherwise).

#include <complex>
#include <vector>

#include "midseg/grid.hpp"

namespace midseg {

/// Amplitude (>= 0) and phase (in (-pi, pi]) planes of one channel,
/// DC-centered. ifft2(fft2(x)) reproduces x within 1e-5 max abs error.
struct Spectrum {
    Grid amplitude;
    Grid phase;
};

Spectrum fft2(const Grid& x);
Grid ifft2(const Spectrum& s);

/// In-place 1D complex FFT; inverse=true applies the conjugate transform
/// without normalization. Exposed for tests and reuse.
void fft1d(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace midseg
