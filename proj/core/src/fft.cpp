#include "midseg/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace midseg {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey; n must be a power of two.
void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Bluestein chirp-z for arbitrary n, expressed as a circular convolution of
// power-of-two length.
void fft_bluestein(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<cplx> f(m, cplx(0.0, 0.0)), g(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) f[k] = a[k] * chirp[k];
    for (std::size_t k = 0; k < n; ++k) {
        g[k] = std::conj(chirp[k]);
        if (k != 0) g[m - k] = std::conj(chirp[k]);
    }
    fft_pow2(f, false);
    fft_pow2(g, false);
    for (std::size_t k = 0; k < m; ++k) f[k] *= g[k];
    fft_pow2(f, true);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = f[k] * scale * chirp[k];
}

// Circular shift moving index 0 to index shift.
void rotate_rows(std::vector<cplx>& img, int h, int w, int shift_y, int shift_x,
                 std::vector<cplx>& scratch) {
    scratch.resize(img.size());
    for (int y = 0; y < h; ++y) {
        const int ny = (y + shift_y) % h;
        for (int x = 0; x < w; ++x) {
            const int nx = (x + shift_x) % w;
            scratch[static_cast<std::size_t>(ny) * w + nx] = img[static_cast<std::size_t>(y) * w + x];
        }
    }
    img.swap(scratch);
}

void fft2d_complex(std::vector<cplx>& img, int h, int w, bool inverse) {
    std::vector<cplx> line;
    line.resize(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) line[static_cast<std::size_t>(x)] = img[static_cast<std::size_t>(y) * w + x];
        fft1d(line, inverse);
        for (int x = 0; x < w; ++x) img[static_cast<std::size_t>(y) * w + x] = line[static_cast<std::size_t>(x)];
    }
    line.resize(static_cast<std::size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) line[static_cast<std::size_t>(y)] = img[static_cast<std::size_t>(y) * w + x];
        fft1d(line, inverse);
        for (int y = 0; y < h; ++y) img[static_cast<std::size_t>(y) * w + x] = line[static_cast<std::size_t>(y)];
    }
}

}  // namespace

void fft1d(std::vector<cplx>& a, bool inverse) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        fft_pow2(a, inverse);
    else
        fft_bluestein(a, inverse);
}

Spectrum fft2(const Grid& x) {
    const int h = x.height(), w = x.width();
    std::vector<cplx> img(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) img[i] = cplx(x[i], 0.0);
    fft2d_complex(img, h, w, false);

    // Shift DC (0,0) to the center bin (h/2, w/2).
    std::vector<cplx> scratch;
    rotate_rows(img, h, w, h / 2, w / 2, scratch);

    Spectrum s{Grid(h, w), Grid(h, w)};
    for (std::size_t i = 0; i < img.size(); ++i) {
        s.amplitude[i] = std::abs(img[i]);
        double ph = std::arg(img[i]);
        if (ph <= -kPi) ph = kPi;  // keep phase in (-pi, pi]
        s.phase[i] = ph;
    }
    return s;
}

Grid ifft2(const Spectrum& s) {
    if (!s.amplitude.same_shape(s.phase))
        throw std::invalid_argument("ifft2: amplitude/phase shape mismatch");
    const int h = s.amplitude.height(), w = s.amplitude.width();
    std::vector<cplx> img(s.amplitude.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = std::polar(s.amplitude[i], s.phase[i]);

    // Undo the centering shift, then inverse transform with 1/(H*W).
    std::vector<cplx> scratch;
    rotate_rows(img, h, w, h - h / 2, w - w / 2, scratch);
    fft2d_complex(img, h, w, true);

    Grid out(h, w);
    const double scale = 1.0 / (static_cast<double>(h) * static_cast<double>(w));
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i].real() * scale;
    return out;
}

}  // namespace midseg
