#include "rare/fft.hpp"

#include <cmath>
#include <cstdint>

namespace rare::fft {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey, n a power of two.
void fft_pow2(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / double(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Bluestein chirp-z: arbitrary-length DFT via one pow2 convolution.
void fft_bluestein(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<cplx> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // angle = sign * pi * k^2 / n, with k^2 reduced mod 2n for accuracy
        const std::uint64_t k2 = (std::uint64_t(k) * k) % (2 * n);
        const double ang = sign * kPi * double(k2) / double(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> p(m, cplx(0, 0)), q(m, cplx(0, 0));
    for (std::size_t k = 0; k < n; ++k) p[k] = a[k] * chirp[k];
    q[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) q[k] = q[m - k] = std::conj(chirp[k]);
    fft_pow2(p, -1);
    fft_pow2(q, -1);
    for (std::size_t k = 0; k < m; ++k) p[k] *= q[k];
    fft_pow2(p, +1);
    const double inv_m = 1.0 / double(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = p[k] * inv_m * chirp[k];
}

void fft_any(std::vector<cplx>& a, int sign) {
    if (a.size() <= 1) return;
    if (is_pow2(a.size()))
        fft_pow2(a, sign);
    else
        fft_bluestein(a, sign);
}

// Rotate so that the centered origin (floor(n/2)) moves to index 0 (inverse
// shift) or back (forward shift).
void shift(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    const std::size_t c = n / 2;
    std::vector<cplx> t(n);
    if (inverse) {
        for (std::size_t i = 0; i < n; ++i) t[i] = a[(i + c) % n];
    } else {
        for (std::size_t i = 0; i < n; ++i) t[(i + c) % n] = a[i];
    }
    a.swap(t);
}

} // namespace

void transform(std::vector<cplx>& a, int sign) { fft_any(a, sign); }

void transform2_centered(std::vector<cplx>& grid, int nx, int ny, int sign) {
    std::vector<cplx> line;
    // rows
    line.resize(ny);
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) line[iy] = grid[std::size_t(ix) * ny + iy];
        shift(line, true);
        fft_any(line, sign);
        shift(line, false);
        for (int iy = 0; iy < ny; ++iy) grid[std::size_t(ix) * ny + iy] = line[iy];
    }
    // columns
    line.resize(nx);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) line[ix] = grid[std::size_t(ix) * ny + iy];
        shift(line, true);
        fft_any(line, sign);
        shift(line, false);
        for (int ix = 0; ix < nx; ++ix) grid[std::size_t(ix) * ny + iy] = line[ix];
    }
}

} // namespace rare::fft
