#include "rare/kernels.hpp"

#include <cmath>

#include "rare/fft.hpp"

namespace rare {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= q / (double(k) * double(k));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// Kaiser-Bessel interpolation kernel of width W (grid units), zero outside.
double kb_kernel(double u, double width, double beta) {
    const double t = 2.0 * u / width;
    const double arg = 1.0 - t * t;
    if (arg < 0.0) return 0.0;
    return bessel_i0(beta * std::sqrt(arg));
}

// Continuous Fourier transform of kb_kernel at normalized frequency nu.
double kb_kernel_ft(double nu, double width, double beta) {
    const double a = kTwoPi / 2.0 * width * nu; // pi * W * nu
    const double t = beta * beta - a * a;
    if (t > 1e-12) {
        const double r = std::sqrt(t);
        return width * std::sinh(r) / r;
    }
    if (t < -1e-12) {
        const double r = std::sqrt(-t);
        return width * std::sin(r) / r;
    }
    return width;
}

int wrap_index(int g, int n) {
    int r = g % n;
    return r < 0 ? r + n : r;
}

} // namespace

namespace kern {

NudftPlan make_nudft_plan(const double* kx, const double* ky, int m, int nx, int ny) {
    NudftPlan pl;
    pl.nx = nx;
    pl.ny = ny;
    pl.m = m;
    pl.ex.resize(std::size_t(m) * nx);
    pl.ey.resize(std::size_t(m) * ny);
    const int cx = nx / 2, cy = ny / 2;
#pragma omp parallel for schedule(static)
    for (int s = 0; s < m; ++s) {
        for (int ix = 0; ix < nx; ++ix) {
            const double ang = -kTwoPi * kx[s] * double(ix - cx);
            pl.ex[std::size_t(s) * nx + ix] = cplx(std::cos(ang), std::sin(ang));
        }
        for (int iy = 0; iy < ny; ++iy) {
            const double ang = -kTwoPi * ky[s] * double(iy - cy);
            pl.ey[std::size_t(s) * ny + iy] = cplx(std::cos(ang), std::sin(ang));
        }
    }
    return pl;
}

void nudft_forward(const NudftPlan& pl, const cplx* img, double nu, cplx* out) {
    const int nx = pl.nx, ny = pl.ny;
#pragma omp parallel for schedule(static)
    for (int s = 0; s < pl.m; ++s) {
        const cplx* ex = &pl.ex[std::size_t(s) * nx];
        const cplx* ey = &pl.ey[std::size_t(s) * ny];
        cplx acc(0.0, 0.0);
        for (int ix = 0; ix < nx; ++ix) {
            const cplx* row = img + std::size_t(ix) * ny;
            cplx racc(0.0, 0.0);
            for (int iy = 0; iy < ny; ++iy) racc += row[iy] * ey[iy];
            acc += ex[ix] * racc;
        }
        out[s] = nu * acc;
    }
}

void nudft_adjoint(const NudftPlan& pl, const cplx* samples, double nu, cplx* img_out) {
    const int nx = pl.nx, ny = pl.ny, m = pl.m;
    std::vector<cplx> scaled(m);
    for (int s = 0; s < m; ++s) scaled[s] = nu * samples[s];
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < nx; ++ix) {
        cplx* row = img_out + std::size_t(ix) * ny;
        for (int s = 0; s < m; ++s) {
            const cplx a = std::conj(pl.ex[std::size_t(s) * nx + ix]) * scaled[s];
            const cplx* ey = &pl.ey[std::size_t(s) * ny];
            for (int iy = 0; iy < ny; ++iy) row[iy] += a * std::conj(ey[iy]);
        }
    }
}

GriddingPlan make_gridding_plan(const double* kx, const double* ky, int m, int nx, int ny,
                                double oversampling, int width) {
    GriddingPlan pl;
    pl.nx = nx;
    pl.ny = ny;
    pl.nx_os = 2 * int(std::ceil(oversampling * nx / 2.0));
    pl.ny_os = 2 * int(std::ceil(oversampling * ny / 2.0));
    pl.m = m;
    pl.taps = width + 1;
    const double beta =
        kTwoPi / 2.0 *
        std::sqrt(width * width / (oversampling * oversampling) * (oversampling - 0.5) *
                      (oversampling - 0.5) -
                  0.8);
    pl.gx0.resize(m);
    pl.gy0.resize(m);
    pl.wx.assign(std::size_t(m) * pl.taps, 0.0);
    pl.wy.assign(std::size_t(m) * pl.taps, 0.0);
    for (int s = 0; s < m; ++s) {
        const double fx = kx[s] * pl.nx_os;
        const double fy = ky[s] * pl.ny_os;
        pl.gx0[s] = int(std::ceil(fx - width / 2.0));
        pl.gy0[s] = int(std::ceil(fy - width / 2.0));
        for (int j = 0; j < pl.taps; ++j) {
            pl.wx[std::size_t(s) * pl.taps + j] = kb_kernel(fx - (pl.gx0[s] + j), width, beta);
            pl.wy[std::size_t(s) * pl.taps + j] = kb_kernel(fy - (pl.gy0[s] + j), width, beta);
        }
    }
    pl.dx.resize(nx);
    pl.dy.resize(ny);
    for (int ix = 0; ix < nx; ++ix)
        pl.dx[ix] = 1.0 / kb_kernel_ft(double(ix - nx / 2) / pl.nx_os, width, beta);
    for (int iy = 0; iy < ny; ++iy)
        pl.dy[iy] = 1.0 / kb_kernel_ft(double(iy - ny / 2) / pl.ny_os, width, beta);
    return pl;
}

void gridding_forward(const GriddingPlan& pl, const cplx* img, double nu, cplx* out) {
    const int cx = pl.nx / 2, cy = pl.ny / 2;
    const int cxo = pl.nx_os / 2, cyo = pl.ny_os / 2;
    std::vector<cplx> grid(std::size_t(pl.nx_os) * pl.ny_os, cplx(0, 0));
    for (int ix = 0; ix < pl.nx; ++ix)
        for (int iy = 0; iy < pl.ny; ++iy)
            grid[std::size_t(ix - cx + cxo) * pl.ny_os + (iy - cy + cyo)] =
                img[std::size_t(ix) * pl.ny + iy] * (pl.dx[ix] * pl.dy[iy]);
    fft::transform2_centered(grid, pl.nx_os, pl.ny_os, -1);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < pl.m; ++s) {
        cplx acc(0.0, 0.0);
        for (int jx = 0; jx < pl.taps; ++jx) {
            const double wx = pl.wx[std::size_t(s) * pl.taps + jx];
            if (wx == 0.0) continue;
            const int gx = wrap_index(pl.gx0[s] + jx + cxo, pl.nx_os);
            cplx racc(0.0, 0.0);
            for (int jy = 0; jy < pl.taps; ++jy) {
                const double wy = pl.wy[std::size_t(s) * pl.taps + jy];
                if (wy == 0.0) continue;
                const int gy = wrap_index(pl.gy0[s] + jy + cyo, pl.ny_os);
                racc += wy * grid[std::size_t(gx) * pl.ny_os + gy];
            }
            acc += wx * racc;
        }
        out[s] = nu * acc;
    }
}

void gridding_adjoint(const GriddingPlan& pl, const cplx* samples, double nu, cplx* img_out) {
    const int cx = pl.nx / 2, cy = pl.ny / 2;
    const int cxo = pl.nx_os / 2, cyo = pl.ny_os / 2;
    std::vector<cplx> grid(std::size_t(pl.nx_os) * pl.ny_os, cplx(0, 0));
    for (int s = 0; s < pl.m; ++s) {
        const cplx b = nu * samples[s];
        for (int jx = 0; jx < pl.taps; ++jx) {
            const double wx = pl.wx[std::size_t(s) * pl.taps + jx];
            if (wx == 0.0) continue;
            const int gx = wrap_index(pl.gx0[s] + jx + cxo, pl.nx_os);
            const cplx bx = wx * b;
            for (int jy = 0; jy < pl.taps; ++jy) {
                const double wy = pl.wy[std::size_t(s) * pl.taps + jy];
                if (wy == 0.0) continue;
                const int gy = wrap_index(pl.gy0[s] + jy + cyo, pl.ny_os);
                grid[std::size_t(gx) * pl.ny_os + gy] += wy * bx;
            }
        }
    }
    fft::transform2_centered(grid, pl.nx_os, pl.ny_os, +1);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < pl.nx; ++ix)
        for (int iy = 0; iy < pl.ny; ++iy)
            img_out[std::size_t(ix) * pl.ny + iy] +=
                grid[std::size_t(ix - cx + cxo) * pl.ny_os + (iy - cy + cyo)] *
                (pl.dx[ix] * pl.dy[iy]);
}

void conv3d_forward(const ConvShape& s, const double* w, const double* bias, const double* in,
                    int P, int X, int Y, double* out) {
    const int cp = s.kp / 2, cx = s.kx / 2, cy = s.ky / 2;
    const std::size_t vol = std::size_t(P) * X * Y;
#pragma omp parallel for collapse(2) schedule(static)
    for (int oc = 0; oc < s.out_ch; ++oc) {
        for (int p = 0; p < P; ++p) {
            for (int x = 0; x < X; ++x) {
                for (int y = 0; y < Y; ++y) {
                    double acc = bias ? bias[oc] : 0.0;
                    for (int ic = 0; ic < s.in_ch; ++ic) {
                        const double* wv =
                            w + ((std::size_t(oc) * s.in_ch + ic) * s.kp) * s.kx * s.ky;
                        const double* iv = in + std::size_t(ic) * vol;
                        for (int dp = 0; dp < s.kp; ++dp) {
                            const int ip = p + dp - cp;
                            if (ip < 0 || ip >= P) continue;
                            for (int dx = 0; dx < s.kx; ++dx) {
                                const int jx = x + dx - cx;
                                if (jx < 0 || jx >= X) continue;
                                const double* irow = iv + (std::size_t(ip) * X + jx) * Y;
                                const double* wrow = wv + (std::size_t(dp) * s.kx + dx) * s.ky;
                                for (int dy = 0; dy < s.ky; ++dy) {
                                    const int jy = y + dy - cy;
                                    if (jy < 0 || jy >= Y) continue;
                                    acc += wrow[dy] * irow[jy];
                                }
                            }
                        }
                    }
                    out[(std::size_t(oc) * P + p) * std::size_t(X) * Y + std::size_t(x) * Y + y] =
                        acc;
                }
            }
        }
    }
}

void conv3d_backward_input(const ConvShape& s, const double* w, const double* dout, int P, int X,
                           int Y, double* din) {
    const int cp = s.kp / 2, cx = s.kx / 2, cy = s.ky / 2;
    const std::size_t vol = std::size_t(P) * X * Y;
#pragma omp parallel for collapse(2) schedule(static)
    for (int ic = 0; ic < s.in_ch; ++ic) {
        for (int p = 0; p < P; ++p) {
            for (int x = 0; x < X; ++x) {
                for (int y = 0; y < Y; ++y) {
                    double acc = 0.0;
                    for (int oc = 0; oc < s.out_ch; ++oc) {
                        const double* wv =
                            w + ((std::size_t(oc) * s.in_ch + ic) * s.kp) * s.kx * s.ky;
                        const double* ov = dout + std::size_t(oc) * vol;
                        for (int dp = 0; dp < s.kp; ++dp) {
                            const int op = p - dp + cp;
                            if (op < 0 || op >= P) continue;
                            for (int dx = 0; dx < s.kx; ++dx) {
                                const int ox = x - dx + cx;
                                if (ox < 0 || ox >= X) continue;
                                const double* orow = ov + (std::size_t(op) * X + ox) * Y;
                                const double* wrow = wv + (std::size_t(dp) * s.kx + dx) * s.ky;
                                for (int dy = 0; dy < s.ky; ++dy) {
                                    const int oy = y - dy + cy;
                                    if (oy < 0 || oy >= Y) continue;
                                    acc += wrow[dy] * orow[oy];
                                }
                            }
                        }
                    }
                    din[(std::size_t(ic) * P + p) * std::size_t(X) * Y + std::size_t(x) * Y + y] =
                        acc;
                }
            }
        }
    }
}

void conv3d_backward_weights(const ConvShape& s, const double* in, const double* dout, int P,
                             int X, int Y, double* dw, double* db) {
    const int cp = s.kp / 2, cx = s.kx / 2, cy = s.ky / 2;
    const std::size_t vol = std::size_t(P) * X * Y;
    const std::size_t ksz = std::size_t(s.kp) * s.kx * s.ky;
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_ch; ++oc) {
        const double* ov = dout + std::size_t(oc) * vol;
        double bacc = 0.0;
        for (std::size_t i = 0; i < vol; ++i) bacc += ov[i];
        db[oc] = bacc;
        for (int ic = 0; ic < s.in_ch; ++ic) {
            const double* iv = in + std::size_t(ic) * vol;
            double* wv = dw + (std::size_t(oc) * s.in_ch + ic) * ksz;
            for (std::size_t i = 0; i < ksz; ++i) wv[i] = 0.0;
            for (int p = 0; p < P; ++p) {
                for (int x = 0; x < X; ++x) {
                    for (int y = 0; y < Y; ++y) {
                        const double d = ov[(std::size_t(p) * X + x) * Y + y];
                        for (int dp = 0; dp < s.kp; ++dp) {
                            const int ip = p + dp - cp;
                            if (ip < 0 || ip >= P) continue;
                            for (int dx = 0; dx < s.kx; ++dx) {
                                const int jx = x + dx - cx;
                                if (jx < 0 || jx >= X) continue;
                                const double* irow = iv + (std::size_t(ip) * X + jx) * Y;
                                double* wrow = wv + (std::size_t(dp) * s.kx + dx) * s.ky;
                                for (int dy = 0; dy < s.ky; ++dy) {
                                    const int jy = y + dy - cy;
                                    if (jy < 0 || jy >= Y) continue;
                                    wrow[dy] += d * irow[jy];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

} // namespace kern

namespace ref {

void nudft_forward(const kern::NudftPlan& pl, const cplx* img, double nu, cplx* out) {
    const int nx = pl.nx, ny = pl.ny;
    for (int s = 0; s < pl.m; ++s) {
        const cplx* ex = &pl.ex[std::size_t(s) * nx];
        const cplx* ey = &pl.ey[std::size_t(s) * ny];
        cplx acc(0.0, 0.0);
        for (int ix = 0; ix < nx; ++ix) {
            const cplx* row = img + std::size_t(ix) * ny;
            cplx racc(0.0, 0.0);
            for (int iy = 0; iy < ny; ++iy) racc += row[iy] * ey[iy];
            acc += ex[ix] * racc;
        }
        out[s] = nu * acc;
    }
}

void nudft_adjoint(const kern::NudftPlan& pl, const cplx* samples, double nu, cplx* img_out) {
    const int nx = pl.nx, ny = pl.ny;
    for (int s = 0; s < pl.m; ++s) {
        const cplx b = nu * samples[s];
        for (int ix = 0; ix < nx; ++ix) {
            const cplx a = std::conj(pl.ex[std::size_t(s) * nx + ix]) * b;
            const cplx* ey = &pl.ey[std::size_t(s) * ny];
            cplx* row = img_out + std::size_t(ix) * ny;
            for (int iy = 0; iy < ny; ++iy) row[iy] += a * std::conj(ey[iy]);
        }
    }
}

void conv3d_forward(const kern::ConvShape& s, const double* w, const double* bias,
                    const double* in, int P, int X, int Y, double* out) {
    const int cp = s.kp / 2, cx = s.kx / 2, cy = s.ky / 2;
    const std::size_t vol = std::size_t(P) * X * Y;
    for (int oc = 0; oc < s.out_ch; ++oc)
        for (int p = 0; p < P; ++p)
            for (int x = 0; x < X; ++x)
                for (int y = 0; y < Y; ++y) {
                    double acc = bias ? bias[oc] : 0.0;
                    for (int ic = 0; ic < s.in_ch; ++ic)
                        for (int dp = 0; dp < s.kp; ++dp)
                            for (int dx = 0; dx < s.kx; ++dx)
                                for (int dy = 0; dy < s.ky; ++dy) {
                                    const int ip = p + dp - cp, jx = x + dx - cx, jy = y + dy - cy;
                                    if (ip < 0 || ip >= P || jx < 0 || jx >= X || jy < 0 ||
                                        jy >= Y)
                                        continue;
                                    acc += w[(((std::size_t(oc) * s.in_ch + ic) * s.kp + dp) *
                                                  s.kx +
                                              dx) *
                                                 s.ky +
                                             dy] *
                                           in[std::size_t(ic) * vol +
                                              (std::size_t(ip) * X + jx) * Y + jy];
                                }
                    out[(std::size_t(oc) * P + p) * std::size_t(X) * Y + std::size_t(x) * Y + y] =
                        acc;
                }
}

void conv3d_backward_input(const kern::ConvShape& s, const double* w, const double* dout, int P,
                           int X, int Y, double* din) {
    const int cp = s.kp / 2, cx = s.kx / 2, cy = s.ky / 2;
    const std::size_t vol = std::size_t(P) * X * Y;
    for (int ic = 0; ic < s.in_ch; ++ic)
        for (int p = 0; p < P; ++p)
            for (int x = 0; x < X; ++x)
                for (int y = 0; y < Y; ++y) {
                    double acc = 0.0;
                    for (int oc = 0; oc < s.out_ch; ++oc)
                        for (int dp = 0; dp < s.kp; ++dp)
                            for (int dx = 0; dx < s.kx; ++dx)
                                for (int dy = 0; dy < s.ky; ++dy) {
                                    const int op = p - dp + cp, ox = x - dx + cx, oy = y - dy + cy;
                                    if (op < 0 || op >= P || ox < 0 || ox >= X || oy < 0 ||
                                        oy >= Y)
                                        continue;
                                    acc += w[(((std::size_t(oc) * s.in_ch + ic) * s.kp + dp) *
                                                  s.kx +
                                              dx) *
                                                 s.ky +
                                             dy] *
                                           dout[std::size_t(oc) * vol +
                                                (std::size_t(op) * X + ox) * Y + oy];
                                }
                    din[(std::size_t(ic) * P + p) * std::size_t(X) * Y + std::size_t(x) * Y + y] =
                        acc;
                }
}

void conv3d_backward_weights(const kern::ConvShape& s, const double* in, const double* dout,
                             int P, int X, int Y, double* dw, double* db) {
    const int cp = s.kp / 2, cx = s.kx / 2, cy = s.ky / 2;
    const std::size_t vol = std::size_t(P) * X * Y;
    const std::size_t ksz = std::size_t(s.kp) * s.kx * s.ky;
    for (int oc = 0; oc < s.out_ch; ++oc) {
        const double* ov = dout + std::size_t(oc) * vol;
        double bacc = 0.0;
        for (std::size_t i = 0; i < vol; ++i) bacc += ov[i];
        db[oc] = bacc;
        for (int ic = 0; ic < s.in_ch; ++ic) {
            const double* iv = in + std::size_t(ic) * vol;
            double* wv = dw + (std::size_t(oc) * s.in_ch + ic) * ksz;
            for (std::size_t i = 0; i < ksz; ++i) wv[i] = 0.0;
            for (int p = 0; p < P; ++p)
                for (int x = 0; x < X; ++x)
                    for (int y = 0; y < Y; ++y) {
                        const double d = ov[(std::size_t(p) * X + x) * Y + y];
                        for (int dp = 0; dp < s.kp; ++dp)
                            for (int dx = 0; dx < s.kx; ++dx)
                                for (int dy = 0; dy < s.ky; ++dy) {
                                    const int ip = p + dp - cp, jx = x + dx - cx, jy = y + dy - cy;
                                    if (ip < 0 || ip >= P || jx < 0 || jx >= X || jy < 0 ||
                                        jy >= Y)
                                        continue;
                                    wv[(std::size_t(dp) * s.kx + dx) * s.ky + dy] +=
                                        d * iv[(std::size_t(ip) * X + jx) * Y + jy];
                                }
                    }
        }
    }
}

} // namespace ref

} // namespace rare
