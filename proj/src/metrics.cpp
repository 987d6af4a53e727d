#include "rare/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rare {

namespace {

double finite_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

struct SsimConstants {
    double c1, c2;
};

double ssim_statistic(double mx, double my, double vx, double vy, double vxy,
                      const SsimConstants& c) {
    return ((2.0 * mx * my + c.c1) * (2.0 * vxy + c.c2)) /
           ((mx * mx + my * my + c.c1) * (vx + vy + c.c2));
}

} // namespace

MetricSeries psnr(const ComplexImage& x, const ComplexImage& ref) {
    check_same_dims(x, ref, "psnr");
    double peak = 0.0;
    for (const cplx& v : ref.data) peak = std::max(peak, std::abs(v));
    if (!(peak > 0.0)) throw std::domain_error("psnr: reference image is identically zero");
    MetricSeries out;
    const std::size_t npix = ref.dims.pixels();
    for (int p = 0; p < ref.dims.phases; ++p) {
        double mse = 0.0;
        const std::size_t off = std::size_t(p) * npix;
        for (std::size_t i = 0; i < npix; ++i) {
            const double d = std::abs(x.data[off + i]) - std::abs(ref.data[off + i]);
            mse += d * d;
        }
        mse /= double(npix);
        if (mse == 0.0) {
            out.per_phase.push_back(std::numeric_limits<double>::infinity());
            out.any_identical = true;
        } else {
            out.per_phase.push_back(10.0 * std::log10(peak * peak / mse));
        }
    }
    out.mean = finite_mean(out.per_phase);
    return out;
}

MetricSeries ssim(const ComplexImage& x, const ComplexImage& ref, SsimMode mode) {
    check_same_dims(x, ref, "ssim");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const cplx& v : ref.data) {
        const double m = std::abs(v);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    double range = hi - lo;
    if (!(range > 0.0)) range = 1.0; // constant reference: documented fallback
    const SsimConstants c{(0.01 * range) * (0.01 * range), (0.03 * range) * (0.03 * range)};

    const int nx = ref.dims.nx, ny = ref.dims.ny;
    constexpr int W = 11;
    constexpr double kSigma = 1.5;
    const bool windowed = (mode == SsimMode::windowed) && nx >= W && ny >= W;

    MetricSeries out;
    for (int p = 0; p < ref.dims.phases; ++p) {
        const std::vector<double> mx = magnitude_phase(x, p);
        const std::vector<double> mr = magnitude_phase(ref, p);
        double score;
        if (!windowed) {
            const double n = double(mx.size());
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t i = 0; i < mx.size(); ++i) {
                sx += mx[i];
                sy += mr[i];
                sxx += mx[i] * mx[i];
                syy += mr[i] * mr[i];
                sxy += mx[i] * mr[i];
            }
            const double ux = sx / n, uy = sy / n;
            score = ssim_statistic(ux, uy, sxx / n - ux * ux, syy / n - uy * uy,
                                   sxy / n - ux * uy, c);
        } else {
            // normalized 11x11 Gaussian window
            double w[W][W];
            double wsum = 0.0;
            for (int a = 0; a < W; ++a)
                for (int b = 0; b < W; ++b) {
                    const double da = a - W / 2, db = b - W / 2;
                    w[a][b] = std::exp(-(da * da + db * db) / (2.0 * kSigma * kSigma));
                    wsum += w[a][b];
                }
            for (int a = 0; a < W; ++a)
                for (int b = 0; b < W; ++b) w[a][b] /= wsum;

            double acc = 0.0;
            long count = 0;
            for (int ix = 0; ix + W <= nx; ++ix)
                for (int iy = 0; iy + W <= ny; ++iy) {
                    double ux = 0, uy = 0, uxx = 0, uyy = 0, uxy = 0;
                    for (int a = 0; a < W; ++a)
                        for (int b = 0; b < W; ++b) {
                            const double wv = w[a][b];
                            const double xv = mx[std::size_t(ix + a) * ny + (iy + b)];
                            const double yv = mr[std::size_t(ix + a) * ny + (iy + b)];
                            ux += wv * xv;
                            uy += wv * yv;
                            uxx += wv * xv * xv;
                            uyy += wv * yv * yv;
                            uxy += wv * xv * yv;
                        }
                    acc += ssim_statistic(ux, uy, uxx - ux * ux, uyy - uy * uy, uxy - ux * uy,
                                          c);
                    ++count;
                }
            score = acc / double(count);
        }
        out.per_phase.push_back(score);
    }
    out.mean = finite_mean(out.per_phase);
    return out;
}

} // namespace rare
