#pragma once

#include <vector>

#include "rare/image.hpp"

namespace rare {

struct MetricSeries {
    std::vector<double> per_phase;
    double mean = 0.0;
    bool any_identical = false; // a phase matched exactly (infinite PSNR)
};

// 10*log10(L^2 / MSE) per phase on magnitude images; L is the global peak
// magnitude of the reference. Exact matches yield +infinity and set the flag.
// Throws std::domain_error when the reference is identically zero.
MetricSeries psnr(const ComplexImage& x, const ComplexImage& ref);

enum class SsimMode { windowed, global };

// Structural similarity on magnitude images, per phase. Windowed mode slides
// an 11x11 Gaussian window (sigma 1.5) over every fully-contained position
// and averages; global mode evaluates the statistics once over each phase.
// k1 = 0.01, k2 = 0.03; the stabilizers use L = global magnitude range of the
// reference (L = 1 when the reference is constant). Images smaller than the
// window fall back to global mode.
MetricSeries ssim(const ComplexImage& x, const ComplexImage& ref,
                  SsimMode mode = SsimMode::windowed);

} // namespace rare
