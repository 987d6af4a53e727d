#include "rare/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rare/rng.hpp"

namespace rare {

std::size_t SamplingPattern::total_samples() const {
    std::size_t n = 0;
    for (const auto& ph : phase_samples) n += ph.size();
    return n;
}

void SamplingPattern::validate() const {
    if (phase_samples.empty()) throw std::invalid_argument("sampling pattern has no phases");
    for (const auto& ph : phase_samples) {
        if (ph.empty()) throw std::invalid_argument("sampling pattern has an empty phase");
        for (const auto& s : ph) {
            if (!(s.kx >= -0.5 && s.kx < 0.5 && s.ky >= -0.5 && s.ky < 0.5))
                throw std::invalid_argument("k-space coordinate outside [-0.5, 0.5)");
            if (!(s.weight > 0.0) || !std::isfinite(s.weight))
                throw std::invalid_argument("density weight must be positive and finite");
        }
    }
}

SamplingPattern full_cartesian_pattern(int nx, int ny, int n_phases) {
    SamplingPattern p;
    p.scheme = SamplingScheme::cartesian_mask;
    std::vector<KSample> grid;
    grid.reserve(std::size_t(nx) * ny);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            grid.push_back({double(ix - nx / 2) / nx, double(iy - ny / 2) / ny, 1.0});
    p.phase_samples.assign(n_phases, grid);
    return p;
}

SamplingPattern cartesian_mask_pattern(int nx, int ny, int n_phases, double keep_fraction,
                                       std::uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("keep_fraction must be in (0, 1]");
    const int n = nx * ny;
    const int keep = std::max(1, int(std::lround(keep_fraction * n)));
    Rng rng(seed);
    SamplingPattern p;
    p.scheme = SamplingScheme::cartesian_mask;
    p.phase_samples.resize(n_phases);
    std::vector<int> idx(n);
    for (int t = 0; t < n_phases; ++t) {
        std::iota(idx.begin(), idx.end(), 0);
        // Fisher-Yates with the project RNG so masks are platform-stable.
        for (int i = n - 1; i > 0; --i) {
            const int j = int(rng.uniform01() * (i + 1));
            std::swap(idx[i], idx[std::min(j, i)]);
        }
        std::vector<int> chosen(idx.begin(), idx.begin() + keep);
        std::sort(chosen.begin(), chosen.end());
        auto& ph = p.phase_samples[t];
        ph.reserve(keep);
        for (int c : chosen)
            ph.push_back({double(c / ny - nx / 2) / nx, double(c % ny - ny / 2) / ny, 1.0});
    }
    return p;
}

std::vector<double> CoilMaps::energy() const {
    std::vector<double> e(std::size_t(nx) * ny, 0.0);
    for (const auto& m : maps)
        for (std::size_t p = 0; p < e.size(); ++p) e[p] += std::norm(m[p]);
    return e;
}

void CoilMaps::validate() const {
    if (maps.empty()) throw std::invalid_argument("coil set is empty");
    for (const auto& m : maps) {
        if (int(m.size()) != nx * ny) throw std::invalid_argument("coil map size mismatch");
        for (const cplx& v : m)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw std::invalid_argument("coil map contains non-finite values");
    }
}

CoilMaps uniform_coil_maps(int nx, int ny) {
    CoilMaps c;
    c.nx = nx;
    c.ny = ny;
    c.maps.assign(1, std::vector<cplx>(std::size_t(nx) * ny, cplx(1.0, 0.0)));
    return c;
}

double norm2_sq(const KSpaceData& y) {
    double acc = 0.0;
    for (const auto& v : y.samples)
        for (const cplx& s : v) acc += std::norm(s);
    return acc;
}

std::size_t total_samples(const KSpaceData& y) {
    std::size_t n = 0;
    for (const auto& v : y.samples) n += v.size();
    return n;
}

bool all_finite(const KSpaceData& y) {
    for (const auto& v : y.samples)
        for (const cplx& s : v)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
    return true;
}

MeasurementOperator::MeasurementOperator(SamplingPattern pattern, CoilMaps coils, ImageDims dims,
                                         TransformEngine engine)
    : pattern_(std::move(pattern)), coils_(std::move(coils)), dims_(dims), engine_(engine) {
    pattern_.validate();
    coils_.validate();
    if (coils_.nx != dims_.nx || coils_.ny != dims_.ny)
        throw std::invalid_argument("coil map grid does not match image grid");
    if (pattern_.n_phases() != dims_.phases)
        throw std::invalid_argument("sampling pattern phase count does not match image");
    nu_ = 1.0 / std::sqrt(double(dims_.nx) * double(dims_.ny));
    energy_ = coils_.energy();
    std::vector<double> kx, ky;
    for (int t = 0; t < pattern_.n_phases(); ++t) {
        const auto& ph = pattern_.phase_samples[t];
        kx.resize(ph.size());
        ky.resize(ph.size());
        for (std::size_t s = 0; s < ph.size(); ++s) {
            kx[s] = ph[s].kx;
            ky[s] = ph[s].ky;
        }
        if (engine_ == TransformEngine::direct)
            nplans_.push_back(
                kern::make_nudft_plan(kx.data(), ky.data(), int(ph.size()), dims_.nx, dims_.ny));
        else
            gplans_.push_back(kern::make_gridding_plan(kx.data(), ky.data(), int(ph.size()),
                                                       dims_.nx, dims_.ny, 1.25, 4));
    }
}

void MeasurementOperator::apply_plan_forward(int phase, const cplx* img, cplx* out) const {
    if (engine_ == TransformEngine::direct)
        kern::nudft_forward(nplans_[phase], img, nu_, out);
    else
        kern::gridding_forward(gplans_[phase], img, nu_, out);
}

void MeasurementOperator::apply_plan_adjoint(int phase, const cplx* samples, cplx* img) const {
    if (engine_ == TransformEngine::direct)
        kern::nudft_adjoint(nplans_[phase], samples, nu_, img);
    else
        kern::gridding_adjoint(gplans_[phase], samples, nu_, img);
}

void MeasurementOperator::check_aligned(const KSpaceData& y) const {
    if (y.n_phases != dims_.phases || y.n_coils != coils_.n_coils())
        throw std::invalid_argument("k-space data phase/coil counts do not match operator");
    for (int t = 0; t < y.n_phases; ++t)
        for (int i = 0; i < y.n_coils; ++i)
            if (int(y.at(t, i).size()) != pattern_.samples_in_phase(t))
                throw std::invalid_argument("k-space sample count does not match pattern");
}

KSpaceData MeasurementOperator::zero_data() const {
    KSpaceData y;
    y.n_phases = dims_.phases;
    y.n_coils = coils_.n_coils();
    y.samples.resize(std::size_t(y.n_phases) * y.n_coils);
    for (int t = 0; t < y.n_phases; ++t)
        for (int i = 0; i < y.n_coils; ++i)
            y.at(t, i).assign(pattern_.samples_in_phase(t), cplx(0.0, 0.0));
    return y;
}

KSpaceData MeasurementOperator::forward(const ComplexImage& x) const {
    if (!(x.dims == dims_)) throw std::invalid_argument("image dims do not match operator");
    check_finite(x, "forward input");
    KSpaceData y = zero_data();
    const std::size_t npix = std::size_t(dims_.nx) * dims_.ny;
    std::vector<cplx> weighted(npix);
    for (int t = 0; t < dims_.phases; ++t) {
        const cplx* xt = x.data.data() + std::size_t(t) * npix;
        for (int i = 0; i < coils_.n_coils(); ++i) {
            const auto& s = coils_.maps[i];
            for (std::size_t p = 0; p < npix; ++p) weighted[p] = s[p] * xt[p];
            apply_plan_forward(t, weighted.data(), y.at(t, i).data());
        }
    }
    return y;
}

ComplexImage MeasurementOperator::adjoint(const KSpaceData& y) const {
    check_aligned(y);
    ComplexImage x(dims_);
    const std::size_t npix = std::size_t(dims_.nx) * dims_.ny;
    std::vector<cplx> buf(npix);
    for (int t = 0; t < dims_.phases; ++t) {
        cplx* xt = x.data.data() + std::size_t(t) * npix;
        for (int i = 0; i < coils_.n_coils(); ++i) {
            std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
            apply_plan_adjoint(t, y.at(t, i).data(), buf.data());
            const auto& s = coils_.maps[i];
            for (std::size_t p = 0; p < npix; ++p) xt[p] += std::conj(s[p]) * buf[p];
        }
    }
    return x;
}

ComplexImage MeasurementOperator::pseudoinverse(const KSpaceData& y) const {
    check_aligned(y);
    for (double e : energy_)
        if (!(e > 1e-14))
            throw std::domain_error("coil energy vanishes at a pixel; pseudoinverse undefined");
    KSpaceData weighted = y;
    for (int t = 0; t < dims_.phases; ++t) {
        const auto& ph = pattern_.phase_samples[t];
        for (int i = 0; i < coils_.n_coils(); ++i) {
            auto& v = weighted.at(t, i);
            for (std::size_t s = 0; s < v.size(); ++s) v[s] *= ph[s].weight;
        }
    }
    ComplexImage x = adjoint(weighted);
    const std::size_t npix = std::size_t(dims_.nx) * dims_.ny;
    for (int t = 0; t < dims_.phases; ++t) {
        cplx* xt = x.data.data() + std::size_t(t) * npix;
        for (std::size_t p = 0; p < npix; ++p) xt[p] /= energy_[p];
    }
    return x;
}

ComplexImage MeasurementOperator::datafid_gradient(const ComplexImage& x,
                                                   const KSpaceData& y) const {
    check_aligned(y);
    KSpaceData r = forward(x);
    for (std::size_t v = 0; v < r.samples.size(); ++v)
        for (std::size_t s = 0; s < r.samples[v].size(); ++s)
            r.samples[v][s] -= y.samples[v][s];
    return adjoint(r);
}

double MeasurementOperator::datafid_value(const ComplexImage& x, const KSpaceData& y) const {
    check_aligned(y);
    KSpaceData r = forward(x);
    double acc = 0.0;
    for (std::size_t v = 0; v < r.samples.size(); ++v)
        for (std::size_t s = 0; s < r.samples[v].size(); ++s)
            acc += std::norm(r.samples[v][s] - y.samples[v][s]);
    return 0.5 * acc;
}

double operator_norm_estimate(const MeasurementOperator& op, int iters, std::uint64_t seed) {
    if (iters < 1) throw std::invalid_argument("operator_norm_estimate needs iters >= 1");
    Rng rng(seed);
    ComplexImage b(op.dims());
    for (cplx& v : b.data) v = cplx(rng.normal(), rng.normal());
    const double bn = norm2(b);
    if (bn == 0.0) return 0.0;
    for (cplx& v : b.data) v /= bn;
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        ComplexImage ab = op.adjoint(op.forward(b));
        lambda = dot(b, ab).real(); // Rayleigh quotient; b is unit length
        const double n = norm2(ab);
        if (n == 0.0) return 0.0;
        for (cplx& v : ab.data) v /= n;
        b = std::move(ab);
    }
    return lambda;
}

} // namespace rare
