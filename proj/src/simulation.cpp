#include "rare/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rare/rng.hpp"

namespace rare {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kGoldenIncrement = kPi * 0.61803398874989484820458683436564; // pi*(sqrt5-1)/2
} // namespace

void PhantomConfig::validate() const {
    if (nx < 2 || ny < 2) throw std::invalid_argument("phantom grid too small");
    if (phases < 1) throw std::invalid_argument("phantom needs at least one phase");
    for (const auto& e : ellipses) {
        if (!(e.ax > 0.0 && e.ay > 0.0)) throw std::invalid_argument("ellipse axes must be positive");
        if (!(e.intensity >= 0.0 && e.intensity <= 1.0))
            throw std::invalid_argument("ellipse intensity must lie in [0, 1]");
        const double reach_x = e.ax + std::abs(e.disp_amp) + edge_softness;
        const double reach_y = e.ay + edge_softness;
        if (e.cx - reach_x < 0.0 || e.cx + reach_x > nx - 1 || e.cy - reach_y < 0.0 ||
            e.cy + reach_y > ny - 1)
            throw std::invalid_argument("ellipse (including motion) leaves the grid");
    }
}

ComplexImage make_phantom(const PhantomConfig& cfg) {
    cfg.validate();
    ComplexImage img({cfg.phases, cfg.nx, cfg.ny});
    const double soft = std::max(cfg.edge_softness, 1e-6);
    for (int p = 0; p < cfg.phases; ++p) {
        const double motion = std::sin(2.0 * kPi * double(p) / double(cfg.phases));
        for (const auto& e : cfg.ellipses) {
            const double cx = e.cx + e.disp_amp * motion;
            const double edge = std::min(e.ax, e.ay);
            for (int ix = 0; ix < cfg.nx; ++ix) {
                for (int iy = 0; iy < cfg.ny; ++iy) {
                    const double u = (ix - cx) / e.ax;
                    const double v = (iy - e.cy) / e.ay;
                    // signed distance to the boundary, in pixels (approximate)
                    const double sd = (std::sqrt(u * u + v * v) - 1.0) * edge;
                    double w = std::clamp(0.5 - sd / soft, 0.0, 1.0);
                    w = w * w * (3.0 - 2.0 * w); // smoothstep
                    if (w <= 0.0) continue;
                    cplx& px = img.at(p, ix, iy);
                    const double prev = px.real();
                    px = cplx(prev + (e.intensity - prev) * w, 0.0);
                }
            }
        }
    }
    return img;
}

PhantomConfig random_phantom_config(int nx, int ny, int phases, int features,
                                    std::uint64_t seed) {
    Rng rng(seed);
    PhantomConfig cfg;
    cfg.nx = nx;
    cfg.ny = ny;
    cfg.phases = phases;
    const double n = std::min(nx, ny);
    Ellipse body;
    body.cx = nx / 2.0 + rng.uniform(-0.02, 0.02) * n;
    body.cy = ny / 2.0 + rng.uniform(-0.02, 0.02) * n;
    body.ax = 0.34 * n;
    body.ay = 0.38 * n;
    body.intensity = 0.25 + 0.1 * rng.uniform01();
    body.disp_amp = 0.015 * n;
    cfg.ellipses.push_back(body);
    for (int f = 0; f < features; ++f) {
        Ellipse e;
        const double ang = rng.uniform(0.0, 2.0 * kPi);
        const double rad = rng.uniform(0.05, 0.22) * n;
        e.cx = body.cx + rad * std::cos(ang);
        e.cy = body.cy + rad * std::sin(ang);
        e.ax = rng.uniform(0.04, 0.11) * n;
        e.ay = rng.uniform(0.04, 0.11) * n;
        e.intensity = rng.uniform(0.35, 1.0);
        e.disp_amp = rng.uniform(0.01, 0.04) * n;
        cfg.ellipses.push_back(e);
    }
    return cfg;
}

void AcquisitionConfig::validate() const {
    if (scheme == AngleScheme::cartesian_full) return;
    if (spokes < 1) throw std::invalid_argument("need at least one spoke");
    if (readout < 2) throw std::invalid_argument("readout must have at least two points");
    if (sample_budget < 0) throw std::invalid_argument("sample budget must be >= 0");
    if (std::isnan(snr_db)) throw std::invalid_argument("snr must be finite or +infinity");
}

long samples_for_rate(double rate, int nx, int ny) {
    if (!(rate > 0.0 && rate <= 1.0)) throw std::invalid_argument("rate must be in (0, 1]");
    return std::lround(rate * double(nx) * double(ny));
}

SamplingPattern radial_trajectory(const AcquisitionConfig& cfg, int phase) {
    cfg.validate();
    if (cfg.scheme == AngleScheme::cartesian_full)
        throw std::invalid_argument("radial_trajectory needs a radial scheme");
    if (phase < 0) throw std::invalid_argument("phase index must be >= 0");
    const long budget =
        cfg.sample_budget > 0 ? cfg.sample_budget : long(cfg.spokes) * cfg.readout;
    const int n_spokes = int((budget + cfg.readout - 1) / cfg.readout);
    SamplingPattern pat;
    pat.scheme = SamplingScheme::radial;
    pat.phase_samples.resize(1);
    auto& ph = pat.phase_samples[0];
    ph.reserve(budget);
    const double r_floor = 0.5 / double(cfg.readout);
    // weight = sample area in Nyquist cells: |r| * (pi/spokes) * (1/readout)
    // * (grid pixels); the full Cartesian grid has cell area 1/(nx*ny) and
    // weight 1 under the same convention
    const double gx = cfg.grid_nx > 0 ? cfg.grid_nx : cfg.readout;
    const double gy = cfg.grid_ny > 0 ? cfg.grid_ny : cfg.readout;
    const double area_scale = kPi / (double(n_spokes) * double(cfg.readout)) * gx * gy;
    long emitted = 0;
    for (int j = 0; j < n_spokes && emitted < budget; ++j) {
        const long global = long(phase) * n_spokes + j;
        double theta;
        if (cfg.scheme == AngleScheme::uniform)
            theta = cfg.angle_offset + double(j) * kPi / double(n_spokes);
        else
            theta = cfg.angle_offset + double(global) * kGoldenIncrement;
        theta = std::fmod(theta, kPi);
        if (theta < 0.0) theta += kPi;
        const double ct = std::cos(theta), st = std::sin(theta);
        for (int s = 0; s < cfg.readout && emitted < budget; ++s, ++emitted) {
            const double r = -0.5 + double(s) / double(cfg.readout);
            ph.push_back({r * ct, r * st, 0.0});
        }
    }
    for (auto& s : ph) {
        const double r = std::hypot(s.kx, s.ky);
        s.weight = std::max(r, r_floor) * area_scale;
    }
    return pat;
}

SamplingPattern radial_pattern(const AcquisitionConfig& cfg, int n_phases) {
    SamplingPattern pat;
    pat.scheme = SamplingScheme::radial;
    pat.phase_samples.reserve(n_phases);
    for (int t = 0; t < n_phases; ++t)
        pat.phase_samples.push_back(std::move(radial_trajectory(cfg, t).phase_samples[0]));
    return pat;
}

CoilMaps synth_coil_maps(int n_coils, int nx, int ny, std::uint64_t seed, bool uniform) {
    if (n_coils < 1) throw std::invalid_argument("need at least one coil");
    CoilMaps c;
    c.nx = nx;
    c.ny = ny;
    if (uniform) {
        c.maps.assign(n_coils, std::vector<cplx>(std::size_t(nx) * ny,
                                                 cplx(1.0 / std::sqrt(double(n_coils)), 0.0)));
        return c;
    }
    Rng rng(seed);
    const double n = std::min(nx, ny);
    const double sigma = 0.45 * n;
    const double scale = 1.0 / std::sqrt(double(n_coils));
    for (int i = 0; i < n_coils; ++i) {
        const double ang = 2.0 * kPi * double(i) / double(n_coils) + rng.uniform(-0.2, 0.2);
        const double cx = nx / 2.0 + 0.55 * (nx / 2.0) * std::cos(ang);
        const double cy = ny / 2.0 + 0.55 * (ny / 2.0) * std::sin(ang);
        const double rx = rng.uniform(-0.5, 0.5); // cycles across the field of view
        const double ry = rng.uniform(-0.5, 0.5);
        const double phi0 = rng.uniform(0.0, 2.0 * kPi);
        std::vector<cplx> map(std::size_t(nx) * ny);
        for (int ix = 0; ix < nx; ++ix)
            for (int iy = 0; iy < ny; ++iy) {
                const double dx = (ix - cx) / sigma, dy = (iy - cy) / sigma;
                const double mag = 0.35 + 0.8 * std::exp(-0.5 * (dx * dx + dy * dy));
                const double phase =
                    phi0 + 2.0 * kPi * (rx * double(ix) / nx + ry * double(iy) / ny);
                map[std::size_t(ix) * ny + iy] =
                    scale * mag * cplx(std::cos(phase), std::sin(phase));
            }
        c.maps.push_back(std::move(map));
    }
    return c;
}

KSpaceData add_noise(const KSpaceData& y, double snr_db, std::uint64_t seed) {
    if (std::isnan(snr_db)) throw std::invalid_argument("snr must be finite or +infinity");
    if (std::isinf(snr_db) && snr_db > 0) return y;
    const double energy = norm2_sq(y);
    const std::size_t m = total_samples(y);
    if (!(energy > 0.0))
        throw std::domain_error("zero-energy measurements: input SNR is undefined");
    const double sigma_sq = energy / (double(m) * std::pow(10.0, snr_db / 10.0));
    const double s = std::sqrt(sigma_sq / 2.0);
    Rng rng(seed);
    KSpaceData out = y;
    for (auto& vec : out.samples)
        for (cplx& v : vec) v += cplx(s * rng.normal(), s * rng.normal());
    out.noise_db = snr_db;
    return out;
}

AcquisitionResult simulate_acquisition(const ComplexImage& groundtruth, const CoilMaps& coils,
                                       const AcquisitionConfig& cfg, TransformEngine engine) {
    cfg.validate();
    AcquisitionResult res;
    if (cfg.scheme == AngleScheme::cartesian_full) {
        res.pattern = full_cartesian_pattern(groundtruth.dims.nx, groundtruth.dims.ny,
                                             groundtruth.dims.phases);
    } else {
        AcquisitionConfig local = cfg;
        if (local.grid_nx == 0) local.grid_nx = groundtruth.dims.nx;
        if (local.grid_ny == 0) local.grid_ny = groundtruth.dims.ny;
        res.pattern = radial_pattern(local, groundtruth.dims.phases);
    }
    MeasurementOperator op(res.pattern, coils, groundtruth.dims, engine);
    res.kspace = add_noise(op.forward(groundtruth), cfg.snr_db, cfg.noise_seed);
    res.pinv = op.pseudoinverse(res.kspace);
    return res;
}

std::vector<ObjectAcquisitions> make_dataset(const std::vector<ComplexImage>& phantoms,
                                             const CoilMaps& coils,
                                             const std::vector<AcquisitionConfig>& acquisitions,
                                             TransformEngine engine) {
    std::vector<ObjectAcquisitions> out;
    for (std::size_t j = 0; j < phantoms.size(); ++j) {
        ObjectAcquisitions obj;
        obj.object_id = int(j);
        for (std::size_t i = 0; i < acquisitions.size(); ++i) {
            obj.acquisition_ids.push_back(int(i));
            obj.images.push_back(
                simulate_acquisition(phantoms[j], coils, acquisitions[i], engine).pinv);
        }
        out.push_back(std::move(obj));
    }
    return out;
}

} // namespace rare
