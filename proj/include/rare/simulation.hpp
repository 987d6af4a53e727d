#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "rare/image.hpp"
#include "rare/operators.hpp"
#include "rare/training.hpp"

namespace rare {

// Axis-aligned soft-edged ellipse; center/axes in pixel units. The center row
// oscillates sinusoidally across phases (amplitude in pixels), the simulated
// respiration motion.
struct Ellipse {
    double cx = 0.0, cy = 0.0; // center (row, column)
    double ax = 1.0, ay = 1.0; // semi-axes, > 0
    double intensity = 1.0;    // painted value, in [0, 1]
    double disp_amp = 0.0;     // vertical displacement amplitude
};

struct PhantomConfig {
    int nx = 64, ny = 64;
    int phases = 10;
    std::vector<Ellipse> ellipses;
    double edge_softness = 1.5; // soft-edge width in pixels
    void validate() const;      // ellipses (plus motion) must stay inside the grid
};

// Paint-over rasterization per phase; real-valued, intensities in [0, 1].
// Phase p shifts each ellipse center row by disp_amp * sin(2*pi*p / phases).
ComplexImage make_phantom(const PhantomConfig& cfg);

// Seeded generator of a plausible multi-ellipse phantom (one body outline
// plus jittered interior features), for multi-object studies.
PhantomConfig random_phantom_config(int nx, int ny, int phases, int features,
                                    std::uint64_t seed);

enum class AngleScheme { uniform, golden, cartesian_full };

struct AcquisitionConfig {
    int spokes = 8;  // per phase
    int readout = 64; // points per spoke
    AngleScheme scheme = AngleScheme::golden;
    double angle_offset = 0.0; // whole-fan rotation (radians); distinguishes acquisitions
    // optional exact per-phase sample budget; when > 0 the final spoke is
    // truncated so each phase has exactly this many samples
    long sample_budget = 0;
    // image grid behind the density weights (weights are measured in Nyquist
    // cells, so the full-Cartesian case has weight 1); 0 = readout x readout
    int grid_nx = 0, grid_ny = 0;
    double snr_db = std::numeric_limits<double>::infinity(); // +inf = noiseless
    std::uint64_t noise_seed = 0;
    void validate() const;
};

// Spokes through the k-space origin for one phase: readout point s sits at
// radius -0.5 + s/readout along the spoke direction. Golden-angle spacing is
// pi*(sqrt(5)-1)/2 (about 111.25 degrees), continued across phases; the
// uniform scheme spaces spokes by pi/spokes, identical in every phase.
SamplingPattern radial_trajectory(const AcquisitionConfig& cfg, int phase);
// All phases assembled into one pattern.
SamplingPattern radial_pattern(const AcquisitionConfig& cfg, int n_phases);

// Per-phase sample count hitting the given fraction of the grid, rounded to
// the nearest sample.
long samples_for_rate(double rate, int nx, int ny);

// Smooth complex coil profiles (Gaussian magnitude bumps at distinct centers,
// linear phase ramps), scaled so the pixelwise energy sum stays within
// [0.1, 4]. With uniform = true returns all-ones maps instead.
CoilMaps synth_coil_maps(int n_coils, int nx, int ny, std::uint64_t seed,
                         bool uniform = false);

// Adds circular complex Gaussian noise with per-sample variance
// ||y||^2 / (m * 10^(snr_db/10)); infinite snr_db returns y unchanged.
// Throws std::domain_error when y has zero energy and snr_db is finite.
KSpaceData add_noise(const KSpaceData& y, double snr_db, std::uint64_t seed);

struct AcquisitionResult {
    SamplingPattern pattern;
    KSpaceData kspace;
    ComplexImage pinv;
};

// One simulated acquisition of an object: trajectory, forward model, noise,
// density-compensated reconstruction.
AcquisitionResult simulate_acquisition(const ComplexImage& groundtruth, const CoilMaps& coils,
                                       const AcquisitionConfig& cfg,
                                       TransformEngine engine = TransformEngine::direct);

// Training dataset: per object, the reconstructions of every acquisition.
std::vector<ObjectAcquisitions> make_dataset(const std::vector<ComplexImage>& phantoms,
                                             const CoilMaps& coils,
                                             const std::vector<AcquisitionConfig>& acquisitions,
                                             TransformEngine engine = TransformEngine::direct);

} // namespace rare
