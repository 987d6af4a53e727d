#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rare/image.hpp"
#include "rare/kernels.hpp"

namespace rare {

// k-space sample location in cycles per pixel, each component in [-0.5, 0.5),
// plus a density-compensation weight used by the pseudoinverse.
struct KSample {
    double kx = 0.0;
    double ky = 0.0;
    double weight = 1.0;
};

enum class SamplingScheme { radial, cartesian_mask };

struct SamplingPattern {
    SamplingScheme scheme = SamplingScheme::radial;
    std::vector<std::vector<KSample>> phase_samples;

    int n_phases() const { return int(phase_samples.size()); }
    int samples_in_phase(int t) const { return int(phase_samples[t].size()); }
    std::size_t total_samples() const;
    // Throws std::invalid_argument on out-of-range coordinates, non-positive
    // weights, or an empty phase.
    void validate() const;
};

// Every grid frequency (ix-nx/2)/nx x (iy-ny/2)/ny once per phase, weight 1.
SamplingPattern full_cartesian_pattern(int nx, int ny, int n_phases);
// Random subset of grid frequencies (unit weights), keep_fraction in (0, 1].
SamplingPattern cartesian_mask_pattern(int nx, int ny, int n_phases, double keep_fraction,
                                       std::uint64_t seed);

struct CoilMaps {
    int nx = 0, ny = 0;
    std::vector<std::vector<cplx>> maps; // each nx*ny, row-major [ix*ny + iy]

    int n_coils() const { return int(maps.size()); }
    std::vector<double> energy() const; // sum_i |S_i|^2 per pixel
    void validate() const;
};

// Single all-ones coil (the unit-sensitivity case).
CoilMaps uniform_coil_maps(int nx, int ny);

struct KSpaceData {
    int n_phases = 0;
    int n_coils = 0;
    std::vector<std::vector<cplx>> samples; // [phase * n_coils + coil]
    std::optional<double> noise_db;         // annotation set by add_noise

    std::vector<cplx>& at(int phase, int coil) {
        return samples[std::size_t(phase) * n_coils + coil];
    }
    const std::vector<cplx>& at(int phase, int coil) const {
        return samples[std::size_t(phase) * n_coils + coil];
    }
};

double norm2_sq(const KSpaceData& y);
std::size_t total_samples(const KSpaceData& y);
bool all_finite(const KSpaceData& y);

enum class TransformEngine { direct, gridded };

// The linear acquisition model y = Hx: per phase t and coil i, samples of the
// nonuniform Fourier transform of S_i .* x_t at the pattern coordinates, with
// a negative exponent and symmetric 1/sqrt(nx*ny) normalization. Pixel
// coordinates are centered (ix - nx/2, iy - ny/2). The direct engine
// evaluates the sums exactly; the gridded engine is an approximate fast path
// (Kaiser-Bessel width 4, oversampling 1.25) whose forward/adjoint still form
// an exact transpose pair.
class MeasurementOperator {
  public:
    MeasurementOperator(SamplingPattern pattern, CoilMaps coils, ImageDims dims,
                        TransformEngine engine = TransformEngine::direct);

    const ImageDims& dims() const { return dims_; }
    const SamplingPattern& pattern() const { return pattern_; }
    const CoilMaps& coils() const { return coils_; }
    TransformEngine engine() const { return engine_; }
    double normalization() const { return nu_; }

    KSpaceData forward(const ComplexImage& x) const;
    ComplexImage adjoint(const KSpaceData& y) const;
    // Density-compensated adjoint with conjugate-coil combination normalized
    // by the coil energy map; the zero-filled reconstruction.
    ComplexImage pseudoinverse(const KSpaceData& y) const;
    // Gradient of g(x) = 0.5 * ||Hx - y||^2, i.e. H^H (Hx - y).
    ComplexImage datafid_gradient(const ComplexImage& x, const KSpaceData& y) const;
    double datafid_value(const ComplexImage& x, const KSpaceData& y) const;

    KSpaceData zero_data() const;
    void check_aligned(const KSpaceData& y) const;

  private:
    SamplingPattern pattern_;
    CoilMaps coils_;
    ImageDims dims_;
    TransformEngine engine_;
    double nu_;
    std::vector<double> energy_;
    std::vector<kern::NudftPlan> nplans_;
    std::vector<kern::GriddingPlan> gplans_;

    void apply_plan_forward(int phase, const cplx* img, cplx* out) const;
    void apply_plan_adjoint(int phase, const cplx* samples, cplx* img) const;
};

// Power-iteration estimate of ||H||_2^2, the largest eigenvalue of H^H H and
// the Lipschitz constant of the data-fidelity gradient. Deterministic given
// the seed; a zero operator yields 0.
double operator_norm_estimate(const MeasurementOperator& op, int iters = 30,
                              std::uint64_t seed = 7);

} // namespace rare
