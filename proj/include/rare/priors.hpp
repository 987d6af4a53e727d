#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rare/image.hpp"
#include "rare/kernels.hpp"

namespace rare {

// Mapping from an artifact-contaminated image to a cleaner one; dims are
// preserved and the mapping is deterministic.
class ArtifactRemover {
  public:
    virtual ~ArtifactRemover() = default;
    virtual ComplexImage apply(const ComplexImage& x) const = 0;
    virtual std::string name() const = 0;
};

class IdentityRemover final : public ArtifactRemover {
  public:
    ComplexImage apply(const ComplexImage& x) const override { return x; }
    std::string name() const override { return "identity"; }
};

// R(x) = factor * x; the simplest nontrivial linear remover, used by the
// solver's closed-form cross-checks.
class ScalingRemover final : public ArtifactRemover {
  public:
    explicit ScalingRemover(double factor) : factor_(factor) {}
    ComplexImage apply(const ComplexImage& x) const override;
    std::string name() const override { return "scale"; }
    double factor() const { return factor_; }

  private:
    double factor_;
};

enum class Activation { relu, none };

struct ConvLayer {
    kern::ConvShape shape;
    std::vector<double> weights; // [out_ch][in_ch][kp][kx][ky]
    std::vector<double> bias;    // [out_ch]
    Activation act = Activation::none;
};

struct NetWeights {
    std::vector<ConvLayer> layers;

    std::size_t parameter_count() const;
    // Enforces: non-empty; channel chain; 2 input and 2 output channels
    // (real/imag); odd kernel extents; finite values.
    void validate() const;
};

struct NetArch {
    int depth = 10; // total conv layers, >= 2
    int width = 64; // channels of the hidden layers
    int kp = 3, kx = 3, ky = 3;
};

// Seeded Glorot-uniform initialization (+-sqrt(6/(fan_in+fan_out))), zero
// biases. Layer stack: conv+relu (2 -> width), depth-2 conv+relu
// (width -> width), final conv (width -> 2) with no activation.
NetWeights init_net(const NetArch& arch, std::uint64_t seed);

// Real/imag channel packing used at the network boundary: channel 0 holds
// real parts, channel 1 imaginary parts, each [P][X][Y] row-major.
std::vector<double> image_to_channels(const ComplexImage& x);
ComplexImage channels_to_image(const std::vector<double>& ch, const ImageDims& dims);

// Applies the layer stack with zero padding and stride 1; the output of the
// final layer is the result (non-residual).
ComplexImage conv_net_forward(const NetWeights& w, const ComplexImage& x);

class ConvNetRemover final : public ArtifactRemover {
  public:
    explicit ConvNetRemover(NetWeights w, std::string label = "convnet");
    ComplexImage apply(const ComplexImage& x) const override;
    std::string name() const override { return label_; }
    const NetWeights& weights() const { return weights_; }

  private:
    NetWeights weights_;
    std::string label_;
};

struct TVParams {
    double lambda = 0.0;  // regularization weight, >= 0
    int iters = 40;       // dual projected-gradient iterations, >= 1
    double w_space = 1.0; // weight of the x/y difference axes
    double w_phase = 1.0; // weight of the phase difference axis
    void validate() const;
};

// Approximate prox of lambda * TV via accelerated dual projected gradient.
// TV is isotropic over the (phase, x, y) forward differences with per-axis
// weights, grouping real and imaginary parts jointly.
ComplexImage tv_denoise(const ComplexImage& x, const TVParams& p);

// Weighted isotropic TV value of an image (used for baseline objectives).
double tv_value(const ComplexImage& x, const TVParams& p);

class TvDenoiser final : public ArtifactRemover {
  public:
    explicit TvDenoiser(TVParams p) : params_(p) { params_.validate(); }
    ComplexImage apply(const ComplexImage& x) const override { return tv_denoise(x, params_); }
    std::string name() const override { return "tv"; }
    const TVParams& params() const { return params_; }

  private:
    TVParams params_;
};

// tau * (x - R(x)), assembled elementwise as tau*x - tau*R(x).
ComplexImage red_residual(const ComplexImage& x, const ArtifactRemover& r, double tau);

// (tau/2) * Re<x, x - R(x)>, the explicit regularizer value.
double red_value(const ComplexImage& x, const ArtifactRemover& r, double tau);

} // namespace rare
