#pragma once

#include <vector>

#include "rare/image.hpp"

// Hot inner loops, OpenMP-parallelized. Every kernel assigns each output
// element to exactly one iteration and accumulates in a fixed order, so
// results are bitwise identical for any thread count. rare::ref holds plain
// serial twins of the same arithmetic, kept for testing and benchmarking.
namespace rare::kern {

// Factored exponential tables for one phase of a nonuniform DFT:
//   ex[s*nx+ix] = exp(-2*pi*i * kx_s * (ix - nx/2))
//   ey[s*ny+iy] = exp(-2*pi*i * ky_s * (iy - ny/2))
// so that sample s of the transform of img is
//   out[s] = nu * sum_ix ex[s,ix] * (sum_iy img[ix,iy] * ey[s,iy]).
struct NudftPlan {
    int nx = 0, ny = 0;
    int m = 0; // samples in this phase
    std::vector<cplx> ex; // m * nx
    std::vector<cplx> ey; // m * ny
};

NudftPlan make_nudft_plan(const double* kx, const double* ky, int m, int nx, int ny);

void nudft_forward(const NudftPlan& pl, const cplx* img, double nu, cplx* out);

// img_out[p] += sum_s conj(ex*ey) * (nu * samples[s]); caller zeroes img_out.
void nudft_adjoint(const NudftPlan& pl, const cplx* samples, double nu, cplx* img_out);

// Gridding (Kaiser-Bessel interpolation on an oversampled FFT grid) plan for
// one phase. Neighbor lists and weights are shared by the forward and adjoint
// paths, which therefore form an exact transpose pair.
struct GriddingPlan {
    int nx = 0, ny = 0;       // image grid
    int nx_os = 0, ny_os = 0; // oversampled grid
    int m = 0;
    int taps = 0;               // neighbors per axis (kernel width + 1)
    std::vector<int> gx0, gy0;  // first neighbor index per sample (may be negative)
    std::vector<double> wx, wy; // m * taps kernel weights
    std::vector<double> dx, dy; // deapodization 1/FT(kernel), per image coordinate
};

GriddingPlan make_gridding_plan(const double* kx, const double* ky, int m, int nx, int ny,
                                double oversampling, int width);

void gridding_forward(const GriddingPlan& pl, const cplx* img, double nu, cplx* out);
void gridding_adjoint(const GriddingPlan& pl, const cplx* samples, double nu, cplx* img_out);

// 3D convolution over (phase, x, y) with zero padding, stride 1, odd kernel.
// in:  [in_ch][P][X][Y]   w: [out_ch][in_ch][kp][kx][ky]   out: [out_ch][P][X][Y]
struct ConvShape {
    int out_ch = 0, in_ch = 0;
    int kp = 1, kx = 1, ky = 1;
    std::size_t weight_count() const {
        return std::size_t(out_ch) * in_ch * kp * kx * ky;
    }
};

void conv3d_forward(const ConvShape& s, const double* w, const double* bias, const double* in,
                    int P, int X, int Y, double* out);

// Gradient w.r.t. the layer input given the gradient w.r.t. its output.
void conv3d_backward_input(const ConvShape& s, const double* w, const double* dout, int P, int X,
                           int Y, double* din);

// Gradients w.r.t. weights and biases; dw and db are overwritten.
void conv3d_backward_weights(const ConvShape& s, const double* in, const double* dout, int P,
                             int X, int Y, double* dw, double* db);

} // namespace rare::kern

namespace rare::ref {

void nudft_forward(const kern::NudftPlan& pl, const cplx* img, double nu, cplx* out);
void nudft_adjoint(const kern::NudftPlan& pl, const cplx* samples, double nu, cplx* img_out);

void conv3d_forward(const kern::ConvShape& s, const double* w, const double* bias,
                    const double* in, int P, int X, int Y, double* out);
void conv3d_backward_input(const kern::ConvShape& s, const double* w, const double* dout, int P,
                           int X, int Y, double* din);
void conv3d_backward_weights(const kern::ConvShape& s, const double* in, const double* dout,
                             int P, int X, int Y, double* dw, double* db);

} // namespace rare::ref
