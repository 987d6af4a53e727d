#pragma once

#include <vector>

#include "rare/image.hpp"

namespace rare::fft {

// In-place DFT of arbitrary length. sign = -1 gives the negative-exponent
// transform, sign = +1 the positive-exponent one. No normalization is applied
// in either direction, so fft(x,-1) followed by fft(.,+1) scales by n.
// Power-of-two lengths use an iterative radix-2 pass; other lengths go
// through Bluestein's chirp-z reduction to a power-of-two convolution.
void transform(std::vector<cplx>& a, int sign);

// 2D transform of an nx-by-ny row-major grid with centered index conventions:
// both the pixel origin and the frequency origin sit at (nx/2, ny/2).
// Equivalent to fftshift(fft2(ifftshift(g))) per axis, sign as above.
void transform2_centered(std::vector<cplx>& grid, int nx, int ny, int sign);

} // namespace rare::fft
