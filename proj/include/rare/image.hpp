#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rare {

using cplx = std::complex<double>;

// Axis sizes of a multi-phase image: phases x nx x ny, stored row-major with
// the phase axis outermost. Slices along z are handled as separate images.
struct ImageDims {
    int phases = 1;
    int nx = 0;
    int ny = 0;

    std::size_t pixels() const { return std::size_t(nx) * std::size_t(ny); }
    std::size_t total() const { return std::size_t(phases) * pixels(); }

    bool operator==(const ImageDims&) const = default;

    std::string to_string() const {
        return std::to_string(phases) + "x" + std::to_string(nx) + "x" + std::to_string(ny);
    }
};

// Complex-valued image volume (the unknown x, its iterates, and all
// intermediate reconstructions). Dimensionless intensity.
struct ComplexImage {
    ImageDims dims;
    std::vector<cplx> data;

    ComplexImage() = default;
    explicit ComplexImage(ImageDims d) : dims(d), data(d.total(), cplx(0.0, 0.0)) {}

    std::size_t index(int p, int ix, int iy) const {
        return (std::size_t(p) * dims.nx + ix) * dims.ny + iy;
    }
    cplx& at(int p, int ix, int iy) { return data[index(p, ix, iy)]; }
    const cplx& at(int p, int ix, int iy) const { return data[index(p, ix, iy)]; }

    std::size_t size() const { return data.size(); }
};

inline void check_same_dims(const ComplexImage& a, const ComplexImage& b, const char* what) {
    if (!(a.dims == b.dims))
        throw std::invalid_argument(std::string(what) + ": dims mismatch " + a.dims.to_string() +
                                    " vs " + b.dims.to_string());
}

inline bool all_finite(const ComplexImage& x) {
    for (const cplx& v : x.data)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

inline void check_finite(const ComplexImage& x, const char* what) {
    if (!all_finite(x)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

// Hermitian inner product sum(conj(a_i) * b_i).
inline cplx dot(const ComplexImage& a, const ComplexImage& b) {
    check_same_dims(a, b, "dot");
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::conj(a.data[i]) * b.data[i];
    return s;
}

inline double norm2_sq(const ComplexImage& a) {
    double s = 0.0;
    for (const cplx& v : a.data) s += v.real() * v.real() + v.imag() * v.imag();
    return s;
}

inline double norm2(const ComplexImage& a) { return std::sqrt(norm2_sq(a)); }

// a + alpha*b
inline ComplexImage add_scaled(const ComplexImage& a, double alpha, const ComplexImage& b) {
    check_same_dims(a, b, "add_scaled");
    ComplexImage r = a;
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] += alpha * b.data[i];
    return r;
}

inline ComplexImage operator-(const ComplexImage& a, const ComplexImage& b) {
    return add_scaled(a, -1.0, b);
}

inline ComplexImage operator+(const ComplexImage& a, const ComplexImage& b) {
    return add_scaled(a, 1.0, b);
}

inline ComplexImage operator*(double alpha, const ComplexImage& a) {
    ComplexImage r = a;
    for (cplx& v : r.data) v *= alpha;
    return r;
}

inline void zero_imag_inplace(ComplexImage& x) {
    for (cplx& v : x.data) v = cplx(v.real(), 0.0);
}

// Magnitude image of one phase, as a flat row-major vector.
inline std::vector<double> magnitude_phase(const ComplexImage& x, int phase) {
    std::vector<double> m(x.dims.pixels());
    const std::size_t off = std::size_t(phase) * x.dims.pixels();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(x.data[off + i]);
    return m;
}

} // namespace rare
