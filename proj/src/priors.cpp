#include "rare/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rare/rng.hpp"

namespace rare {

ComplexImage ScalingRemover::apply(const ComplexImage& x) const {
    ComplexImage out(x.dims);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = factor_ * x.data[i];
    return out;
}

std::size_t NetWeights::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.shape.weight_count() + l.bias.size();
    return n;
}

void NetWeights::validate() const {
    if (layers.empty()) throw std::invalid_argument("network has no layers");
    if (layers.front().shape.in_ch != 2)
        throw std::invalid_argument("first layer must take 2 channels (real/imag)");
    if (layers.back().shape.out_ch != 2)
        throw std::invalid_argument("last layer must emit 2 channels (real/imag)");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (i > 0 && l.shape.in_ch != layers[i - 1].shape.out_ch)
            throw std::invalid_argument("layer channel counts do not chain");
        if (l.shape.kp < 1 || l.shape.kx < 1 || l.shape.ky < 1 || l.shape.kp % 2 == 0 ||
            l.shape.kx % 2 == 0 || l.shape.ky % 2 == 0)
            throw std::invalid_argument("kernel extents must be odd and positive");
        if (l.weights.size() != l.shape.weight_count())
            throw std::invalid_argument("kernel tensor size mismatch");
        if (int(l.bias.size()) != l.shape.out_ch)
            throw std::invalid_argument("bias size mismatch");
        for (double v : l.weights)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite kernel value");
        for (double v : l.bias)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite bias value");
    }
}

NetWeights init_net(const NetArch& arch, std::uint64_t seed) {
    if (arch.depth < 2) throw std::invalid_argument("network depth must be at least 2");
    if (arch.width < 1) throw std::invalid_argument("network width must be positive");
    Rng rng(seed);
    NetWeights net;
    for (int i = 0; i < arch.depth; ++i) {
        ConvLayer l;
        l.shape.in_ch = (i == 0) ? 2 : arch.width;
        l.shape.out_ch = (i == arch.depth - 1) ? 2 : arch.width;
        l.shape.kp = arch.kp;
        l.shape.kx = arch.kx;
        l.shape.ky = arch.ky;
        l.act = (i == arch.depth - 1) ? Activation::none : Activation::relu;
        const double fan = double(l.shape.in_ch + l.shape.out_ch) * arch.kp * arch.kx * arch.ky;
        const double bound = std::sqrt(6.0 / fan);
        l.weights.resize(l.shape.weight_count());
        for (double& w : l.weights) w = rng.uniform(-bound, bound);
        l.bias.assign(l.shape.out_ch, 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

std::vector<double> image_to_channels(const ComplexImage& x) {
    const std::size_t n = x.data.size();
    std::vector<double> ch(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        ch[i] = x.data[i].real();
        ch[n + i] = x.data[i].imag();
    }
    return ch;
}

ComplexImage channels_to_image(const std::vector<double>& ch, const ImageDims& dims) {
    ComplexImage x(dims);
    const std::size_t n = x.data.size();
    if (ch.size() != 2 * n) throw std::invalid_argument("channel buffer size mismatch");
    for (std::size_t i = 0; i < n; ++i) x.data[i] = cplx(ch[i], ch[n + i]);
    return x;
}

ComplexImage conv_net_forward(const NetWeights& w, const ComplexImage& x) {
    w.validate();
    const int P = x.dims.phases, X = x.dims.nx, Y = x.dims.ny;
    const std::size_t vol = x.data.size();
    std::vector<double> cur = image_to_channels(x);
    std::vector<double> next;
    for (const auto& l : w.layers) {
        next.assign(std::size_t(l.shape.out_ch) * vol, 0.0);
        kern::conv3d_forward(l.shape, l.weights.data(), l.bias.data(), cur.data(), P, X, Y,
                             next.data());
        if (l.act == Activation::relu)
            for (double& v : next) v = std::max(0.0, v);
        cur.swap(next);
    }
    return channels_to_image(cur, x.dims);
}

ConvNetRemover::ConvNetRemover(NetWeights w, std::string label)
    : weights_(std::move(w)), label_(std::move(label)) {
    weights_.validate();
}

ComplexImage ConvNetRemover::apply(const ComplexImage& x) const {
    return conv_net_forward(weights_, x);
}

void TVParams::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("TV weight must be finite and >= 0");
    if (iters < 1) throw std::invalid_argument("TV iterations must be >= 1");
    if (!(w_space >= 0.0) || !(w_phase >= 0.0))
        throw std::invalid_argument("TV axis weights must be >= 0");
}

namespace {

struct TvGrid {
    int P, X, Y;
    double wp, ws;
    std::size_t n;

    std::size_t at(int p, int x, int y) const {
        return (std::size_t(p) * X + x) * Y + y;
    }

    // q = A u: weighted forward differences, last slice of each axis zero.
    void apply(const cplx* u, cplx* qp, cplx* qx, cplx* qy) const {
        for (int p = 0; p < P; ++p)
            for (int x = 0; x < X; ++x)
                for (int y = 0; y < Y; ++y) {
                    const std::size_t i = at(p, x, y);
                    qp[i] = (p + 1 < P) ? wp * (u[at(p + 1, x, y)] - u[i]) : cplx(0, 0);
                    qx[i] = (x + 1 < X) ? ws * (u[at(p, x + 1, y)] - u[i]) : cplx(0, 0);
                    qy[i] = (y + 1 < Y) ? ws * (u[i + 1] - u[i]) : cplx(0, 0);
                }
    }

    // u = A^T q (negative weighted divergence).
    void apply_transpose(const cplx* qp, const cplx* qx, const cplx* qy, cplx* u) const {
        for (int p = 0; p < P; ++p)
            for (int x = 0; x < X; ++x)
                for (int y = 0; y < Y; ++y) {
                    const std::size_t i = at(p, x, y);
                    cplx acc(0, 0);
                    if (p + 1 < P) acc -= wp * qp[i];
                    if (p > 0) acc += wp * qp[at(p - 1, x, y)];
                    if (x + 1 < X) acc -= ws * qx[i];
                    if (x > 0) acc += ws * qx[at(p, x - 1, y)];
                    if (y + 1 < Y) acc -= ws * qy[i];
                    if (y > 0) acc += ws * qy[i - 1];
                    u[i] = acc;
                }
    }
};

} // namespace

ComplexImage tv_denoise(const ComplexImage& x, const TVParams& prm) {
    prm.validate();
    check_finite(x, "tv input");
    if (prm.lambda == 0.0) return x;
    const TvGrid g{x.dims.phases, x.dims.nx, x.dims.ny, prm.w_phase, prm.w_space,
                   x.data.size()};
    const double opn = 4.0 * (g.wp * g.wp + 2.0 * g.ws * g.ws);
    if (opn == 0.0) return x;
    const std::size_t n = g.n;
    std::vector<cplx> pp(n, cplx(0, 0)), px(n, cplx(0, 0)), py(n, cplx(0, 0));
    std::vector<cplx> rp = pp, rx = px, ry = py;
    std::vector<cplx> u(n), qp(n), qx(n), qy(n);
    const double step = 1.0 / (prm.lambda * opn);
    double t = 1.0;
    for (int it = 0; it < prm.iters; ++it) {
        g.apply_transpose(rp.data(), rx.data(), ry.data(), u.data());
        for (std::size_t i = 0; i < n; ++i) u[i] = x.data[i] - prm.lambda * u[i];
        g.apply(u.data(), qp.data(), qx.data(), qy.data());
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double mom = (t - 1.0) / t_next;
        for (std::size_t i = 0; i < n; ++i) {
            cplx np = rp[i] + step * qp[i];
            cplx nx = rx[i] + step * qx[i];
            cplx ny = ry[i] + step * qy[i];
            const double nrm =
                std::sqrt(std::norm(np) + std::norm(nx) + std::norm(ny));
            if (nrm > 1.0) {
                np /= nrm;
                nx /= nrm;
                ny /= nrm;
            }
            rp[i] = np + mom * (np - pp[i]);
            rx[i] = nx + mom * (nx - px[i]);
            ry[i] = ny + mom * (ny - py[i]);
            pp[i] = np;
            px[i] = nx;
            py[i] = ny;
        }
        t = t_next;
    }
    g.apply_transpose(pp.data(), px.data(), py.data(), u.data());
    ComplexImage out(x.dims);
    for (std::size_t i = 0; i < n; ++i) out.data[i] = x.data[i] - prm.lambda * u[i];
    return out;
}

double tv_value(const ComplexImage& x, const TVParams& prm) {
    const TvGrid g{x.dims.phases, x.dims.nx, x.dims.ny, prm.w_phase, prm.w_space,
                   x.data.size()};
    std::vector<cplx> qp(g.n), qx(g.n), qy(g.n);
    g.apply(x.data.data(), qp.data(), qx.data(), qy.data());
    double acc = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        acc += std::sqrt(std::norm(qp[i]) + std::norm(qx[i]) + std::norm(qy[i]));
    return acc;
}

ComplexImage red_residual(const ComplexImage& x, const ArtifactRemover& r, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    ComplexImage rx = r.apply(x);
    check_same_dims(x, rx, "remover output");
    ComplexImage out(x.dims);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = tau * x.data[i] - tau * rx.data[i];
    return out;
}

double red_value(const ComplexImage& x, const ArtifactRemover& r, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    ComplexImage rx = r.apply(x);
    check_same_dims(x, rx, "remover output");
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        acc += std::conj(x.data[i]) * (x.data[i] - rx.data[i]);
    return 0.5 * tau * acc.real();
}

} // namespace rare
