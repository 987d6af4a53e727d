#include "rare/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rare {

namespace {

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

struct GEval {
    ComplexImage g;     // G(x)
    double g_norm = 0.0;
    double datafid = 0.0;
    double reg = 0.0;
    double objective() const { return datafid + reg; }
};

// One fused evaluation: forward, residual, adjoint, remover. Assembles G
// elementwise as grad[i] + (tau*x[i] - tau*Rx[i]), the same expression
// operator_G produces, so recomputation is bitwise reproducible.
GEval eval_G(const ComplexImage& x, const MeasurementOperator& op, const KSpaceData& y,
             const ArtifactRemover& r, double tau) {
    GEval e;
    KSpaceData res = op.forward(x);
    double acc = 0.0;
    for (std::size_t v = 0; v < res.samples.size(); ++v)
        for (std::size_t s = 0; s < res.samples[v].size(); ++s) {
            res.samples[v][s] -= y.samples[v][s];
            acc += std::norm(res.samples[v][s]);
        }
    e.datafid = 0.5 * acc;
    e.g = op.adjoint(res);
    ComplexImage rx = r.apply(x);
    check_same_dims(x, rx, "remover output");
    cplx ip(0.0, 0.0);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        ip += std::conj(x.data[i]) * (x.data[i] - rx.data[i]);
        e.g.data[i] = e.g.data[i] + (tau * x.data[i] - tau * rx.data[i]);
    }
    e.reg = 0.5 * tau * ip.real();
    e.g_norm = norm2(e.g);
    return e;
}

double default_step(const MeasurementOperator& op, const SolverConfig& cfg) {
    if (cfg.gamma0 > 0.0) return cfg.gamma0;
    const double l = operator_norm_estimate(op, cfg.norm_iters, cfg.norm_seed);
    return l > 0.0 ? 1.0 / l : 1.0;
}

void ensure_finite_iterate(const ComplexImage& x, int iteration) {
    if (!all_finite(x))
        throw std::runtime_error("solver diverged: non-finite iterate at iteration " +
                                 std::to_string(iteration));
}

} // namespace

void SolverConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("tau must be positive and finite");
    if (!(gamma0 >= 0.0)) throw std::invalid_argument("gamma0 must be >= 0 (0 = automatic)");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (norm_iters < 1) throw std::invalid_argument("norm_iters must be >= 1");
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::max_iters: return "max-iters";
        case StopReason::step_floor: return "step-floor";
        case StopReason::converged: return "converged";
    }
    return "unknown";
}

ComplexImage operator_G(const ComplexImage& x, const MeasurementOperator& op,
                        const KSpaceData& y, const ArtifactRemover& r, double tau) {
    ComplexImage g = op.datafid_gradient(x, y);
    ComplexImage res = red_residual(x, r, tau);
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = g.data[i] + res.data[i];
    return g;
}

double nesterov_q_update(double q_prev) {
    if (!(q_prev >= 0.0) || !std::isfinite(q_prev))
        throw std::invalid_argument("q must be finite and >= 0");
    return 0.5 * (1.0 + std::sqrt(1.0 + q_prev * q_prev));
}

ReconReport rare_solve(const KSpaceData& y, const MeasurementOperator& op,
                       const ArtifactRemover& r, const SolverConfig& cfg,
                       const std::optional<ComplexImage>& x0) {
    cfg.validate();
    op.check_aligned(y);
    const auto t0 = clock_type::now();

    ComplexImage x_prev = x0 ? *x0 : r.apply(op.pseudoinverse(y));
    if (!(x_prev.dims == op.dims()))
        throw std::invalid_argument("initial image dims do not match operator");
    if (cfg.real_projection) zero_imag_inplace(x_prev);
    ensure_finite_iterate(x_prev, 0);

    const double gamma0 = default_step(op, cfg);
    double gamma_accepted = gamma0;
    double q_prev = 1.0;
    ComplexImage s = x_prev;
    GEval es = eval_G(s, op, y, r, cfg.tau);

    ReconReport rep;
    rep.method = "rare+" + r.name();
    rep.reason = StopReason::max_iters;

    for (int k = 1; k <= cfg.max_iters; ++k) {
        double gamma = std::min(gamma0, 4.0 * gamma_accepted);
        if (es.g_norm == 0.0) {
            x_prev = s;
            rep.trace.push_back({k, 0.0, 0.0, gamma, q_prev, ms_since(t0), es.objective()});
            rep.iterations = k;
            rep.reason = StopReason::converged;
            break;
        }
        bool accepted = false;
        ComplexImage x_cand;
        GEval ex;
        while (true) {
            x_cand = add_scaled(s, -gamma, es.g);
            if (cfg.real_projection) zero_imag_inplace(x_cand);
            ex = eval_G(x_cand, op, y, r, cfg.tau);
            if (ex.g_norm <= es.g_norm) {
                accepted = true;
                break;
            }
            gamma *= cfg.beta;
            if (gamma < cfg.rho) break;
        }
        if (!accepted) {
            rep.reason = StopReason::step_floor;
            break;
        }
        ensure_finite_iterate(x_cand, k);
        gamma_accepted = gamma;
        const double q = cfg.accelerate ? nesterov_q_update(q_prev) : 1.0;
        const double mom = (q_prev - 1.0) / q;
        s = x_cand;
        for (std::size_t i = 0; i < s.data.size(); ++i)
            s.data[i] += mom * (x_cand.data[i] - x_prev.data[i]);
        rep.trace.push_back({k, ex.g_norm, es.g_norm, gamma, q, ms_since(t0), ex.objective()});
        rep.iterations = k;
        x_prev = std::move(x_cand);
        q_prev = q;
        es = eval_G(s, op, y, r, cfg.tau);
    }
    rep.image = std::move(x_prev);
    return rep;
}

ReconReport fista_tv_solve(const KSpaceData& y, const MeasurementOperator& op,
                           const TVParams& tvp, const SolverConfig& cfg,
                           const std::optional<ComplexImage>& x0) {
    cfg.validate();
    tvp.validate();
    op.check_aligned(y);
    const auto t0 = clock_type::now();

    const double gamma = default_step(op, cfg);
    ComplexImage x_prev = x0 ? *x0 : op.pseudoinverse(y);
    if (!(x_prev.dims == op.dims()))
        throw std::invalid_argument("initial image dims do not match operator");
    if (cfg.real_projection) zero_imag_inplace(x_prev);
    ensure_finite_iterate(x_prev, 0);

    TVParams prox = tvp;
    prox.lambda = tvp.lambda * gamma;

    auto objective = [&](const ComplexImage& v) {
        return op.datafid_value(v, y) + tvp.lambda * tv_value(v, tvp);
    };
    double obj_prev = objective(x_prev);

    ComplexImage s = x_prev;
    double q_prev = 1.0;
    ReconReport rep;
    rep.method = "cs-tv";
    rep.reason = StopReason::max_iters;

    for (int k = 1; k <= cfg.max_iters; ++k) {
        ComplexImage grad = op.datafid_gradient(s, y);
        ComplexImage z = add_scaled(s, -gamma, grad);
        ComplexImage cand = tv_denoise(z, prox);
        if (cfg.real_projection) zero_imag_inplace(cand);
        ensure_finite_iterate(cand, k);
        const double obj_cand = objective(cand);

        // prox-gradient residual norm, the fixed-point measure of this scheme
        double res_sq = 0.0;
        for (std::size_t i = 0; i < cand.data.size(); ++i)
            res_sq += std::norm((cand.data[i] - s.data[i]) / gamma);
        const double g_norm = std::sqrt(res_sq);

        // keep the better iterate so the recorded objective is monotone
        const bool improved = obj_cand <= obj_prev;
        const ComplexImage& x_next = improved ? cand : x_prev;
        const double obj_next = improved ? obj_cand : obj_prev;

        const double q = cfg.accelerate ? nesterov_q_update(q_prev) : 1.0;
        s = x_next;
        for (std::size_t i = 0; i < s.data.size(); ++i)
            s.data[i] += (q_prev / q) * (cand.data[i] - x_next.data[i]) +
                         ((q_prev - 1.0) / q) * (x_next.data[i] - x_prev.data[i]);

        double change = 0.0, base = 0.0;
        for (std::size_t i = 0; i < cand.data.size(); ++i) {
            change += std::norm(x_next.data[i] - x_prev.data[i]);
            base += std::norm(x_prev.data[i]);
        }
        rep.trace.push_back({k, g_norm, g_norm, gamma, q, ms_since(t0), obj_next});
        rep.iterations = k;
        const bool x_moved = improved; // x_next aliases x_prev otherwise
        if (x_moved) x_prev = std::move(cand);
        obj_prev = obj_next;
        q_prev = q;
        if (improved && k > 1 &&
            std::sqrt(change) <= cfg.rho * std::max(std::sqrt(base), 1e-30)) {
            rep.reason = StopReason::converged;
            break;
        }
    }
    rep.image = std::move(x_prev);
    return rep;
}

} // namespace rare
