#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rare/operators.hpp"
#include "rare/priors.hpp"

namespace rare {

struct SolverConfig {
    double tau = 1.0;      // regularization weight, > 0
    double gamma0 = 0.0;   // initial step; 0 means 1/operator_norm_estimate
    double beta = 0.5;     // backtracking shrink factor, in (0, 1)
    double rho = 1e-6;     // minimal step / stopping parameter, > 0
    int max_iters = 500;
    bool accelerate = true;
    // Keep only the real part of each accepted iterate (for studies whose
    // groundtruth is real-valued).
    bool real_projection = false;
    int norm_iters = 30;       // power iterations for the default step
    std::uint64_t norm_seed = 7;
    void validate() const;
};

enum class StopReason { max_iters, step_floor, converged };
std::string to_string(StopReason r);

struct TraceRow {
    int iteration = 0;
    double g_norm = 0.0;          // ||G(x^k)|| at the accepted iterate
    double g_norm_momentum = 0.0; // ||G(s^{k-1})|| the line search compared against
    double gamma = 0.0;           // accepted step
    double q = 0.0;               // momentum parameter after this iteration
    double wall_ms = 0.0;         // cumulative wall time
    double objective = 0.0;       // objective surrogate at x^k
};

struct ReconReport {
    ComplexImage image;
    std::vector<TraceRow> trace;
    StopReason reason = StopReason::max_iters;
    int iterations = 0; // accepted outer iterations
    std::string method;
};

// G(x) = grad g(x) + tau * (x - R(x)); the solver looks for its zeros.
ComplexImage operator_G(const ComplexImage& x, const MeasurementOperator& op,
                        const KSpaceData& y, const ArtifactRemover& r, double tau);

// q_k = (1 + sqrt(1 + q_{k-1}^2)) / 2.
double nesterov_q_update(double q_prev);

// Accelerated fixed-point iteration with a backtracking line search on ||G||:
//   x^k = s^{k-1} - gamma * G(s^{k-1}), shrinking gamma by beta until
//   ||G(x^k)|| <= ||G(s^{k-1})|| or gamma < rho (which stops the solve and
//   returns the last accepted iterate); momentum
//   s^k = x^k + ((q_{k-1}-1)/q_k)(x^k - x^{k-1}).
// gamma is re-initialized each outer iteration to min(gamma0,
// 4 * previously accepted gamma). When x0 is absent the solve starts from
// R(pseudoinverse(y)). Throws std::runtime_error naming the iteration if an
// iterate turns non-finite.
ReconReport rare_solve(const KSpaceData& y, const MeasurementOperator& op,
                       const ArtifactRemover& r, const SolverConfig& cfg,
                       const std::optional<ComplexImage>& x0 = std::nullopt);

// Monotone accelerated proximal-gradient baseline for
//   min 0.5 * ||Hx - y||^2 + lambda * TV(x):
// x^k = tv_denoise(s^{k-1} - gamma * grad g(s^{k-1})) with prox weight
// gamma * lambda, keeping the better of (candidate, previous) iterate so the
// recorded objective never increases. Stops on max_iters or when the relative
// iterate change drops below rho.
ReconReport fista_tv_solve(const KSpaceData& y, const MeasurementOperator& op,
                           const TVParams& tvp, const SolverConfig& cfg,
                           const std::optional<ComplexImage>& x0 = std::nullopt);

} // namespace rare
