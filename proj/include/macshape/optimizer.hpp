#pragma once

#include "macshape/constellation.hpp"
#include "macshape/info.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace macshape {

// symmetric ties both users to one distribution; asymmetric frees them and
// is limited to the orthogonal pam pair family, where the per-user power
// scales separate along the two quadrature axes.
enum class ShapingMode { symmetric, asymmetric };

struct OptimTolerances {
    double grad_tol = 1e-7; // stop when the projected gradient norm drops below this
    double obj_tol = 1e-10; // or on relative objective stagnation
    int max_iters = 2000;
};

struct ShapingProblem {
    std::string constellation_id = "pam16";
    double snr_db = 14.0;
    ShapingMode mode = ShapingMode::symmetric;
    int starts = 32;
    std::uint64_t seed = 1;
    OptimTolerances tol{};
    GridParams grid{};
    int threads = 1;
    // Optional deterministic extra starting points, appended after the
    // `starts` random ones (used e.g. to warm-start threshold bisections).
    std::vector<std::vector<double>> hint_p, hint_q;
};

struct StartLog {
    int start_index = 0;
    std::vector<double> init_p, init_q;
    double objective = 0.0; // achieved MI in bits (-inf for failed starts)
    int iterations = 0;
    bool converged = false;
    bool failed = false;
};

struct ShapingResult {
    InputDistribution best_p, best_q; // equal in symmetric mode
    double mi_bits = 0.0;             // fresh evaluation at best_p/best_q
    int best_start = -1;
    std::vector<StartLog> start_log;
    // Provenance: everything needed to reproduce the run.
    std::string constellation_id;
    double snr_db = 0.0;
    ShapingMode mode = ShapingMode::symmetric;
    std::uint64_t seed = 0;
    OptimTolerances tol{};
    GridParams grid{};
};

// Multi-start local maximization of the XOR-message MI at the given SNR under
// the power-tight convention (the noise variance tracks the iterate's average
// energy, so the power constraint binds with equality). Each start runs a
// quasi-Newton ascent in a softmax parameterization of the open simplex with
// the analytic MI gradient and Armijo backtracking. Deterministic in
// (problem, seed); starts may run in parallel (prob.threads) without changing
// the result. Throws optimization_failed_error if every start fails.
ShapingResult optimize(const ShapingProblem& prob);

// First-order stationarity residual for a maximization gradient g at p on the
// simplex: with mu = sum p_i g_i, the largest projected-gradient component
// p_i |g_i - mu|, plus the raw positive excess max(0, g_i - mu) of any
// numerically dead coordinate (p_i <= 1e-6) so improvements that require
// reviving one are still detected.
double kkt_residual(const std::vector<double>& p, const std::vector<double>& grad);

enum class RateFamily { optimized, uniform, mb, cutset, fixed };

std::string family_name(RateFamily f);

struct FamilyOptions {
    int starts = 8; // optimized family only
    std::uint64_t seed = 1;
    OptimTolerances tol{};
    GridParams grid{};
    int threads = 1;
    std::vector<double> fixed_p, fixed_q; // fixed family (fixed_q empty means = fixed_p)
};

// Smallest SNR in [-20, 60] dB (to 0.01 dB) at which the family reaches the
// target rate: closed form for cutset, bisection on plain evaluation for
// uniform/fixed, lambda-optimized threshold for mb, and bisection with a
// warm-started optimize() per probe for optimized. Throws
// unreachable_rate_error when 60 dB is not enough.
double snr_threshold(const Constellation& c, const XorClassIndex& xcls, RateFamily family,
                     double target_rate, const FamilyOptions& opts = {});

struct SweepRow {
    double snr_db = 0.0;
    RateFamily family = RateFamily::uniform;
    double rate_bits = 0.0;
};

// Achieved rate per family on an SNR grid (the mb family re-optimizes lambda
// and the optimized family re-runs optimize() at every point).
std::vector<SweepRow> sweep(const Constellation& c, const XorClassIndex& xcls,
                            double snr_from_db, double snr_to_db, double step_db,
                            const std::vector<RateFamily>& families,
                            const FamilyOptions& opts = {});

} // namespace macshape
