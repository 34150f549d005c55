#pragma once

#include "macshape/channel.hpp"
#include "macshape/constellation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace macshape {

// Probability vector over the symbols of one constellation.
struct InputDistribution {
    std::string constellation_id;
    std::vector<double> probs;
};

InputDistribution uniform_distribution(const Constellation& c);
InputDistribution point_mass(const Constellation& c, std::size_t index);
// Maxwell-Boltzmann family p_i proportional to exp(-lambda |a_i|^2).
InputDistribution mb_distribution(const Constellation& c, double lambda);

double avg_energy(const Constellation& c, const std::vector<double>& probs);

// Renormalizes probs to sum 1. Drift up to max_drift is silently repaired;
// anything larger throws std::invalid_argument (fixture transcription guard).
// Negative entries below -1e-12 also throw; tiny negatives are clamped to 0.
void renormalize_probs(std::vector<double>& probs, double max_drift = 1e-3);

enum class MIMethod { quadrature, monte_carlo };

struct GridParams {
    double spacing_in_sigma = 0.125;
    double extent_in_sigma = 10.0;
};

struct MIResult {
    double mi_bits = 0.0;
    double h_wc_bits = 0.0;
    std::vector<double> class_priors;
    MIMethod method = MIMethod::quadrature;
    std::optional<double> mc_stderr;
    // Provenance of the evaluation: noise variance and the per-user alphabet
    // scales of the geometry it was computed on (1 unless the users' average
    // energies differ; see pair_geometry).
    double sigma2 = 0.0;
    double scale_a = 1.0;
    double scale_b = 1.0;
    GridParams grid;               // quadrature only
    std::uint64_t mc_samples = 0;  // Monte Carlo only
    std::uint64_t mc_seed = 0;
};

// Induced distribution of the XOR message: Pr(class i) = sum_{(k,l) in
// class i} p_k q_l. Pass q = p for the symmetric case.
std::vector<double> class_prior(const std::vector<double>& p, const std::vector<double>& q,
                                const XorClassIndex& x);

// -sum priors log2 priors with the 0 log 0 = 0 convention.
double entropy_wc(const std::vector<double>& priors);

// Derivatives of H(XOR message) as a function of a single distribution p used
// by both users (q = p), valid on all of R^M so finite differences match in
// arbitrary directions, not just simplex-tangent ones.
std::vector<double> entropy_grad(const std::vector<double>& p, const XorClassIndex& x);
// Row-major M x M second-derivative matrix; classes with zero prior are
// skipped in the curvature sum (callers should supply strictly positive
// priors, per the gradient's 0 log 0 convention).
std::vector<double> entropy_hess(const std::vector<double>& p, const XorClassIndex& x);

// I(XOR message; Y) by grid quadrature of
//   I = H + integral sum_i f_i(y) log2(f_i(y)/F(y)) dy,
// f_i = sum_{(k,l) in class i} p_k q_l g(y - x_kl), F = sum_i f_i. This form
// needs no ambiguity precondition: coinciding superposition points simply
// merge their Gaussian weight.
MIResult mutual_information(const std::vector<double>& p, const std::vector<double>& q,
                            const XorClassIndex& x, const ChannelSpec& ch,
                            const QuadratureGrid& grid);

// Independent Monte Carlo estimate: samples (k,l) ~ p x q, y = x_kl + noise,
// and averages log2[f_i(y) / (P_i F(y))] whose expectation is the same MI.
// Deterministic in (n_samples, seed); per-sample RNG streams make the value
// independent of any execution schedule.
MIResult mutual_information_mc(const std::vector<double>& p, const std::vector<double>& q,
                               const XorClassIndex& x, const ChannelSpec& ch,
                               std::uint64_t n_samples, std::uint64_t seed);

// MI together with its derivatives in p, q (on R^M) and in the noise variance,
// all from one pass over the quadrature grid. The variance sensitivity is also
// split by output axis (d_sigma2 = d_sigma2_x + d_sigma2_y): for the
// orthogonal pam pairs the real axis carries user A and the imaginary axis
// user B, which is what the per-user power-tight chain rule needs.
struct MIGradient {
    double mi_bits = 0.0;
    std::vector<double> d_p, d_q;
    double d_sigma2 = 0.0;
    double d_sigma2_x = 0.0;
    double d_sigma2_y = 0.0;
};

MIGradient mutual_information_gradient(const std::vector<double>& p, const std::vector<double>& q,
                                       const XorClassIndex& x, const ChannelSpec& ch,
                                       const QuadratureGrid& grid);

// Classical per-transmitter bound 0.5 log2(1 + snr) for decoding a single
// message; the per-user rate of the cutset family is (d/2) log2(1 + snr).
double cutset_bound(double snr_linear);
double cutset_rate(const Constellation& c, double snr_db);
// Smallest SNR (dB) at which the cutset family reaches the target rate.
double cutset_threshold_db(const Constellation& c, double target_rate);

// Single-noise helper: sigma2 = max(E_p, E_q) / (d * s), the variance at
// which the busier user meets the power budget on the unscaled alphabet.
// Pair evaluation at an SNR uses pair_geometry below instead, which keeps
// both users power-tight; the two agree whenever the energies are equal.
double sigma2_for_snr_db(const Constellation& c, const std::vector<double>& p,
                         const std::vector<double>& q, double snr_db);

// Power-tight SNR convention for a pair: each user's alphabet is scaled so
// its own average energy meets the common budget, making both users report
// the same SNR. Equal energies collapse to the familiar single noise
// variance on the unscaled alphabet (scale_a = scale_b = 1); otherwise the
// geometry carries the scales and the noise is normalized to 1.
struct PairGeometry {
    XorClassIndex index;
    ChannelSpec ch{1.0};
    double scale_a = 1.0;
    double scale_b = 1.0;
};

PairGeometry pair_geometry(const Constellation& c, const XorClassIndex& x,
                           const std::vector<double>& p, const std::vector<double>& q,
                           double snr_db);

MIResult evaluate_at_snr(const Constellation& c, const XorClassIndex& x,
                         const std::vector<double>& p, const std::vector<double>& q,
                         double snr_db, const GridParams& grid = {});

// Smallest SNR in [-20, 60] dB (to 0.01 dB) where the fixed pair reaches
// target_rate; throws unreachable_rate_error if 60 dB is not enough.
double fixed_dist_threshold_db(const Constellation& c, const XorClassIndex& x,
                               const std::vector<double>& p, const std::vector<double>& q,
                               double target_rate, const GridParams& grid = {});

struct MBFit {
    double lambda = 0.0;
    double threshold_snr_db = 0.0;
};

// Minimizes the rate threshold over the Maxwell-Boltzmann family: golden-
// section search on log lambda over [1e-6, 10]. Throws unreachable_rate_error
// when no lambda in the bracket reaches the rate by 60 dB.
MBFit mb_lambda_search(const Constellation& c, const XorClassIndex& x, double target_rate,
                       const GridParams& grid = {});

// Best MB rate at a fixed SNR (maximizes MI over lambda; used by sweeps).
double mb_best_rate_at_snr(const Constellation& c, const XorClassIndex& x, double snr_db,
                           const GridParams& grid = {});

} // namespace macshape
