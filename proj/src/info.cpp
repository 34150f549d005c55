#include "macshape/info.hpp"

#include "macshape/errors.hpp"
#include "macshape/kernels.hpp"
#include "macshape/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace macshape {

namespace {

constexpr double kLogFloor = 1e-300; // floor inside logs; keeps 0 log 0 = 0 exact
constexpr double kLog2E = std::numbers::log2e;

void check_sizes(const std::vector<double>& p, const std::vector<double>& q,
                 const XorClassIndex& x) {
    if (p.size() != x.num_symbols() || q.size() != x.num_symbols())
        throw std::invalid_argument("distribution size does not match the constellation");
}

void check_grid_covers(const XorClassIndex& x, const QuadratureGrid& grid) {
    for (const auto& cls : x.classes) {
        for (const auto& e : cls) {
            if (e.x_ab.real() < grid.xs.front() || e.x_ab.real() > grid.xs.back() ||
                e.x_ab.imag() < grid.ys.front() || e.x_ab.imag() > grid.ys.back())
                throw std::invalid_argument("quadrature grid does not cover the constellation");
        }
    }
}

double finish_mi(double h, double raw_mi) {
    // The integrand is pointwise nonpositive, so raw_mi <= h up to rounding;
    // tiny negatives are quadrature truncation noise at extreme SNR.
    if (raw_mi < 0.0 && raw_mi > -1e-9) raw_mi = 0.0;
    if (raw_mi > h + 1e-6)
        throw std::runtime_error("mutual information exceeded the XOR-message entropy");
    return raw_mi;
}

} // namespace

InputDistribution uniform_distribution(const Constellation& c) {
    return {constellation_id(c),
            std::vector<double>(c.size(), 1.0 / static_cast<double>(c.size()))};
}

InputDistribution point_mass(const Constellation& c, std::size_t index) {
    if (index >= c.size()) throw std::invalid_argument("point-mass index out of range");
    InputDistribution d{constellation_id(c), std::vector<double>(c.size(), 0.0)};
    d.probs[index] = 1.0;
    return d;
}

InputDistribution mb_distribution(const Constellation& c, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    InputDistribution d{constellation_id(c), std::vector<double>(c.size())};
    // Subtract the minimum energy before exponentiating so large lambda
    // cannot underflow the whole vector.
    double emin = std::norm(c.points[0]);
    for (const auto& pt : c.points) emin = std::min(emin, std::norm(pt));
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        d.probs[i] = std::exp(-lambda * (std::norm(c.points[i]) - emin));
        sum += d.probs[i];
    }
    for (auto& v : d.probs) v /= sum;
    return d;
}

double avg_energy(const Constellation& c, const std::vector<double>& probs) {
    if (probs.size() != c.size())
        throw std::invalid_argument("distribution size does not match the constellation");
    double e = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) e += probs[i] * std::norm(c.points[i]);
    return e;
}

void renormalize_probs(std::vector<double>& probs, double max_drift) {
    double sum = 0.0;
    for (auto& v : probs) {
        if (v < 0.0) {
            if (v < -1e-12) throw std::invalid_argument("negative probability entry");
            v = 0.0;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > max_drift)
        throw std::invalid_argument("probabilities sum to " + std::to_string(sum) +
                                    ", beyond the accepted drift");
    if (sum <= 0.0) throw std::invalid_argument("probabilities sum to zero");
    for (auto& v : probs) v /= sum;
}

std::vector<double> class_prior(const std::vector<double>& p, const std::vector<double>& q,
                                const XorClassIndex& x) {
    check_sizes(p, q, x);
    std::vector<double> priors(x.num_classes(), 0.0);
    for (std::size_t i = 0; i < x.classes.size(); ++i)
        for (const auto& e : x.classes[i]) priors[i] += p[e.k] * q[e.l];
    return priors;
}

double entropy_wc(const std::vector<double>& priors) {
    double h = 0.0;
    for (double v : priors) h -= v * std::log2(std::max(v, kLogFloor));
    return h;
}

std::vector<double> entropy_grad(const std::vector<double>& p, const XorClassIndex& x) {
    check_sizes(p, p, x);
    const std::vector<double> priors = class_prior(p, p, x);
    std::vector<double> g(p.size(), 0.0);
    for (std::size_t i = 0; i < x.classes.size(); ++i) {
        const double c = std::log2(std::max(priors[i], kLogFloor)) + kLog2E;
        for (const auto& e : x.classes[i]) {
            g[e.k] -= p[e.l] * c;
            g[e.l] -= p[e.k] * c;
        }
    }
    return g;
}

std::vector<double> entropy_hess(const std::vector<double>& p, const XorClassIndex& x) {
    check_sizes(p, p, x);
    const std::size_t M = p.size();
    const std::vector<double> priors = class_prior(p, p, x);

    // partner[i][t]: the symbol whose label XORs with labels[t] to class i.
    std::vector<std::vector<std::size_t>> partner(x.num_classes(),
                                                  std::vector<std::size_t>(M, 0));
    std::vector<std::size_t> by_label(M, 0);
    for (std::size_t k = 0; k < M; ++k) by_label[x.labels[k]] = k;
    for (std::size_t i = 0; i < x.num_classes(); ++i)
        for (std::size_t t = 0; t < M; ++t)
            partner[i][t] = by_label[static_cast<std::size_t>(i) ^ x.labels[t]];

    std::vector<double> hess(M * M, 0.0);
    for (std::size_t t = 0; t < M; ++t) {
        for (std::size_t u = 0; u < M; ++u) {
            const std::size_t istar = static_cast<std::size_t>(x.labels[t] ^ x.labels[u]);
            double v = -2.0 * (std::log2(std::max(priors[istar], kLogFloor)) + kLog2E);
            for (std::size_t i = 0; i < x.num_classes(); ++i) {
                if (priors[i] <= 0.0) continue;
                v -= 4.0 * kLog2E * p[partner[i][t]] * p[partner[i][u]] / priors[i];
            }
            hess[t * M + u] = v;
        }
    }
    return hess;
}

MIResult mutual_information(const std::vector<double>& p, const std::vector<double>& q,
                            const XorClassIndex& x, const ChannelSpec& ch,
                            const QuadratureGrid& grid) {
    check_sizes(p, q, x);
    check_grid_covers(x, grid);

    MIResult r;
    r.method = MIMethod::quadrature;
    r.sigma2 = ch.sigma2;
    r.grid = {grid.spacing_in_sigma, grid.extent_in_sigma};
    r.class_priors = class_prior(p, q, x);
    r.h_wc_bits = entropy_wc(r.class_priors);

    const MixtureSums sums = accumulate_mixture(x, p.data(), q.data(), ch.sigma2, grid, false);
    r.mi_bits = finish_mi(r.h_wc_bits, r.h_wc_bits + grid.cell_weight * sums.integrand);
    return r;
}

MIGradient mutual_information_gradient(const std::vector<double>& p, const std::vector<double>& q,
                                       const XorClassIndex& x, const ChannelSpec& ch,
                                       const QuadratureGrid& grid) {
    check_sizes(p, q, x);
    check_grid_covers(x, grid);

    const std::vector<double> priors = class_prior(p, q, x);
    const double h = entropy_wc(priors);
    const MixtureSums sums = accumulate_mixture(x, p.data(), q.data(), ch.sigma2, grid, true);
    const double w = grid.cell_weight;

    MIGradient g;
    g.mi_bits = finish_mi(h, h + w * sums.integrand);
    g.d_p.assign(p.size(), 0.0);
    g.d_q.assign(q.size(), 0.0);
    for (std::size_t i = 0; i < x.classes.size(); ++i) {
        const double c = std::log2(std::max(priors[i], kLogFloor)) + kLog2E;
        for (const auto& e : x.classes[i]) {
            g.d_p[e.k] -= q[e.l] * c;
            g.d_q[e.l] -= p[e.k] * c;
        }
    }
    for (std::size_t t = 0; t < p.size(); ++t) {
        g.d_p[t] += w * sums.grad_p[t];
        g.d_q[t] += w * sums.grad_q[t];
    }
    // The normalization term of each axis' Gaussian contributes half of the
    // -integrand/sigma2 piece, so the per-axis parts sum to the isotropic one.
    g.d_sigma2_x = w * (sums.r2x_weighted / (2.0 * ch.sigma2 * ch.sigma2) -
                        0.5 * sums.integrand / ch.sigma2);
    g.d_sigma2_y = w * (sums.r2y_weighted / (2.0 * ch.sigma2 * ch.sigma2) -
                        0.5 * sums.integrand / ch.sigma2);
    g.d_sigma2 = g.d_sigma2_x + g.d_sigma2_y;
    return g;
}

MIResult mutual_information_mc(const std::vector<double>& p, const std::vector<double>& q,
                               const XorClassIndex& x, const ChannelSpec& ch,
                               std::uint64_t n_samples, std::uint64_t seed) {
    check_sizes(p, q, x);
    if (n_samples < 1000) throw std::invalid_argument("need at least 1000 samples");

    const std::size_t M = x.num_symbols();
    std::vector<double> cum_p(M), cum_q(M);
    double acc = 0.0;
    for (std::size_t i = 0; i < M; ++i) cum_p[i] = (acc += p[i]);
    acc = 0.0;
    for (std::size_t i = 0; i < M; ++i) cum_q[i] = (acc += q[i]);
    cum_p.back() = cum_q.back() = 1.0;

    const std::vector<double> priors = class_prior(p, q, x);
    const std::size_t C = x.num_classes();
    // superposition point per (k,l), indexed k*M+l
    std::vector<cplx> x_ab(M * M);
    for (const auto& cls : x.classes)
        for (const auto& e : cls) x_ab[static_cast<std::size_t>(e.k) * M + e.l] = e.x_ab;

    const double sigma = std::sqrt(ch.sigma2);
    std::vector<double> f(C);
    double sum_v = 0.0, sum_v2 = 0.0;
    for (std::uint64_t s = 0; s < n_samples; ++s) {
        // One RNG stream per sample index: the estimate is a pure function of
        // (seed, n_samples) regardless of evaluation order.
        SplitMix64 rng(stream_seed(seed, s));
        const auto pick = [&](const std::vector<double>& cum) {
            const double u = rng.uniform();
            return static_cast<std::size_t>(
                std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        };
        const std::size_t k = pick(cum_p), l = pick(cum_q);
        double n0 = 0.0, n1 = 0.0;
        normal_pair(rng, n0, n1);
        const cplx y = x_ab[k * M + l] + cplx(sigma * n0, sigma * n1);

        std::fill(f.begin(), f.end(), 0.0);
        for (std::size_t i = 0; i < C; ++i)
            for (const auto& e : x.classes[i]) f[i] += p[e.k] * q[e.l] * likelihood(y, e.x_ab, ch);
        double total = 0.0;
        for (double v : f) total += v;
        const std::size_t cls = static_cast<std::size_t>(x.labels[k] ^ x.labels[l]);
        const double v = std::log2(std::max(f[cls], kLogFloor)) -
                         std::log2(std::max(priors[cls] * total, kLogFloor));
        sum_v += v;
        sum_v2 += v * v;
    }

    const double n = static_cast<double>(n_samples);
    const double mean = sum_v / n;
    const double var = std::max(0.0, (sum_v2 - n * mean * mean) / (n - 1.0));

    MIResult r;
    r.method = MIMethod::monte_carlo;
    r.sigma2 = ch.sigma2;
    r.mc_samples = n_samples;
    r.mc_seed = seed;
    r.class_priors = priors;
    r.h_wc_bits = entropy_wc(priors);
    r.mi_bits = mean;
    r.mc_stderr = std::sqrt(var / n);
    return r;
}

double cutset_bound(double snr_linear) {
    if (snr_linear < 0.0) throw std::invalid_argument("snr must be nonnegative");
    return 0.5 * std::log2(1.0 + snr_linear);
}

double cutset_rate(const Constellation& c, double snr_db) {
    return c.signal_dimensions * cutset_bound(snr_db_to_linear(snr_db));
}

double cutset_threshold_db(const Constellation& c, double target_rate) {
    if (!(target_rate > 0.0)) throw std::invalid_argument("target rate must be positive");
    return snr_linear_to_db(std::exp2(2.0 * target_rate / c.signal_dimensions) - 1.0);
}

double sigma2_for_snr_db(const Constellation& c, const std::vector<double>& p,
                         const std::vector<double>& q, double snr_db) {
    const double e = std::max(avg_energy(c, p), avg_energy(c, q));
    return e / (c.signal_dimensions * snr_db_to_linear(snr_db));
}

PairGeometry pair_geometry(const Constellation& c, const XorClassIndex& x,
                           const std::vector<double>& p, const std::vector<double>& q,
                           double snr_db) {
    const double ep = avg_energy(c, p);
    const double eq = avg_energy(c, q);
    if (!(ep > 0.0) || !(eq > 0.0))
        throw std::invalid_argument("each user needs positive average energy");

    PairGeometry g;
    if (ep == eq) {
        // Power-tight already; keep the unscaled alphabet and absorb the
        // budget into the noise, as in the single-user convention.
        g.index = x;
        g.ch = ChannelSpec{ep / (c.signal_dimensions * snr_db_to_linear(snr_db))};
        return g;
    }
    const double per_dim = c.signal_dimensions * snr_db_to_linear(snr_db);
    g.scale_a = std::sqrt(per_dim / ep);
    g.scale_b = std::sqrt(per_dim / eq);
    g.index = scaled_classes(c, x, g.scale_a, g.scale_b);
    g.ch = ChannelSpec{1.0};
    return g;
}

MIResult evaluate_at_snr(const Constellation& c, const XorClassIndex& x,
                         const std::vector<double>& p, const std::vector<double>& q,
                         double snr_db, const GridParams& grid) {
    const PairGeometry geo = pair_geometry(c, x, p, q, snr_db);
    MIResult r = mutual_information(
        p, q, geo.index, geo.ch,
        build_grid(geo.index, geo.ch, grid.spacing_in_sigma, grid.extent_in_sigma));
    r.scale_a = geo.scale_a;
    r.scale_b = geo.scale_b;
    return r;
}

double fixed_dist_threshold_db(const Constellation& c, const XorClassIndex& x,
                               const std::vector<double>& p, const std::vector<double>& q,
                               double target_rate, const GridParams& grid) {
    const auto rate_at = [&](double db) {
        return evaluate_at_snr(c, x, p, q, db, grid).mi_bits;
    };
    double lo = -20.0, hi = 60.0;
    if (rate_at(hi) < target_rate)
        throw unreachable_rate_error("rate " + std::to_string(target_rate) +
                                     " not reachable by 60 dB");
    if (rate_at(lo) >= target_rate) return lo; // bracket floor
    while (hi - lo > 0.01) {
        const double mid = 0.5 * (lo + hi);
        (rate_at(mid) >= target_rate ? hi : lo) = mid;
    }
    return hi;
}

MBFit mb_lambda_search(const Constellation& c, const XorClassIndex& x, double target_rate,
                       const GridParams& grid) {
    if (!(target_rate > 0.0) || target_rate >= static_cast<double>(c.m) * c.signal_dimensions)
        throw std::invalid_argument("target rate outside (0, m*d)");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    const auto threshold_at = [&](double log_lambda) {
        const InputDistribution d = mb_distribution(c, std::exp(log_lambda));
        try {
            return fixed_dist_threshold_db(c, x, d.probs, d.probs, target_rate, grid);
        } catch (const unreachable_rate_error&) {
            return kInf; // this lambda over-concentrates; search continues elsewhere
        }
    };

    // Golden-section minimization over log lambda in [1e-6, 10].
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(1e-6), b = std::log(10.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = threshold_at(x1), f2 = threshold_at(x2);
    for (int it = 0; it < 40; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = threshold_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = threshold_at(x2);
        }
    }
    const double best_log = f1 <= f2 ? x1 : x2;
    const double best = std::min(f1, f2);
    if (!std::isfinite(best))
        throw unreachable_rate_error("no Maxwell-Boltzmann parameter reaches the rate by 60 dB");
    return {std::exp(best_log), best};
}

double mb_best_rate_at_snr(const Constellation& c, const XorClassIndex& x, double snr_db,
                           const GridParams& grid) {
    const auto rate_at = [&](double log_lambda) {
        const InputDistribution d = mb_distribution(c, std::exp(log_lambda));
        return evaluate_at_snr(c, x, d.probs, d.probs, snr_db, grid).mi_bits;
    };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(1e-6), b = std::log(10.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = rate_at(x1), f2 = rate_at(x2);
    for (int it = 0; it < 32; ++it) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = rate_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = rate_at(x2);
        }
    }
    return std::max(f1, f2);
}

} // namespace macshape
