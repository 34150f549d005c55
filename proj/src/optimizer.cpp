#include "macshape/optimizer.hpp"

#include "macshape/errors.hpp"
#include "macshape/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <thread>

namespace macshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

std::vector<double> softmax(const double* z, std::size_t n) {
    double zmax = -kInf;
    for (std::size_t i = 0; i < n; ++i) zmax = std::max(zmax, z[i]);
    std::vector<double> p(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += (p[i] = std::exp(z[i] - zmax));
    for (auto& v : p) v /= sum;
    return p;
}

// Softmax pullback of the minimization objective -J onto one block of z.
void pullback(const std::vector<double>& prob, const std::vector<double>& g,
              std::vector<double>& gz, std::size_t off) {
    const double mu = dot(prob, g);
    for (std::size_t i = 0; i < prob.size(); ++i) gz[off + i] = -prob[i] * (g[i] - mu);
}

// Objective for one start: J(z) = MI of the softmax-mapped distribution(s)
// at the problem's SNR under the power-tight convention: symmetric iterates
// keep the alphabet and let the noise follow the average energy, asymmetric
// ones scale each user's alphabet to the budget against unit noise.
struct Objective {
    const Constellation& c;
    const XorClassIndex& x;
    double snr_lin;
    GridParams grid;
    bool asymmetric;

    std::size_t dim() const { return c.size() * (asymmetric ? 2 : 1); }

    std::pair<std::vector<double>, std::vector<double>> split(const std::vector<double>& z) const {
        const std::size_t M = c.size();
        auto p = softmax(z.data(), M);
        auto q = asymmetric ? softmax(z.data() + M, M) : p;
        return {std::move(p), std::move(q)};
    }

    // Returns J; fills the minimization gradient of -J in z-space and the
    // simplex KKT residual of the maximization gradient in p-space.
    double eval(const std::vector<double>& z, std::vector<double>& gz, double& kkt) const {
        const std::size_t M = c.size();
        const double d = c.signal_dimensions;
        auto [p, q] = split(z);
        const double ep = avg_energy(c, p), eq = avg_energy(c, q);

        std::vector<double> gp(M), gq;
        if (asymmetric) {
            // Each user's alphabet is scaled to the power budget against unit
            // noise; the pair family puts user A on the real axis and user B
            // on the imaginary one, so the scale sensitivities come from the
            // per-axis noise derivatives via d ln s_a / d p_t = -e_t/(2 E_p)
            // and dJ/d ln s_a = -2 dJ/d sigma2_x (likewise for B and y).
            const double sa = std::sqrt(d * snr_lin / ep);
            const double sb = std::sqrt(d * snr_lin / eq);
            const XorClassIndex sx = scaled_classes(c, x, sa, sb);
            const ChannelSpec ch{1.0};
            const QuadratureGrid qg =
                build_grid(sx, ch, grid.spacing_in_sigma, grid.extent_in_sigma);
            const MIGradient mg = mutual_information_gradient(p, q, sx, ch, qg);
            gq.resize(M);
            for (std::size_t t = 0; t < M; ++t) {
                const double e_t = std::norm(c.points[t]);
                gp[t] = mg.d_p[t] + mg.d_sigma2_x * e_t / ep;
                gq[t] = mg.d_q[t] + mg.d_sigma2_y * e_t / eq;
            }
            kkt = std::max(kkt_residual(p, gp), kkt_residual(q, gq));
            gz.assign(dim(), 0.0);
            pullback(p, gp, gz, 0);
            pullback(q, gq, gz, M);
            return mg.mi_bits;
        }

        const ChannelSpec ch{ep / (d * snr_lin)};
        const QuadratureGrid qg = build_grid(x, ch, grid.spacing_in_sigma, grid.extent_in_sigma);
        const MIGradient mg = mutual_information_gradient(p, q, x, ch, qg);

        // Chain rule through sigma2 = E_p/(d*snr) on the shared distribution.
        const double chain = mg.d_sigma2 / (d * snr_lin);
        for (std::size_t t = 0; t < M; ++t)
            gp[t] = mg.d_p[t] + mg.d_q[t] + chain * std::norm(c.points[t]);

        kkt = kkt_residual(p, gp);
        gz.assign(dim(), 0.0);
        pullback(p, gp, gz, 0);
        return mg.mi_bits;
    }
};

struct SolveOutcome {
    std::vector<double> z;
    double objective = -kInf; // achieved MI
    int iterations = 0;
    bool converged = false;
};

// L-BFGS (memory 10) with Armijo backtracking, minimizing -J in z-space but
// stopping on the projected gradient norm or on objective stagnation.
SolveOutcome lbfgs_maximize(const Objective& obj, std::vector<double> z,
                            const OptimTolerances& tol) {
    constexpr int kMem = 10;
    constexpr double kArmijo = 1e-4;
    const std::size_t n = z.size();

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    std::vector<double> g(n);
    double kkt = kInf;
    double J = obj.eval(z, g, kkt);
    if (!std::isfinite(J)) throw optimization_failed_error("non-finite objective at start point");
    double phi = -J;

    SolveOutcome out;
    int stagnant = 0;
    int it = 0;
    for (; it < tol.max_iters; ++it) {
        if (kkt <= tol.grad_tol) {
            out.converged = true;
            break;
        }

        // Two-loop recursion for the quasi-Newton direction.
        std::vector<double> dir = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t j = s_hist.size(); j-- > 0;) {
            alpha[j] = rho_hist[j] * dot(s_hist[j], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[j] * y_hist[j][i];
        }
        if (!s_hist.empty()) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            const double gamma = dot(s, y) / dot(y, y);
            for (auto& v : dir) v *= gamma;
        }
        for (std::size_t j = 0; j < s_hist.size(); ++j) {
            const double beta = rho_hist[j] * dot(y_hist[j], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha[j] - beta) * s_hist[j][i];
        }
        for (auto& v : dir) v = -v;

        double slope = dot(g, dir);
        if (!(slope < 0.0)) { // not a descent direction: fall back to steepest
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            slope = -dot(g, g);
            if (slope == 0.0) {
                out.converged = true;
                break;
            }
        }

        double t = s_hist.empty() ? std::min(1.0, 1.0 / (1e-12 + norm2(g))) : 1.0;
        bool accepted = false;
        std::vector<double> z_try(n), g_try(n);
        double J_try = -kInf, kkt_try = kInf, phi_try = kInf;
        for (int bt = 0; bt < 40; ++bt) {
            for (std::size_t i = 0; i < n; ++i) z_try[i] = z[i] + t * dir[i];
            J_try = obj.eval(z_try, g_try, kkt_try);
            phi_try = -J_try;
            if (std::isfinite(phi_try) && phi_try <= phi + kArmijo * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break; // no decrease representable: stationary to precision

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = z_try[i] - z[i];
            y[i] = g_try[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * norm2(s) * norm2(y)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > kMem) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const bool stalled =
            std::abs(phi - phi_try) <= tol.obj_tol * std::max(1.0, std::abs(phi_try));
        z.swap(z_try);
        g.swap(g_try);
        phi = phi_try;
        J = J_try;
        kkt = kkt_try;
        if (stalled) {
            if (++stagnant >= 2) {
                ++it;
                out.converged = kkt <= 10.0 * tol.grad_tol;
                break;
            }
        } else {
            stagnant = 0;
        }
    }

    out.z = std::move(z);
    out.objective = J;
    out.iterations = it;
    return out;
}

std::vector<double> log_of(const std::vector<double>& p) {
    std::vector<double> z(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) z[i] = std::log(std::max(p[i], 1e-300));
    return z;
}

void exact_simplex(std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) sum += v;
    for (auto& v : p) v /= sum;
}

} // namespace

double kkt_residual(const std::vector<double>& p, const std::vector<double>& grad) {
    const double mu = dot(p, grad);
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double excess = grad[i] - mu;
        // On-simplex projected gradient component, p_i * (g_i - mu); the
        // unscaled positive excess of a (numerically) dead coordinate is kept
        // as well, so mass that wants to re-enter one is never missed.
        r = std::max(r, p[i] * std::abs(excess));
        if (p[i] <= 1e-6) r = std::max(r, std::max(0.0, excess));
    }
    return r;
}

ShapingResult optimize(const ShapingProblem& prob) {
    if (prob.starts < 1) throw std::invalid_argument("need at least one start");
    if (!(prob.tol.grad_tol > 0.0) || !(prob.tol.obj_tol > 0.0) || prob.tol.max_iters < 1)
        throw std::invalid_argument("tolerances must be positive");
    if (!prob.hint_q.empty() && prob.hint_q.size() != prob.hint_p.size())
        throw std::invalid_argument("hint_q must be empty or match hint_p");

    const Constellation c = make_constellation(prob.constellation_id);
    const XorClassIndex x = build_xor_classes(c);
    const std::size_t M = c.size();
    const bool asym = prob.mode == ShapingMode::asymmetric;
    if (asym && c.family != Family::pam_orthogonal_pair)
        throw std::invalid_argument(
            "asymmetric shaping needs the orthogonal pam pair: the per-user "
            "power scales are separable only when each user owns one axis");
    const Objective obj{c, x, snr_db_to_linear(prob.snr_db), prob.grid, asym};

    const int total = prob.starts + static_cast<int>(prob.hint_p.size());
    std::vector<StartLog> logs(total);
    std::vector<std::vector<double>> final_p(total), final_q(total);

    const auto run_start = [&](int idx) {
        StartLog log;
        log.start_index = idx;
        try {
            if (idx < prob.starts) {
                SplitMix64 rng(stream_seed(prob.seed, static_cast<std::uint64_t>(idx)));
                log.init_p = dirichlet_flat(rng, M);
                if (asym) log.init_q = dirichlet_flat(rng, M);
            } else {
                log.init_p = prob.hint_p[static_cast<std::size_t>(idx - prob.starts)];
                if (log.init_p.size() != M) throw std::invalid_argument("bad hint size");
                if (asym) {
                    log.init_q = prob.hint_q.empty()
                                     ? log.init_p
                                     : prob.hint_q[static_cast<std::size_t>(idx - prob.starts)];
                    if (log.init_q.size() != M) throw std::invalid_argument("bad hint size");
                }
            }
            std::vector<double> z = log_of(log.init_p);
            if (asym) {
                const std::vector<double> zq = log_of(asym && !log.init_q.empty() ? log.init_q
                                                                                  : log.init_p);
                z.insert(z.end(), zq.begin(), zq.end());
            }
            SolveOutcome sol = lbfgs_maximize(obj, std::move(z), prob.tol);
            auto [p, q] = obj.split(sol.z);
            log.objective = sol.objective;
            log.iterations = sol.iterations;
            log.converged = sol.converged;
            final_p[idx] = std::move(p);
            final_q[idx] = std::move(q);
        } catch (const std::exception&) {
            log.failed = true;
            log.objective = -kInf;
        }
        logs[idx] = std::move(log);
    };

    const int nthreads = std::clamp(prob.threads, 1, 64);
    if (nthreads <= 1 || total <= 1) {
        for (int i = 0; i < total; ++i) run_start(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        const int workers = std::min(nthreads, total);
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < total; i = next.fetch_add(1)) run_start(i);
            });
        for (auto& th : pool) th.join();
    }

    int best = -1;
    for (int i = 0; i < total; ++i) {
        if (logs[i].failed) continue;
        if (best < 0 || logs[i].objective > logs[best].objective) best = i;
    }
    if (best < 0) throw optimization_failed_error("every optimization start failed");

    ShapingResult res;
    res.constellation_id = prob.constellation_id;
    res.snr_db = prob.snr_db;
    res.mode = prob.mode;
    res.seed = prob.seed;
    res.tol = prob.tol;
    res.grid = prob.grid;
    res.best_start = best;
    res.start_log = std::move(logs);
    exact_simplex(final_p[best]);
    exact_simplex(final_q[best]);
    res.best_p = {prob.constellation_id, final_p[best]};
    res.best_q = {prob.constellation_id, final_q[best]};
    res.mi_bits =
        evaluate_at_snr(c, x, res.best_p.probs, res.best_q.probs, prob.snr_db, prob.grid).mi_bits;
    return res;
}

std::string family_name(RateFamily f) {
    switch (f) {
    case RateFamily::optimized: return "optimized";
    case RateFamily::uniform: return "uniform";
    case RateFamily::mb: return "mb";
    case RateFamily::cutset: return "cutset";
    case RateFamily::fixed: return "fixed";
    }
    return "unknown";
}

namespace {

// Rate of the optimized family at one SNR, warm-started with the previous
// probe's solution (carried via warm_p/warm_q) for cheap, stable bisections.
double optimized_rate_at(const Constellation& c, double snr_db, const FamilyOptions& opts,
                         std::vector<double>& warm_p, std::vector<double>& warm_q) {
    ShapingProblem prob;
    prob.constellation_id = constellation_id(c);
    prob.snr_db = snr_db;
    prob.mode = ShapingMode::symmetric;
    prob.starts = opts.starts;
    prob.seed = opts.seed;
    prob.tol = opts.tol;
    prob.grid = opts.grid;
    prob.threads = opts.threads;
    if (!warm_p.empty()) prob.hint_p = {warm_p};
    const ShapingResult r = optimize(prob);
    warm_p = r.best_p.probs;
    warm_q = r.best_q.probs;
    return r.mi_bits;
}

} // namespace

double snr_threshold(const Constellation& c, const XorClassIndex& xcls, RateFamily family,
                     double target_rate, const FamilyOptions& opts) {
    switch (family) {
    case RateFamily::cutset:
        return cutset_threshold_db(c, target_rate);
    case RateFamily::uniform: {
        const InputDistribution u = uniform_distribution(c);
        return fixed_dist_threshold_db(c, xcls, u.probs, u.probs, target_rate, opts.grid);
    }
    case RateFamily::fixed: {
        if (opts.fixed_p.empty())
            throw std::invalid_argument("fixed family needs a distribution");
        const auto& q = opts.fixed_q.empty() ? opts.fixed_p : opts.fixed_q;
        return fixed_dist_threshold_db(c, xcls, opts.fixed_p, q, target_rate, opts.grid);
    }
    case RateFamily::mb:
        return mb_lambda_search(c, xcls, target_rate, opts.grid).threshold_snr_db;
    case RateFamily::optimized: {
        std::vector<double> warm_p, warm_q;
        double lo = -20.0, hi = 60.0;
        bool feasible_seen = false;
        while (hi - lo > 0.01) {
            const double mid = 0.5 * (lo + hi);
            if (optimized_rate_at(c, mid, opts, warm_p, warm_q) >= target_rate) {
                hi = mid;
                feasible_seen = true;
            } else {
                lo = mid;
            }
        }
        if (!feasible_seen && optimized_rate_at(c, 60.0, opts, warm_p, warm_q) < target_rate)
            throw unreachable_rate_error("rate " + std::to_string(target_rate) +
                                         " not reachable by 60 dB");
        return hi;
    }
    }
    throw std::invalid_argument("unknown family");
}

std::vector<SweepRow> sweep(const Constellation& c, const XorClassIndex& xcls,
                            double snr_from_db, double snr_to_db, double step_db,
                            const std::vector<RateFamily>& families, const FamilyOptions& opts) {
    if (!(snr_from_db < snr_to_db)) throw std::invalid_argument("sweep range must be increasing");
    if (!(step_db > 0.0)) throw std::invalid_argument("sweep step must be positive");

    const InputDistribution u = uniform_distribution(c);
    std::vector<double> warm_p, warm_q;
    std::vector<SweepRow> rows;
    const int n = static_cast<int>(std::floor((snr_to_db - snr_from_db) / step_db + 1e-9));
    for (int i = 0; i <= n; ++i) {
        const double s = snr_from_db + i * step_db;
        for (const RateFamily f : families) {
            double rate = 0.0;
            switch (f) {
            case RateFamily::cutset: rate = cutset_rate(c, s); break;
            case RateFamily::uniform:
                rate = evaluate_at_snr(c, xcls, u.probs, u.probs, s, opts.grid).mi_bits;
                break;
            case RateFamily::mb: rate = mb_best_rate_at_snr(c, xcls, s, opts.grid); break;
            case RateFamily::optimized:
                rate = optimized_rate_at(c, s, opts, warm_p, warm_q);
                break;
            case RateFamily::fixed: {
                if (opts.fixed_p.empty())
                    throw std::invalid_argument("fixed family needs a distribution");
                const auto& q = opts.fixed_q.empty() ? opts.fixed_p : opts.fixed_q;
                rate = evaluate_at_snr(c, xcls, opts.fixed_p, q, s, opts.grid).mi_bits;
                break;
            }
            }
            rows.push_back({s, f, rate});
        }
    }
    return rows;
}

} // namespace macshape
