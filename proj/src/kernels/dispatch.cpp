#include "mixture_layout.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace macshape {

namespace {

std::atomic<int> g_forced{-1};

} // namespace

bool backend_supported(Backend b) {
    if (b == Backend::scalar) return true;
#if defined(MACSHAPE_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() {
    const int f = g_forced.load(std::memory_order_relaxed);
    if (f >= 0) return static_cast<Backend>(f);
    return backend_supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

void force_backend(std::optional<Backend> b) {
    if (!b) {
        g_forced.store(-1, std::memory_order_relaxed);
        return;
    }
    if (!backend_supported(*b))
        throw std::invalid_argument("backend '" + backend_name(*b) + "' is not supported on this host");
    g_forced.store(static_cast<int>(*b), std::memory_order_relaxed);
}

std::string backend_name(Backend b) {
    switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    }
    return "unknown";
}

namespace detail {

namespace {

// Bucket key for distinct axis centres. Unscaled superposition points sit on
// an integer lattice (exact buckets); scaled geometries land off-lattice, so
// the key only groups duplicates and the tables are built from an exact
// representative coordinate, never from the key itself.
long long centre_key(double v) { return std::llround(v * 4096.0); }

struct AxisTables {
    std::vector<double> centres;
    std::vector<double> tab, tab_r2; // [n_centres][n_nodes], zero outside window
    std::vector<int> lo, hi;         // active node window per centre
};

AxisTables build_axis(const std::vector<double>& nodes, const std::map<long long, int>& centres,
                      const std::vector<double>& exact, double sigma2, double reach,
                      double spacing, int pad_to) {
    const int n = static_cast<int>(nodes.size());
    const int n_pad = pad_to > 0 ? ((n + pad_to - 1) / pad_to) * pad_to : n;
    const int nc = static_cast<int>(centres.size());
    const double inv_norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * sigma2);
    const double x0 = nodes.front();

    AxisTables t;
    t.centres.resize(nc);
    t.tab.assign(static_cast<std::size_t>(nc) * n_pad, 0.0);
    t.tab_r2.assign(static_cast<std::size_t>(nc) * n_pad, 0.0);
    t.lo.resize(nc);
    t.hi.resize(nc);
    for (const auto& [key, idx] : centres) {
        const double c = exact[idx];
        t.centres[idx] = c;
        // Node window |node - centre| <= reach; the epsilon guards ties.
        int lo = static_cast<int>(std::ceil((c - reach - x0) / spacing - 1e-9));
        int hi = static_cast<int>(std::floor((c + reach - x0) / spacing + 1e-9)) + 1;
        lo = std::clamp(lo, 0, n);
        hi = std::clamp(hi, lo, n);
        double* row = t.tab.data() + static_cast<std::size_t>(idx) * n_pad;
        double* row2 = t.tab_r2.data() + static_cast<std::size_t>(idx) * n_pad;
        for (int i = lo; i < hi; ++i) {
            const double d = nodes[i] - c;
            const double g = inv_norm * std::exp(-d * d / (2.0 * sigma2));
            row[i] = g;
            row2[i] = g * d * d;
        }
        if (pad_to > 0) {
            lo = lo & ~(pad_to - 1);
            hi = std::min(n_pad, (hi + pad_to - 1) & ~(pad_to - 1));
        }
        t.lo[idx] = lo;
        t.hi[idx] = hi;
    }
    return t;
}

std::vector<std::pair<int, int>> merge_spans(std::vector<std::pair<int, int>> spans) {
    std::sort(spans.begin(), spans.end());
    std::vector<std::pair<int, int>> out;
    for (const auto& s : spans) {
        if (s.second <= s.first) continue;
        if (!out.empty() && s.first <= out.back().second)
            out.back().second = std::max(out.back().second, s.second);
        else
            out.push_back(s);
    }
    return out;
}

} // namespace

MixtureLayout build_layout(const XorClassIndex& x, const double* p, const double* q,
                           double sigma2, const QuadratureGrid& grid, bool want_gradient) {
    MixtureLayout lay;
    lay.num_classes = static_cast<int>(x.num_classes());
    lay.num_symbols = static_cast<int>(x.num_symbols());
    lay.want_gradient = want_gradient;

    std::map<long long, int> re_centres, im_centres;
    for (const auto& cls : x.classes) {
        for (const auto& e : cls) {
            re_centres.emplace(centre_key(e.x_ab.real()), 0);
            im_centres.emplace(centre_key(e.x_ab.imag()), 0);
        }
    }
    int next = 0;
    for (auto& [key, idx] : re_centres) idx = next++;
    next = 0;
    for (auto& [key, idx] : im_centres) idx = next++;

    // Exact representative coordinate per bucket (scaled points are not
    // recoverable from the key).
    std::vector<double> re_exact(re_centres.size()), im_exact(im_centres.size());
    for (const auto& cls : x.classes) {
        for (const auto& e : cls) {
            re_exact[static_cast<std::size_t>(re_centres.at(centre_key(e.x_ab.real())))] =
                e.x_ab.real();
            im_exact[static_cast<std::size_t>(im_centres.at(centre_key(e.x_ab.imag())))] =
                e.x_ab.imag();
        }
    }

    const double sigma = std::sqrt(sigma2);
    const double reach = grid.extent_in_sigma * sigma;
    AxisTables re = build_axis(grid.xs, re_centres, re_exact, sigma2, reach, grid.spacing, 4);
    AxisTables im = build_axis(grid.ys, im_centres, im_exact, sigma2, reach, grid.spacing, 0);

    lay.n_re = static_cast<int>(re.tab.size()) / static_cast<int>(re_centres.size());
    lay.n_im = static_cast<int>(grid.ys.size());
    lay.n_cre = static_cast<int>(re_centres.size());
    lay.n_cim = static_cast<int>(im_centres.size());
    lay.tab_re = std::move(re.tab);
    lay.tab_re_r2 = std::move(re.tab_r2);
    lay.tab_im = std::move(im.tab);
    lay.tab_im_r2 = std::move(im.tab_r2);
    lay.re_lo = std::move(re.lo);
    lay.re_hi = std::move(re.hi);

    struct Entry {
        std::int32_t cls, cre, cim, k, l;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(lay.num_classes) * x.num_symbols());
    for (std::size_t i = 0; i < x.classes.size(); ++i) {
        for (const auto& e : x.classes[i]) {
            entries.push_back({static_cast<std::int32_t>(i),
                               static_cast<std::int32_t>(re_centres.at(centre_key(e.x_ab.real()))),
                               static_cast<std::int32_t>(im_centres.at(centre_key(e.x_ab.imag()))),
                               static_cast<std::int32_t>(e.k), static_cast<std::int32_t>(e.l)});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.cls, a.cre, a.cim) < std::tie(b.cls, b.cre, b.cim);
    });

    lay.num_entries = static_cast<int>(entries.size());
    lay.e_class.reserve(entries.size());
    lay.e_cre.reserve(entries.size());
    lay.e_cim.reserve(entries.size());
    lay.e_k.reserve(entries.size());
    lay.e_l.reserve(entries.size());
    lay.e_w.reserve(entries.size());
    lay.e_qc.reserve(entries.size());
    lay.e_pc.reserve(entries.size());
    for (const auto& e : entries) {
        lay.e_class.push_back(e.cls);
        lay.e_cre.push_back(e.cre);
        lay.e_cim.push_back(e.cim);
        lay.e_k.push_back(e.k);
        lay.e_l.push_back(e.l);
        lay.e_w.push_back(p[e.k] * q[e.l]);
        lay.e_qc.push_back(q[e.l]);
        lay.e_pc.push_back(p[e.k]);
    }

    std::vector<std::pair<int, int>> xs, ys;
    for (int c = 0; c < lay.n_cre; ++c) xs.emplace_back(lay.re_lo[c], lay.re_hi[c]);
    for (int c = 0; c < lay.n_cim; ++c) ys.emplace_back(im.lo[c], im.hi[c]);
    lay.x_spans = merge_spans(std::move(xs));
    lay.y_spans = merge_spans(std::move(ys));
    return lay;
}

} // namespace detail

MixtureSums accumulate_mixture(const XorClassIndex& x, const double* p, const double* q,
                               double sigma2, const QuadratureGrid& grid, bool want_gradient) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
    const detail::MixtureLayout lay = detail::build_layout(x, p, q, sigma2, grid, want_gradient);
#if defined(MACSHAPE_HAVE_AVX2)
    if (active_backend() == Backend::avx2) return detail::accumulate_avx2(lay);
#endif
    return detail::accumulate_scalar(lay);
}

} // namespace macshape
