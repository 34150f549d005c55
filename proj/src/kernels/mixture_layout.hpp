#pragma once

// Internal to the kernel backends; not part of the installed interface.
//
// The superposed constellation lives on a lattice, so the 2-D Gaussian around
// each superposition point factors into per-axis tables indexed by the few
// distinct re/im centres. Each backend walks the grid row by row: pass 1
// accumulates the per-class mixture rows from (entry weight) x (im factor) x
// (re table row), then the per-class log-ratio rows are formed, and pass 2
// projects each entry's re table row back onto its class log-ratio row for
// the gradient sums. Axis tables are hard-zeroed beyond extent_in_sigma
// deviations from their centre, which prunes far-field nodes exactly and
// keeps the work bounded at high SNR; the mass dropped that way is below
// exp(-extent^2/2) of the total.

#include "macshape/kernels.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace macshape::detail {

// Floor applied inside every log2 of a density; keeps log ratios finite and
// makes empty regions (f = F = 0) contribute exactly zero.
inline constexpr double kDensityFloor = 1e-300;

struct MixtureLayout {
    int num_classes = 0;
    int num_symbols = 0;
    int num_entries = 0;
    int n_re = 0; // padded row length, multiple of 4
    int n_im = 0;
    int n_cre = 0, n_cim = 0;
    bool want_gradient = false;

    // Per-axis Gaussian factors (each carrying one 1/sqrt(2 pi sigma2)), zero
    // outside the centre's active window. *_r2 rows are scaled by the squared
    // axis distance for the noise-variance sensitivity sum.
    std::vector<double> tab_re, tab_re_r2; // [n_cre][n_re]
    std::vector<double> tab_im, tab_im_r2; // [n_cim][n_im]
    std::vector<int> re_lo, re_hi;         // active column window per re centre, 4-aligned

    // XOR-class entries sorted by (class, re centre).
    std::vector<std::int32_t> e_class, e_cre, e_cim, e_k, e_l;
    std::vector<double> e_w;  // p[k] * q[l]
    std::vector<double> e_qc; // q[l]
    std::vector<double> e_pc; // p[k]

    std::vector<std::pair<int, int>> x_spans; // merged active column spans, 4-aligned
    std::vector<std::pair<int, int>> y_spans; // merged active row spans
};

MixtureLayout build_layout(const XorClassIndex& x, const double* p, const double* q,
                           double sigma2, const QuadratureGrid& grid, bool want_gradient);

MixtureSums accumulate_scalar(const MixtureLayout& lay);
#if defined(MACSHAPE_HAVE_AVX2)
MixtureSums accumulate_avx2(const MixtureLayout& lay);
// Exposed for the accuracy test of the vectorised log2; inputs must be
// positive normal doubles.
void avx2_log2_batch(const double* in, double* out, int n);
#endif

// Shared traversal so both backends visit identical nodes in identical order;
// Ops supplies the row primitives. Spans and windows are multiples of 4 wide,
// so vector backends never need tail handling.
template <class Ops>
MixtureSums run_mixture_loop(const MixtureLayout& lay) {
    const int C = lay.num_classes, E = lay.num_entries;
    const auto row = static_cast<std::size_t>(lay.n_re);
    std::vector<double> f(static_cast<std::size_t>(C) * row, 0.0);    // per-class density rows
    std::vector<double> lcls(static_cast<std::size_t>(C) * row, 0.0); // per-class log2(f_i/F) rows
    std::vector<double> fsum(row, 0.0), lf(row, 0.0);

    MixtureSums out;
    if (lay.want_gradient) {
        out.grad_p.assign(static_cast<std::size_t>(lay.num_symbols), 0.0);
        out.grad_q.assign(static_cast<std::size_t>(lay.num_symbols), 0.0);
    }

    for (const auto& [ry0, ry1] : lay.y_spans) {
        for (int iy = ry0; iy < ry1; ++iy) {
            for (int c = 0; c < C; ++c) {
                double* fc = f.data() + static_cast<std::size_t>(c) * row;
                for (const auto& [a, b] : lay.x_spans) std::fill(fc + a, fc + b, 0.0);
            }

            // Pass 1: accumulate class density rows at this y.
            for (int e = 0; e < E; ++e) {
                const double imv =
                    lay.tab_im[static_cast<std::size_t>(lay.e_cim[e]) * lay.n_im + iy];
                if (imv == 0.0) continue;
                const double a = lay.e_w[e] * imv;
                if (a == 0.0) continue;
                const int cre = lay.e_cre[e];
                const int lo = lay.re_lo[cre], hi = lay.re_hi[cre];
                Ops::axpy(a, lay.tab_re.data() + static_cast<std::size_t>(cre) * row + lo,
                          f.data() + static_cast<std::size_t>(lay.e_class[e]) * row + lo, hi - lo);
            }

            // Mixture total, per-class log ratios, and the integrand sum.
            for (const auto& [a, b] : lay.x_spans) {
                const int n = b - a;
                std::fill(fsum.begin() + a, fsum.begin() + b, 0.0);
                for (int c = 0; c < C; ++c)
                    Ops::add(f.data() + static_cast<std::size_t>(c) * row + a, fsum.data() + a, n);
                Ops::log2_floor(fsum.data() + a, lf.data() + a, n);
                for (int c = 0; c < C; ++c) {
                    const std::size_t off = static_cast<std::size_t>(c) * row + a;
                    out.integrand +=
                        Ops::log_ratio_dot(f.data() + off, lf.data() + a, lcls.data() + off, n);
                }
            }

            // Pass 2: per-entry projections for the gradient sums.
            if (lay.want_gradient) {
                for (int e = 0; e < E; ++e) {
                    const std::size_t imo =
                        static_cast<std::size_t>(lay.e_cim[e]) * lay.n_im + iy;
                    const double imv = lay.tab_im[imo];
                    if (imv == 0.0) continue;
                    const int cre = lay.e_cre[e];
                    const int lo = lay.re_lo[cre], hi = lay.re_hi[cre];
                    const std::size_t reo = static_cast<std::size_t>(cre) * row + lo;
                    double d = 0.0, d2 = 0.0;
                    Ops::dot2(lay.tab_re.data() + reo, lay.tab_re_r2.data() + reo,
                              lcls.data() + static_cast<std::size_t>(lay.e_class[e]) * row + lo,
                              hi - lo, d, d2);
                    const double s = imv * d;
                    out.grad_p[lay.e_k[e]] += lay.e_qc[e] * s;
                    out.grad_q[lay.e_l[e]] += lay.e_pc[e] * s;
                    out.r2x_weighted += lay.e_w[e] * imv * d2;
                    out.r2y_weighted += lay.e_w[e] * lay.tab_im_r2[imo] * d;
                }
            }
        }
    }
    return out;
}

} // namespace macshape::detail
