#include "macshape/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace macshape {

double likelihood(cplx y, cplx x_ab, const ChannelSpec& ch) {
    const double r2 = std::norm(y - x_ab);
    return std::exp(-r2 / (2.0 * ch.sigma2)) / (2.0 * std::numbers::pi * ch.sigma2);
}

namespace {

std::vector<double> axis_nodes(double lo, double hi, double h) {
    // Smallest uniform grid with step h covering [lo, hi].
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1;
    std::vector<double> nodes(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = lo + h * static_cast<double>(i);
    return nodes;
}

} // namespace

QuadratureGrid build_grid(const XorClassIndex& x, const ChannelSpec& ch,
                          double spacing_in_sigma, double extent_in_sigma) {
    if (!(spacing_in_sigma > 0.0) || spacing_in_sigma > 0.25)
        throw std::invalid_argument("grid spacing must lie in (0, 1/4] sigma");
    if (extent_in_sigma < 8.0)
        throw std::invalid_argument("grid extent must be at least 8 sigma");
    if (!(ch.sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");

    double re_lo = 0, re_hi = 0, im_lo = 0, im_hi = 0;
    bool first = true;
    for (const auto& cls : x.classes) {
        for (const auto& e : cls) {
            const double re = e.x_ab.real(), im = e.x_ab.imag();
            if (first) {
                re_lo = re_hi = re;
                im_lo = im_hi = im;
                first = false;
            } else {
                re_lo = std::min(re_lo, re);
                re_hi = std::max(re_hi, re);
                im_lo = std::min(im_lo, im);
                im_hi = std::max(im_hi, im);
            }
        }
    }
    if (first) throw std::invalid_argument("empty class index");

    const double sigma = std::sqrt(ch.sigma2);
    const double pad = extent_in_sigma * sigma;
    const double h = spacing_in_sigma * sigma;

    QuadratureGrid g;
    g.spacing = h;
    g.cell_weight = h * h;
    g.spacing_in_sigma = spacing_in_sigma;
    g.extent_in_sigma = extent_in_sigma;
    g.xs = axis_nodes(re_lo - pad, re_hi + pad, h);
    g.ys = axis_nodes(im_lo - pad, im_hi + pad, h);
    return g;
}

} // namespace macshape
