#pragma once

#include "macshape/constellation.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace macshape {

// Y = X_A + X_B + Z with Z circularly-symmetric complex Gaussian, variance
// sigma2 per real dimension. Reported SNR convention: E[|x|^2]/(d*sigma2),
// d = signal_dimensions of the per-user constellation, so the PAM pair
// reports P/sigma^2 and QAM reports P/(2 sigma^2).
struct ChannelSpec {
    double sigma2 = 1.0;
};

inline double snr_db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double snr_linear_to_db(double s) { return 10.0 * std::log10(s); }

// Complex Gaussian density (1/(2 pi sigma2)) exp(-|y-x_ab|^2 / (2 sigma2)).
double likelihood(cplx y, cplx x_ab, const ChannelSpec& ch);

// Uniform tensor-product grid over the superposed constellation, extended by
// extent_in_sigma noise deviations on every side. Cell weight is the cell
// area; node (ix, iy) sits at (xs[ix], ys[iy]).
struct QuadratureGrid {
    std::vector<double> xs, ys;
    double spacing = 0;            // absolute step h
    double cell_weight = 0;        // h^2
    double spacing_in_sigma = 0;
    double extent_in_sigma = 0;

    std::size_t num_nodes() const { return xs.size() * ys.size(); }
};

QuadratureGrid build_grid(const XorClassIndex& x, const ChannelSpec& ch,
                          double spacing_in_sigma = 0.125, double extent_in_sigma = 10.0);

} // namespace macshape
