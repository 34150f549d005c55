#include "mixture_layout.hpp"

#include <algorithm>
#include <cmath>

namespace macshape::detail {

namespace {

struct ScalarOps {
    static void axpy(double a, const double* x, double* y, int n) {
        for (int i = 0; i < n; ++i) y[i] += a * x[i];
    }

    static void add(const double* x, double* y, int n) {
        for (int i = 0; i < n; ++i) y[i] += x[i];
    }

    static void log2_floor(const double* x, double* y, int n) {
        for (int i = 0; i < n; ++i) y[i] = std::log2(std::max(x[i], kDensityFloor));
    }

    // lout = log2(max(fc, floor)) - lf; returns sum fc * lout. Zero-density
    // nodes contribute exactly zero because fc multiplies the finite ratio.
    static double log_ratio_dot(const double* fc, const double* lf, double* lout, int n) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double l = std::log2(std::max(fc[i], kDensityFloor)) - lf[i];
            lout[i] = l;
            acc += fc[i] * l;
        }
        return acc;
    }

    static void dot2(const double* x1, const double* x2, const double* w, int n, double& d1,
                     double& d2) {
        double a = 0.0, b = 0.0;
        for (int i = 0; i < n; ++i) {
            a += x1[i] * w[i];
            b += x2[i] * w[i];
        }
        d1 = a;
        d2 = b;
    }
};

} // namespace

MixtureSums accumulate_scalar(const MixtureLayout& lay) { return run_mixture_loop<ScalarOps>(lay); }

} // namespace macshape::detail
