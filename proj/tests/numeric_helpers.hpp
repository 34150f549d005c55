#pragma once

// Small numeric utilities shared by the unit tests and the acceptance harness.

#include <cmath>
#include <cstddef>
#include <vector>

namespace testutil {

// Cyclic Jacobi eigenvalues of a symmetric row-major n x n matrix; plenty for
// the small tangent-space matrices used here.
inline std::vector<double> sym_eigenvalues(std::vector<double> a, int n) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = a[i * n + p], aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a[p * n + i], aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[i] = a[i * n + i];
    return ev;
}

// Restriction of a row-major M x M Hessian to the simplex tangent space
// spanned by e_r - e_{M-1}, r < M-1.
inline std::vector<double> tangent_restrict(const std::vector<double>& h, int M) {
    const int n = M - 1;
    std::vector<double> b(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
            b[r * n + s] = h[r * M + s] - h[r * M + (M - 1)] - h[(M - 1) * M + s] +
                           h[(M - 1) * M + (M - 1)];
    return b;
}

inline std::vector<double> axpyv(const std::vector<double>& p, double t,
                                 const std::vector<double>& d) {
    std::vector<double> out = p;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t * d[i];
    return out;
}

} // namespace testutil
