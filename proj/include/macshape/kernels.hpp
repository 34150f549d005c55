#pragma once

#include "macshape/channel.hpp"
#include "macshape/constellation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace macshape {

// Compute backends for the hot quadrature loops. The scalar backend is the
// portable reference; the avx2 backend must agree with it to floating-point
// accumulation-order tolerance (covered by the equivalence tests).
enum class Backend { scalar, avx2 };

bool backend_supported(Backend b);
// Backend used by accumulate_mixture: the forced one if set, otherwise the
// fastest supported backend on this host.
Backend active_backend();
// Pin the backend (nullopt returns to automatic selection). Throws
// std::invalid_argument if the requested backend is not supported here.
void force_backend(std::optional<Backend> b);
std::string backend_name(Backend b);

// Raw node sums over the quadrature grid; the caller multiplies by the grid
// cell weight. With f_i(y) = sum_{(k,l) in class i} p_k q_l g(y - x_kl),
// F = sum_i f_i, L_i = log2(f_i / F) (densities floored at 1e-300 inside the
// logs), and the squared axis distances rx2 = (re(y - x_kl))^2,
// ry2 = (im(y - x_kl))^2:
//   integrand    = sum_y sum_i f_i(y) L_i(y)
//   grad_p[k]    = sum_y sum_{l} q_l g(y - x_kl) L_{class(k,l)}(y)
//   grad_q[l]    = sum_y sum_{k} p_k g(y - x_kl) L_{class(k,l)}(y)
//   r2x_weighted = sum_y sum_{k,l} p_k q_l g(y - x_kl) rx2 L_{class(k,l)}(y)
//   r2y_weighted = the same with ry2
// The per-axis split feeds the per-axis noise-variance sensitivities (their
// sum is the isotropic one). Gradient fields are filled only when
// want_gradient is set.
struct MixtureSums {
    double integrand = 0.0;
    double r2x_weighted = 0.0;
    double r2y_weighted = 0.0;
    std::vector<double> grad_p, grad_q;
};

MixtureSums accumulate_mixture(const XorClassIndex& x, const double* p, const double* q,
                               double sigma2, const QuadratureGrid& grid, bool want_gradient);

} // namespace macshape
