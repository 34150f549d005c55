#include "macshape/info.hpp"
#include "macshape/kernels.hpp"
#include "macshape/rng.hpp"

#include "kernels/mixture_layout.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace macshape;

namespace {

struct ForcedBackend {
    explicit ForcedBackend(Backend b) { force_backend(b); }
    ~ForcedBackend() { force_backend(std::nullopt); }
};

MixtureSums run_with(Backend b, const XorClassIndex& x, const std::vector<double>& p,
                     const std::vector<double>& q, double sigma2, const QuadratureGrid& g,
                     bool want_gradient) {
    ForcedBackend guard(b);
    return accumulate_mixture(x, p.data(), q.data(), sigma2, g, want_gradient);
}

void check_close(double a, double b, double rel) {
    CHECK(std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)}));
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("backend selection") {
    CHECK(backend_supported(Backend::scalar));
    force_backend(Backend::scalar);
    CHECK(active_backend() == Backend::scalar);
    force_backend(std::nullopt);
    if (backend_supported(Backend::avx2)) {
        force_backend(Backend::avx2);
        CHECK(active_backend() == Backend::avx2);
        force_backend(std::nullopt);
        CHECK(active_backend() == Backend::avx2); // fastest wins when supported
    } else {
        CHECK_THROWS_AS(force_backend(Backend::avx2), std::invalid_argument);
        CHECK(active_backend() == Backend::scalar);
    }
    CHECK(backend_name(Backend::scalar) == "scalar");
    CHECK(backend_name(Backend::avx2) == "avx2");
}

TEST_CASE("kernel sums match a direct evaluation") {
    // Re-derive the integrand from plain likelihood() calls on a small case.
    const XorClassIndex x = build_xor_classes(make_pam(1));
    const std::vector<double> p{0.3, 0.7}, q{0.6, 0.4};
    const ChannelSpec ch{0.4};
    const QuadratureGrid g = build_grid(x, ch, 0.25, 8.0);

    double direct = 0.0;
    for (double yx : g.xs) {
        for (double yy : g.ys) {
            const cplx y(yx, yy);
            double f[2] = {0.0, 0.0};
            for (int i = 0; i < x.num_classes(); ++i)
                for (const ClassEntry& e : x.classes[i])
                    f[i] += p[e.k] * q[e.l] * likelihood(y, e.x_ab, ch);
            const double F = f[0] + f[1];
            for (double fi : f)
                if (fi > 0.0 && F > 0.0) direct += fi * std::log2(fi / F);
        }
    }

    const MixtureSums s =
        run_with(Backend::scalar, x, p, q, ch.sigma2, g, false);
    // the kernel's hard truncation beyond the active window drops < e^-50 mass
    CHECK(std::abs(s.integrand - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
}

TEST_CASE("scalar and avx2 backends agree") {
    if (!backend_supported(Backend::avx2)) return;

    SplitMix64 rng(42);
    for (const char* id : {"pam4", "pam16", "qam16-gray"}) {
        const Constellation c = make_constellation(id);
        const XorClassIndex x = build_xor_classes(c);
        const std::vector<double> p = dirichlet_flat(rng, c.size());
        const std::vector<double> q = dirichlet_flat(rng, c.size());
        const double sigma2 = sigma2_for_snr_db(c, p, q, 8.0);
        const QuadratureGrid g = build_grid(x, ChannelSpec{sigma2});

        const MixtureSums a = run_with(Backend::scalar, x, p, q, sigma2, g, true);
        const MixtureSums b = run_with(Backend::avx2, x, p, q, sigma2, g, true);

        check_close(a.integrand, b.integrand, 1e-10);
        check_close(a.r2x_weighted, b.r2x_weighted, 1e-10);
        check_close(a.r2y_weighted, b.r2y_weighted, 1e-10);
        REQUIRE(a.grad_p.size() == b.grad_p.size());
        for (std::size_t i = 0; i < a.grad_p.size(); ++i) {
            check_close(a.grad_p[i], b.grad_p[i], 1e-9);
            check_close(a.grad_q[i], b.grad_q[i], 1e-9);
        }
    }
}

#if defined(MACSHAPE_HAVE_AVX2)
TEST_CASE("vector log2 accuracy") {
    if (!backend_supported(Backend::avx2)) return;

    std::vector<double> in{1.0, 2.0, 0.5, 1.5, std::nextafter(1.0, 2.0), M_SQRT2, 1e-300,
                           1e300};
    SplitMix64 rng(7);
    for (int i = 0; i < 4096; ++i) {
        const double mag = -300.0 + 600.0 * rng.uniform();
        in.push_back(std::pow(10.0, mag) * (0.5 + rng.uniform()));
    }
    std::vector<double> out(in.size());
    detail::avx2_log2_batch(in.data(), out.data(), static_cast<int>(in.size()));
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double want = std::log2(in[i]);
        CHECK(std::abs(out[i] - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
}
#endif

TEST_CASE("accumulate_mixture preconditions") {
    const XorClassIndex x = build_xor_classes(make_pam(1));
    const std::vector<double> p{0.5, 0.5};
    const QuadratureGrid g = build_grid(x, ChannelSpec{1.0});
    CHECK_THROWS_AS(accumulate_mixture(x, p.data(), p.data(), 0.0, g, false),
                    std::invalid_argument);
    CHECK_THROWS_AS(accumulate_mixture(x, p.data(), p.data(), -2.0, g, false),
                    std::invalid_argument);
}

} // TEST_SUITE
