#include "macshape/errors.hpp"
#include "macshape/info.hpp"
#include "macshape/json_io.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace macshape;

namespace {

double entropy_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

// Copy of an XOR-class index with every superposed point scaled by c; used by
// the joint scaling-invariance check.
XorClassIndex scaled_classes(const XorClassIndex& x, double c) {
    XorClassIndex y = x;
    for (auto& cls : y.classes)
        for (auto& e : cls) e.x_ab *= c;
    return y;
}

} // namespace

TEST_SUITE("info") {

TEST_CASE("distribution constructors") {
    const Constellation c = make_pam(2);
    const InputDistribution u = uniform_distribution(c);
    CHECK(u.constellation_id == "pam4");
    REQUIRE(u.probs.size() == 4);
    for (double v : u.probs) CHECK(v == doctest::Approx(0.25));

    const InputDistribution d = point_mass(c, 2);
    CHECK(d.probs == std::vector<double>{0.0, 0.0, 1.0, 0.0});
    CHECK_THROWS_AS(point_mass(c, 4), std::invalid_argument);

    const InputDistribution m0 = mb_distribution(c, 0.0);
    for (double v : m0.probs) CHECK(v == doctest::Approx(0.25));
    const InputDistribution ml = mb_distribution(c, 50.0);
    // lambda -> inf concentrates on the minimum-energy points +-1
    CHECK(ml.probs[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(ml.probs[2] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(ml.probs[0] + ml.probs[3] < 1e-9);
}

TEST_CASE("average energy") {
    CHECK(avg_energy(make_pam(2), uniform_distribution(make_pam(2)).probs) ==
          doctest::Approx(5.0));
    CHECK(avg_energy(make_pam(4), uniform_distribution(make_pam(4)).probs) ==
          doctest::Approx(85.0));
    CHECK(avg_energy(make_qam16_gray(), uniform_distribution(make_qam16_gray()).probs) ==
          doctest::Approx(10.0));
}

TEST_CASE("renormalize repairs drift within tolerance") {
    std::vector<double> p{0.25, 0.25, 0.25, 0.2504};
    renormalize_probs(p, 1e-3);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));

    std::vector<double> bad{0.3, 0.3, 0.3, 0.3};
    CHECK_THROWS_AS(renormalize_probs(bad, 1e-3), std::invalid_argument);
    std::vector<double> neg{0.5, 0.6, -0.1, 0.0};
    CHECK_THROWS_AS(renormalize_probs(neg, 1e-3), std::invalid_argument);
    std::vector<double> tiny{0.5, 0.5, -1e-15, 0.0};
    renormalize_probs(tiny, 1e-3);
    CHECK(tiny[2] == 0.0);
}

TEST_CASE("class priors and entropy") {
    const XorClassIndex x = build_xor_classes(make_pam(2));
    const std::vector<double> u(4, 0.25);
    const std::vector<double> pri = class_prior(u, u, x);
    REQUIRE(pri.size() == 4);
    for (double v : pri) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(entropy_wc(pri) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(entropy_wc({1.0, 0.0, 0.0, 0.0}) == 0.0);

    // priors always sum to one
    const std::vector<double> p{0.7, 0.1, 0.15, 0.05}, q{0.2, 0.3, 0.4, 0.1};
    const std::vector<double> pq = class_prior(p, q, x);
    CHECK(std::accumulate(pq.begin(), pq.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("bundled shaped vector reproduces the published entropies") {
    const TableFixture t = load_table_fixture(std::string(MACSHAPE_DATA_DIR) +
                                              "/table1_pam16.json");
    REQUIRE(t.columns.size() == 4);
    const std::vector<double>& p = t.columns[0].probs;
    REQUIRE(p.size() == 16);
    CHECK(entropy_of(p) == doctest::Approx(2.5455).epsilon(2e-3));
    const XorClassIndex x = build_xor_classes(make_pam(4));
    CHECK(entropy_wc(class_prior(p, p, x)) == doctest::Approx(3.7959).epsilon(2e-3));
}

TEST_CASE("mutual information limits") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> u(4, 0.25);

    CHECK(evaluate_at_snr(c, x, u, u, -40.0).mi_bits < 0.01);
    const MIResult high = evaluate_at_snr(c, x, u, u, 60.0);
    CHECK(high.mi_bits == doctest::Approx(high.h_wc_bits).epsilon(1e-6));
    CHECK(high.h_wc_bits == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mi lies in [0, H] and grows with snr") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> p{0.4, 0.1, 0.3, 0.2};
    double prev = -1.0;
    for (double db : {-5.0, 0.0, 5.0, 10.0, 15.0}) {
        const MIResult r = evaluate_at_snr(c, x, p, p, db);
        CHECK(r.mi_bits >= -1e-9);
        CHECK(r.mi_bits <= r.h_wc_bits + 1e-9);
        CHECK(r.mi_bits > prev);
        prev = r.mi_bits;
    }
}

TEST_CASE("user swap symmetry") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> p{0.4, 0.1, 0.3, 0.2};
    const std::vector<double> q{0.25, 0.25, 0.3, 0.2};
    const double a = evaluate_at_snr(c, x, p, q, 8.0).mi_bits;
    const double b = evaluate_at_snr(c, x, q, p, 8.0).mi_bits;
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("joint scaling of constellation and noise leaves mi unchanged") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> p{0.4, 0.1, 0.3, 0.2};
    const double sigma2 = sigma2_for_snr_db(c, p, p, 8.0);

    const QuadratureGrid g1 = build_grid(x, ChannelSpec{sigma2});
    const double i1 = mutual_information(p, p, x, ChannelSpec{sigma2}, g1).mi_bits;

    const XorClassIndex xs = scaled_classes(x, 2.0);
    const QuadratureGrid g2 = build_grid(xs, ChannelSpec{4.0 * sigma2});
    const double i2 = mutual_information(p, p, xs, ChannelSpec{4.0 * sigma2}, g2).mi_bits;

    CHECK(i1 == doctest::Approx(i2).epsilon(1e-6));
}

TEST_CASE("point mass carries no information") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> d{0.0, 1.0, 0.0, 0.0};
    const MIResult r = evaluate_at_snr(c, x, d, d, 10.0);
    CHECK(r.h_wc_bits == 0.0);
    CHECK(std::abs(r.mi_bits) <= 1e-9);
}

TEST_CASE("published shaped vector hits its rate at its threshold") {
    const TableFixture t = load_table_fixture(std::string(MACSHAPE_DATA_DIR) +
                                              "/table1_pam16.json");
    const Constellation c = make_pam(4);
    const XorClassIndex x = build_xor_classes(c);
    const TableColumn& col = t.columns[0];
    REQUIRE(col.snr_opt_db.has_value());
    const MIResult r = evaluate_at_snr(c, x, col.probs, col.probs, *col.snr_opt_db);
    CHECK(r.mi_bits == doctest::Approx(col.rate).epsilon(0.03 / col.rate));
}

TEST_CASE("monte carlo agrees with quadrature") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> u(4, 0.25);
    const double snr_db = 6.0;
    const double quad = evaluate_at_snr(c, x, u, u, snr_db).mi_bits;

    const ChannelSpec ch{sigma2_for_snr_db(c, u, u, snr_db)};
    const MIResult mc = mutual_information_mc(u, u, x, ch, 200000, 7);
    REQUIRE(mc.mc_stderr.has_value());
    CHECK(*mc.mc_stderr > 0.0);
    CHECK(std::abs(mc.mi_bits - quad) <= 3.0 * *mc.mc_stderr);
}

TEST_CASE("monte carlo agrees with quadrature for unequal user energies") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> p{0.4, 0.1, 0.3, 0.2};  // E = 5.8
    const std::vector<double> q{0.05, 0.45, 0.3, 0.2}; // E = 3.0
    const double snr_db = 6.0;
    const double quad = evaluate_at_snr(c, x, p, q, snr_db).mi_bits;

    const PairGeometry geo = pair_geometry(c, x, p, q, snr_db);
    const MIResult mc = mutual_information_mc(p, q, geo.index, geo.ch, 200000, 7);
    REQUIRE(mc.mc_stderr.has_value());
    CHECK(std::abs(mc.mi_bits - quad) <= 3.0 * *mc.mc_stderr);
}

TEST_CASE("bundled asymmetric pair reproduces its published rate") {
    const AsymPairFixture f =
        load_asym_pair_fixture(std::string(MACSHAPE_DATA_DIR) + "/asym_pair_pam16.json");
    const Constellation c = make_constellation(f.constellation);
    const XorClassIndex x = build_xor_classes(c);
    const MIResult r = evaluate_at_snr(c, x, f.p, f.q, f.snr_db);
    CHECK(r.mi_bits == doctest::Approx(f.rate).epsilon(0.03 / f.rate));
    // the two shaped users carry different energies, so both get scaled
    CHECK(r.sigma2 == 1.0);
    CHECK(r.scale_a != 1.0);
    CHECK(r.scale_b != 1.0);
}

TEST_CASE("monte carlo determinism and seed sensitivity") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> u(4, 0.25);
    const ChannelSpec ch{sigma2_for_snr_db(c, u, u, 6.0)};

    const MIResult a = mutual_information_mc(u, u, x, ch, 50000, 11);
    const MIResult b = mutual_information_mc(u, u, x, ch, 50000, 11);
    CHECK(a.mi_bits == b.mi_bits);
    CHECK(*a.mc_stderr == *b.mc_stderr);

    const MIResult other = mutual_information_mc(u, u, x, ch, 50000, 12);
    CHECK(a.mi_bits != other.mi_bits);

    CHECK_THROWS_AS(mutual_information_mc(u, u, x, ch, 999, 1), std::invalid_argument);
}

TEST_CASE("monte carlo error shrinks with sample count") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> u(4, 0.25);
    const ChannelSpec ch{sigma2_for_snr_db(c, u, u, 6.0)};
    const double e1 = *mutual_information_mc(u, u, x, ch, 40000, 3).mc_stderr;
    const double e2 = *mutual_information_mc(u, u, x, ch, 160000, 3).mc_stderr;
    CHECK(e1 / e2 > 1.6);
    CHECK(e1 / e2 < 2.6);
}

TEST_CASE("cutset family") {
    CHECK(cutset_bound(1.0) == doctest::Approx(0.5));
    const Constellation pam = make_pam(4);
    CHECK(cutset_rate(pam, cutset_threshold_db(pam, 3.0067)) ==
          doctest::Approx(3.0067).epsilon(1e-9));
    CHECK(cutset_threshold_db(pam, 3.0067) == doctest::Approx(18.0349).epsilon(1e-3));
    const Constellation qam = make_qam16_gray();
    CHECK(cutset_threshold_db(qam, 1.5412) == doctest::Approx(2.8112).epsilon(1e-3));
}

TEST_CASE("power-tight sigma2 convention") {
    const Constellation c = make_pam(4);
    const std::vector<double> u(16, 1.0 / 16.0);
    // uniform 16-PAM: E = 85, d = 1
    CHECK(sigma2_for_snr_db(c, u, u, 14.0) ==
          doctest::Approx(85.0 / std::pow(10.0, 1.4)).epsilon(1e-12));
    // busier user sets the noise scale
    std::vector<double> edge(16, 0.0);
    edge[0] = 0.5;
    edge[15] = 0.5; // E = 225
    CHECK(sigma2_for_snr_db(c, u, edge, 10.0) ==
          doctest::Approx(225.0 / 10.0).epsilon(1e-12));

    const Constellation qam = make_qam16_gray();
    const std::vector<double> uq(16, 1.0 / 16.0);
    CHECK(sigma2_for_snr_db(qam, uq, uq, 10.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pair geometry applies per-user power scaling") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> u(4, 0.25);            // E = 5
    const std::vector<double> heavy{0.5, 0.0, 0.0, 0.5}; // E = 9

    // equal energies: unscaled alphabet, budget absorbed into the noise
    const PairGeometry eq = pair_geometry(c, x, u, u, 10.0);
    CHECK(eq.scale_a == 1.0);
    CHECK(eq.scale_b == 1.0);
    CHECK(eq.ch.sigma2 == doctest::Approx(0.5).epsilon(1e-12));

    // unequal energies: each user scaled to the budget against unit noise
    const PairGeometry g = pair_geometry(c, x, u, heavy, 10.0);
    CHECK(g.ch.sigma2 == 1.0);
    CHECK(g.scale_a == doctest::Approx(std::sqrt(10.0 / 5.0)).epsilon(1e-12));
    CHECK(g.scale_b == doctest::Approx(std::sqrt(10.0 / 9.0)).epsilon(1e-12));
    for (std::size_t i = 0; i < x.classes.size(); ++i) {
        REQUIRE(g.index.classes[i].size() == x.classes[i].size());
        for (std::size_t e = 0; e < x.classes[i].size(); ++e) {
            // user A stays on the real axis, user B on the imaginary one
            CHECK(g.index.classes[i][e].x_ab.real() ==
                  doctest::Approx(g.scale_a * x.classes[i][e].x_ab.real()).epsilon(1e-12));
            CHECK(g.index.classes[i][e].x_ab.imag() ==
                  doctest::Approx(g.scale_b * x.classes[i][e].x_ab.imag()).epsilon(1e-12));
        }
    }

    CHECK_THROWS_AS(pair_geometry(c, x, std::vector<double>(4, 0.0), u, 10.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(macshape::scaled_classes(c, x, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("per-user scaling treats the users alike") {
    // Swapping the two users mirrors the axes and swaps the scales; the
    // XOR-message rate must not care which user is which.
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> p{0.4, 0.1, 0.3, 0.2};
    const std::vector<double> q{0.1, 0.2, 0.45, 0.25};
    const MIResult a = evaluate_at_snr(c, x, p, q, 7.0);
    const MIResult b = evaluate_at_snr(c, x, q, p, 7.0);
    CHECK(a.mi_bits == doctest::Approx(b.mi_bits).epsilon(1e-10));
    CHECK(a.scale_a == doctest::Approx(b.scale_b).epsilon(1e-12));
    CHECK(a.scale_b == doctest::Approx(b.scale_a).epsilon(1e-12));
}

TEST_CASE("fixed-distribution threshold brackets its target") {
    const Constellation c = make_pam(1);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> u(2, 0.5);
    const double thr = fixed_dist_threshold_db(c, x, u, u, 0.9);
    CHECK(evaluate_at_snr(c, x, u, u, thr).mi_bits >= 0.9 - 1e-6);
    CHECK(evaluate_at_snr(c, x, u, u, thr - 0.05).mi_bits < 0.9);

    CHECK_THROWS_AS(fixed_dist_threshold_db(c, x, u, u, 1.5), unreachable_rate_error);
}

TEST_CASE("maxwell-boltzmann fit") {
    const Constellation c = make_pam(2);
    const XorClassIndex x = build_xor_classes(c);
    const std::vector<double> u(4, 0.25);
    const double target = 1.5;

    const MBFit fit = mb_lambda_search(c, x, target);
    CHECK(fit.lambda > 0.0);
    // the family contains lambda ~ 0 (uniform), so its threshold can only be better
    const double uf = fixed_dist_threshold_db(c, x, u, u, target);
    CHECK(fit.threshold_snr_db <= uf + 0.02);
    // the reported threshold is attained by the reported lambda
    const InputDistribution mb = mb_distribution(c, fit.lambda);
    CHECK(std::abs(fixed_dist_threshold_db(c, x, mb.probs, mb.probs, target) -
                   fit.threshold_snr_db) <= 0.02);

    CHECK_THROWS_AS(mb_lambda_search(c, x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(mb_lambda_search(c, x, 2.0), std::invalid_argument);

    // lambda -> 0 recovers uniform, so the family's best rate can only be
    // better (small slack: the searched bracket starts at lambda = 1e-6)
    CHECK(mb_best_rate_at_snr(c, x, 10.0) >=
          evaluate_at_snr(c, x, u, u, 10.0).mi_bits - 1e-4);
}

TEST_CASE("maxwell-boltzmann fit reports unreachable rates") {
    // the shared 16-QAM grid loses entropy to class collisions, so rates close
    // to 4 bits stay out of reach at any snr in the bracket
    const Constellation c = make_qam16_gray();
    const XorClassIndex x = build_xor_classes(c);
    CHECK_THROWS_AS(mb_lambda_search(c, x, 3.9), unreachable_rate_error);
}

} // TEST_SUITE
