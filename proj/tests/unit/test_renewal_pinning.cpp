#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "levychaos/errors.hpp"
#include "levychaos/heavy_tail.hpp"
#include "levychaos/renewal_pinning.hpp"
#include "levychaos/rng.hpp"
#include "levychaos/stats.hpp"

using namespace levychaos;

namespace {

// {alpha, z, E_alpha(z), E'_alpha(z)} from tools/oracles/mittag_leffler.py
// (direct series in extended precision).
struct MlRef {
    double alpha, z, E, dE;
};
const MlRef kMlRefs[] = {
    {0.3, 1, 1.891122284656162e+17, 2.4318032377765868e+19},
    {0.3, -1, 0.21228832666929459, 0.17272871507956776},
    {0.3, -3, 0.080409616219221718, 0.025055032019069633},
    {0.5, 1, 45.999326089382855, 291.02228982497298},
    {0.5, -1, 0.28205917617568265, 0.22776992849777234},
    {0.5, -5, 0.063264196878197393, 0.012496638521967374},
    {0.5, -10, 0.03178056800933727, 0.0031680202991046772},
    {0.5, 2.5, 673569179.74589063, 10580399935.870965},
    {0.7, 1, 5.9455062599684556, 12.741969272911305},
    {0.7, -1, 0.32335206236978804, 0.28142651604359551},
    {0.7, -5, 0.057980025116328036, 0.012837924121515492},
    {0.7, -10, 0.027378839105300235, 0.0029021341513711714},
    {0.7, 4, 52821.480780628557, 198420.32671653006},
    {0.9, -10, 0.011814023106355813, 0.0014422868350309161},
    {0.9, 2, 11.33857143193026, 14.696112259412434},
    {0.5, 0.25, 1.7878438941968856, 4.8083386218871516},
    {0.7, -0.3, 0.67086218719591469, 0.82906058809585877},
};

// Inter-arrival draw by inverse tail on the exact table; N_max + 1 means "beyond".
std::size_t draw_gap(const RenewalKernel& k, double u) {
    // Kbar is decreasing: first n with Kbar[n] < u.
    auto it = std::lower_bound(k.Kbar.begin(), k.Kbar.end(), u, [](double a, double b) { return a >= b; });
    return static_cast<std::size_t>(it - k.Kbar.begin());
}

}  // namespace

TEST_CASE("renewal kernel invariants") {
    CHECK_THROWS_AS(make_kernel(1.0, 10), ParameterError);
    CHECK_THROWS_AS(make_kernel(0.5, 1), ParameterError);
    for (double alpha : {0.3, 0.5, 0.8}) {
        const auto k = make_kernel(alpha, 2000);
        CHECK(k.Kbar[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(k.u[0] == 1.0);
        CHECK(k.u[1] == doctest::Approx(k.K[1]).epsilon(1e-15));
        double resid = 0.0;
        for (std::size_t n = 1; n <= 2000; ++n) {
            double s = 0.0;
            for (std::size_t j = 1; j <= n; ++j) s += k.K[j] * k.u[n - j];
            resid = std::max(resid, std::abs(k.u[n] - s));
            REQUIRE(k.u[n] > 0.0);
            REQUIRE(k.u[n] <= 1.0);
            REQUIRE(k.K[n] > 0.0);
        }
        CHECK(resid < 1e-12);
        // Tail bookkeeping against 1 - cumulative mass.
        double cum = 0.0;
        for (std::size_t n = 1; n <= 2000; ++n) cum += k.K[n];
        CHECK(std::abs(k.Kbar[2000] - (1.0 - cum)) < 1e-12);
    }
}

TEST_CASE("renewal theorem constant") {
    for (double alpha : {0.3, 0.5, 0.8}) {
        const std::size_t N = 30'000;
        const auto k = make_kernel(alpha, N);
        const double lhs = k.u[N] * k.c0 * std::pow(static_cast<double>(N), 1.0 - alpha);
        const double rhs = alpha * std::sin(std::numbers::pi * alpha) / std::numbers::pi;
        MESSAGE("alpha = " << alpha << ": ratio " << lhs / rhs);
        CHECK(std::abs(lhs / rhs - 1.0) < 0.10);
    }
    CHECK(make_kernel(0.5, 10).renewal_constant() == doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
}

TEST_CASE("homogeneous partition function at h = 0 is a probability") {
    const auto k = make_kernel(0.6, 3000);
    const auto z = homogeneous_Z(k, 0.0, 3000);
    for (std::size_t n = 0; n <= 3000; ++n) REQUIRE(std::abs(z.Zfree[n] - 1.0) < 1e-10);
    for (std::size_t n = 0; n <= 3000; ++n) REQUIRE(z.Zc[n] == doctest::Approx(k.u[n]).epsilon(1e-12));
}

TEST_CASE("Mittag-Leffler functions") {
    for (double a : {0.2, 0.5, 0.9, 1.0}) CHECK(mittag_leffler(a, 0.0) == 1.0);
    for (int i = -50; i <= 50; ++i) {
        const double z = 0.1 * i;
        CHECK(std::abs(mittag_leffler(1.0, z) - std::exp(z)) <= 1e-12 * std::exp(z));
        CHECK(std::abs(ml_derivative(1.0, z) - std::exp(z)) <= 1e-12 * std::exp(z));
    }
    for (const auto& r : kMlRefs) {
        CAPTURE(r.alpha);
        CAPTURE(r.z);
        CHECK(mittag_leffler(r.alpha, r.z) == doctest::Approx(r.E).epsilon(1e-10));
        CHECK(ml_derivative(r.alpha, r.z) == doctest::Approx(r.dE).epsilon(1e-10));
    }
    // alpha = 1/2: E_{1/2,1}(x) = exp(x^2) erfc(-x), and E_{1/2,1/2}(x) = 1/sqrt(pi) + x E_{1/2,1}(x).
    for (double x : {-20.0, -7.0, -2.0, -0.4, 0.3, 1.5, 4.0}) {
        const double e1 = std::exp(x * x) * std::erfc(-x);
        CHECK(mittag_leffler_standard(0.5, 1.0, x) == doctest::Approx(e1).epsilon(1e-11));
        CHECK(mittag_leffler_standard(0.5, 0.5, x) ==
              doctest::Approx(1.0 / std::sqrt(std::numbers::pi) + x * e1).epsilon(1e-9));
    }
    // Derivative against a central difference, across the series/integral switch.
    for (double a : {0.35, 0.7}) {
        for (double z : {-8.0, -2.0, -0.5, 0.7}) {
            const double h = 1e-5;
            const double fd = (mittag_leffler(a, z + h) - mittag_leffler(a, z - h)) / (2 * h);
            CHECK(ml_derivative(a, z) == doctest::Approx(fd).epsilon(1e-7));
        }
    }
    CHECK_THROWS_AS(mittag_leffler(0.5, 1000.0), NumericalError);
}

TEST_CASE("continuum homogeneous limits") {
    for (double t : {0.01, 0.3, 1.0}) {
        const auto c = continuum_pinning(0.6, 0.0, t);
        CHECK(c.Z == 1.0);
        CHECK(c.Zc == doctest::Approx(std::pow(t, -0.4)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(continuum_pinning(0.6, 0.0, 0.0), ParameterError);
    double prev = 0.0;
    for (double h : {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0}) {
        const double z = continuum_pinning(0.5, h, 0.7).Z;
        CHECK(z > prev);
        prev = z;
    }

    const double alpha = 0.5, hh = 1.0;
    const std::size_t N = 20'000;
    const auto k = make_kernel(alpha, N);
    const double h = hh / (static_cast<double>(N) * k.u[N]);
    const auto z = homogeneous_Z(k, h, N);
    const auto lim = continuum_pinning(alpha, hh, 1.0);
    MESSAGE("Z_N / E = " << z.Z_free / lim.Z << ", Zc_N / (u Zc) = " << z.Zc[N] / k.u[N] / lim.Zc);
    // The bias decays like N^(alpha - 1) = N^(-1/2); at N = 2e4 it is about 3.2%.
    CHECK(std::abs(z.Z_free / lim.Z - 1.0) < 0.035);
    auto free_at = [&](std::size_t n) {
        const auto kn = make_kernel(alpha, n);
        return homogeneous_Z(kn, hh / (static_cast<double>(n) * kn.u[n]), n).Z_free;
    };
    const double z1 = free_at(10'000), z4 = free_at(40'000);
    CHECK(std::abs(z4 / lim.Z - 1.0) < std::abs(z1 / lim.Z - 1.0) * 0.55);
    CHECK((2.0 * z4 - z1) / lim.Z == doctest::Approx(1.0).epsilon(3e-3));
    CHECK(std::abs(z.Zc[N] / k.u[N] / lim.Zc - 1.0) < 0.05);

    // Two-point correlation at (0.3, 0.7).
    const std::size_t idx[] = {6000, 14000};
    const double t2[] = {0.3, 0.7};
    const double disc = discrete_pinning_correlation(k, h, N, idx);
    const double cont = pinning_correlation(alpha, hh, t2);
    MESSAGE("psi_N^(2) / psi^(2) = " << disc / cont);
    CHECK(std::abs(disc / cont - 1.0) < 0.05);
    const double tie[] = {0.3, 0.3};
    CHECK(pinning_correlation(alpha, hh, tie) == 0.0);
    const double one[] = {0.4};
    CHECK(pinning_correlation(0.6, 0.0, one) == doctest::Approx(std::pow(0.4, -0.4)));
}

TEST_CASE("tabulated kernels match direct evaluation") {
    for (double a : {0.3, 0.7}) {
        for (double hh : {-6.0, 0.0, 1.5}) {
            const PinningTable tab(a, hh);
            for (double t : {1e-6, 0.01, 0.2, 0.55, 0.999, 1.0}) {
                const auto d = continuum_pinning(a, hh, t);
                CHECK(tab.Z(t) == doctest::Approx(d.Z).epsilon(1e-11));
                CHECK(tab.Zc(t) == doctest::Approx(d.Zc).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("one-point correlation against renewal simulation") {
    const auto k = make_kernel(0.5, 200);
    const std::size_t N = 200, site = 37;
    const std::size_t idx[] = {site};
    const double psi = discrete_pinning_correlation(k, 0.0, N, idx);
    CHECK(psi == doctest::Approx(k.u[site] / k.u[N]).epsilon(1e-12));
    CounterRng rng(derive_key(3, 0, Purpose::oracle));
    std::vector<double> hit(1'000'000);
    for (auto& x : hit) {
        std::size_t pos = 0;
        while (pos < site) pos += draw_gap(k, rng.uniform());
        x = pos == site ? 1.0 / k.u[N] : 0.0;
    }
    const auto m = mean_estimate(hit);
    CHECK(std::abs(m.mean - psi) < 3.0 * m.standard_error);
}

TEST_CASE("disordered partition function") {
    const auto k = make_kernel(0.7, 512);
    const auto law = TailLaw::one_sided(1.5);
    const double V = solve_noise_scale(law, 1.0 / 256.0);
    auto p = PinningParams::from_continuum(k, 256, 0.5, 0.0, V);
    const auto omega = sample_disorder(law, 256, 1);
    CHECK(disordered_pinning_Z(k, p, omega) == 1.0);
    p.beta = 1.5;
    CHECK_THROWS_AS(disordered_pinning_Z(k, p, omega), ParameterError);

    // Multilinear in the disorder: the average over all sign patterns is exactly one.
    const std::size_t n = 12;
    PinningParams q{n, 0.3, 0.8, 0.0, 0.0};
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        for (std::size_t i = 0; i < n; ++i) w[i] = (mask >> i) & 1u ? 1.0 : -1.0;
        sum += disordered_pinning_Z(k, q, w);
    }
    CHECK(sum / static_cast<double>(1u << n) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chaos expansion reproduces the disordered DP at N = 12") {
    CounterRng rng(derive_key(42, 0, Purpose::config));
    for (int c = 0; c < 20; ++c) {
        const double alpha = 0.4 + 0.5 * rng.uniform();
        const double gamma = 1.2 + 0.6 * rng.uniform();
        const double hh = -1.0 + 3.0 * rng.uniform();
        const double beta = rng.uniform();
        const std::size_t N = 12;
        const auto k = make_kernel(alpha, N);
        const auto law = TailLaw::one_sided(gamma);
        const double V = solve_noise_scale(law, 1.0 / N);
        PinningParams p = PinningParams::from_continuum(k, N, hh, 0.0, V);
        p.beta = beta;
        const auto omega = sample_disorder(law, N, 100 + c);
        const double dp = disordered_pinning_Z(k, p, omega);
        const auto fam = product_kernel_family(discrete_pinning_product_kernel(k, p.h, N), N);
        const auto chaos = discrete_chaos(fam, pinning_lattice(N, V), omega, beta * k.u[N] * V);
        CHECK(chaos.total == doctest::Approx(dp).epsilon(1e-9));
    }
}

TEST_CASE("Gibbs sampler") {
    SUBCASE("plain renewal marginals") {
        const auto k = make_kernel(0.5, 64);
        PinningParams p;
        p.N = 64;
        const std::vector<double> zero(64, 0.0);
        const auto table = disordered_pinning_table(k, p, zero);
        std::vector<std::vector<double>> hits(4);
        const std::size_t probe[] = {1, 5, 20, 64};
        for (std::uint64_t r = 0; r < 100'000; ++r) {
            const auto s = sample_pinning_gibbs(k, p, table, zero, 6, r);
            for (std::size_t j = 0; j < 4; ++j) {
                hits[j].push_back(std::binary_search(s.begin(), s.end(), probe[j]) ? 1.0 : 0.0);
            }
        }
        for (std::size_t j = 0; j < 4; ++j) {
            const auto m = mean_estimate(hits[j]);
            CHECK(std::abs(m.mean - k.u[probe[j]]) < 3.0 * m.standard_error + 1e-12);
        }
    }
    SUBCASE("contact count matches the DP marginals") {
        const auto k = make_kernel(0.6, 128);
        PinningParams p;
        p.N = 128;
        p.h = 0.05;
        const std::vector<double> zero(128, 0.0);
        double expect = 0.0;
        for (std::size_t n = 1; n <= 128; ++n) {
            const std::size_t idx[] = {n};
            expect += discrete_pinning_correlation(k, p.h, 128, idx) * k.u[128];
        }
        std::vector<double> counts;
        for (std::uint64_t r = 0; r < 20'000; ++r) {
            counts.push_back(static_cast<double>(sample_pinning_gibbs(k, p, zero, 2, r).size()));
        }
        const auto m = mean_estimate(counts);
        CHECK(std::abs(m.mean - expect) < 4.0 * m.standard_error);
    }
}

TEST_CASE("subcriticality gate") {
    CHECK_NOTHROW(check_pinning_gate(0.7, 1.5));
    CHECK_THROWS_AS(check_pinning_gate(0.2, 1.5), GateError);
    CHECK_NOTHROW(check_pinning_gate(0.2, 1.5, true));
}

TEST_CASE("resummed continuum chaos") {
    const auto box = DomainBox::unit(1);
    SUBCASE("compensator resummation equals the per-order power-kernel series") {
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto cloud = sample_cloud(box, 1.5, 1.0, 0.0, 0.2, s);
            const ContinuumPinningProxy proxy(0.7, 0.0, 0.5, 1.5, 1.0, 0.0, 0.2);
            const auto orders = power_kernel_chaos(0.7, cloud, 0.5, 80);
            CHECK(std::abs(orders.per_order[80]) < 1e-12);
            CHECK(proxy.evaluate(cloud) == doctest::Approx(orders.total).epsilon(1e-9));
        }
    }
    SUBCASE("symmetric noise: resummation equals the all-orders chain DP") {
        const auto cloud = sample_cloud(box, 1.5, 0.5, 0.5, 0.1, 4);
        const ContinuumPinningProxy proxy(0.6, 0.8, 0.7, 1.5, 0.5, 0.5, 0.1);
        CHECK(proxy.kappa() == 0.0);
        const auto k = pinning_product_kernel(0.6, 0.8);
        Lattice lat;
        lat.dim = 1;
        lat.points = cloud.positions;
        MarkovChaosEngine engine(*k, lat);
        CHECK(proxy.evaluate(cloud) == doctest::Approx(engine.evaluate_total(cloud.marks, 0.7)).epsilon(1e-10));
    }
    SUBCASE("order-2 truncation agrees with the exact multilinear path") {
        // Small beta_hat: orders >= 3 are below the tolerance.
        const auto cloud = sample_cloud(box, 1.5, 1.0, 0.0, 1.0, 9);
        const auto fam = product_kernel_family(pinning_product_kernel(0.6, 0.0), 2);
        const auto exact = continuum_chaos(fam, cloud, 0.01, 64, ContinuumPath::exact);
        const auto orders = power_kernel_chaos(0.6, cloud, 0.01, 2);
        for (std::size_t j = 0; j <= 2; ++j) CHECK(orders.per_order[j] == doctest::Approx(exact.per_order[j]).epsilon(1e-7));
    }
    SUBCASE("mean one with Gaussian small-jump cells") {
        // Small beta_hat: at gamma = 1.5 large jumps compound and the sample mean
        // sits well below one for moderate replica counts.
        const ContinuumPinningProxy proxy(0.7, 0.5, 0.1, 1.5, 1.0, 0.0, 0.1, 64);
        std::vector<double> v;
        for (std::uint64_t r = 0; r < 4000; ++r) v.push_back(proxy.sample(3, r));
        const auto m = mean_estimate(v);
        CHECK(std::abs(m.mean - 1.0) < 5.0 * m.standard_error);
    }
}
