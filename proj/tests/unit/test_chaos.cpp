#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "levychaos/chaos.hpp"
#include "levychaos/errors.hpp"
#include "levychaos/rng.hpp"

using namespace levychaos;

namespace {

// Random positive step weights on a 1-d lattice, smooth in the gap.
std::shared_ptr<ProductKernel> random_product_kernel(std::uint64_t seed) {
    CounterRng rng(derive_key(seed, 0, Purpose::oracle));
    const double a = 0.5 + rng.uniform(), b = 2.0 * rng.uniform(), c = 0.3 + rng.uniform();
    auto k = std::make_shared<ProductKernel>();
    k->dim = 1;
    k->origin = {0.0};
    k->step = [a, b](std::span<const double> x, std::span<const double> y) {
        const double d = y[0] - x[0];
        return a * std::exp(-b * d) + 0.1 * d;
    };
    k->terminal = [c](std::span<const double> x) { return c + x[0] * x[0]; };
    k->normalizer = 0.5 + rng.uniform();
    return k;
}

Lattice line(std::size_t n) {
    return Lattice::cell_centers(DomainBox::unit(1), {n});
}

// Monte Carlo of int over gaps g_1..g_m >= 0 summing to 1 of prod g_j^(e_j - 1),
// with Dirichlet(e_j / 2) proposals so the weights stay bounded.
MeanEstimate mc_simplex(const std::vector<double>& e, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<double> eta(e.size());
    double log_norm = 0.0, sum_eta = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        eta[j] = e[j] == 1.0 ? 1.0 : 0.5 * e[j];
        log_norm += std::lgamma(eta[j]);
        sum_eta += eta[j];
    }
    log_norm -= std::lgamma(sum_eta);
    std::vector<double> w(n), g(e.size());
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < e.size(); ++j) {
            std::gamma_distribution<double> gd(eta[j], 1.0);
            g[j] = gd(gen);
            s += g[j];
        }
        double lw = log_norm;
        for (std::size_t j = 0; j < e.size(); ++j) lw += (e[j] - eta[j]) * std::log(g[j] / s);
        w[i] = std::exp(lw);
    }
    return mean_estimate(w);
}

}  // namespace

TEST_CASE("product kernel evaluation is symmetric and vanishes on ties") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto k = random_product_kernel(s);
        CounterRng rng(derive_key(s, 1, Purpose::oracle));
        std::vector<double> x(4);
        for (auto& v : x) v = rng.uniform();
        std::vector<double> sorted = x;
        std::sort(sorted.begin(), sorted.end());
        double direct = k->step(std::vector<double>{0.0}, std::span<const double>(&sorted[0], 1));
        for (int j = 1; j < 4; ++j)
            direct *= k->step(std::span<const double>(&sorted[j - 1], 1), std::span<const double>(&sorted[j], 1));
        direct *= k->terminal(std::span<const double>(&sorted[3], 1)) / k->normalizer;
        CHECK(k->evaluate(x) == doctest::Approx(direct).epsilon(1e-12));
        auto perm = x;
        std::shuffle(perm.begin(), perm.end(), std::mt19937_64(s));
        CHECK(k->evaluate(perm) == doctest::Approx(k->evaluate(x)).epsilon(1e-12));
        x[2] = x[0];
        CHECK(k->evaluate(x) == 0.0);
    }
}

TEST_CASE("trivial chaos values") {
    const auto k = random_product_kernel(3);
    const auto lat = line(12);
    const auto fam0 = product_kernel_family(k, 0);
    const auto omega = sample_disorder(TailLaw::one_sided(1.5), 12, 4);
    CHECK(discrete_chaos(fam0, lat, omega, 0.7).total == k->psi0());
    const auto fam = product_kernel_family(k, 5);
    const auto r = discrete_chaos(fam, lat, omega, 0.0);
    CHECK(r.total == k->psi0());
    CHECK(r.per_order.size() == 6);
    CHECK_THROWS_AS(discrete_chaos(fam, lat, std::vector<double>(11, 0.0), 1.0), ParameterError);
    CHECK_THROWS_AS(discrete_chaos_enumerate(fam, lat, omega, 1.0), CapacityError);
}

TEST_CASE("DP equals brute-force enumeration on random instances") {
    const auto law = TailLaw::two_sided(1.4, 0.7);
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto k = random_product_kernel(100 + s);
        const auto fam = product_kernel_family(k, 3);
        const auto lat = line(12);
        const auto omega = sample_disorder(law, 12, s);
        const double bh = 0.1 + 0.9 * static_cast<double>(s % 10) / 10.0;
        const auto dp = discrete_chaos(fam, lat, omega, bh);
        const auto en = discrete_chaos_enumerate(fam, lat, omega, bh);
        for (std::size_t j = 0; j <= 3; ++j) {
            CHECK(dp.per_order[j] == doctest::Approx(en.per_order[j]).epsilon(1e-10));
        }
    }
}

TEST_CASE("ties in time carry no chain weight") {
    // 2-d lattice: several sites share a time coordinate.
    auto k = std::make_shared<ProductKernel>();
    k->dim = 2;
    k->origin = {0.0, 0.0};
    k->step = [](std::span<const double> x, std::span<const double> y) {
        return std::exp(-(y[1] - x[1]) * (y[1] - x[1])) / (y[0] - x[0] + 0.5);
    };
    k->terminal = [](std::span<const double> x) { return 1.0 + x[1]; };
    const auto lat = Lattice::cell_centers(DomainBox{{0.0, -1.0}, {1.0, 1.0}}, {4, 3});
    const auto omega = sample_disorder(TailLaw::two_sided(1.6, 0.5), lat.size(), 9);
    const auto fam = product_kernel_family(k, 3);
    const auto dp = discrete_chaos(fam, lat, omega, 0.8);
    const auto en = discrete_chaos_enumerate(fam, lat, omega, 0.8);
    for (std::size_t j = 0; j <= 3; ++j) CHECK(dp.per_order[j] == doctest::Approx(en.per_order[j]).epsilon(1e-10));
}

TEST_CASE("all-orders evaluation matches the per-order sum") {
    const auto k = random_product_kernel(7);
    const auto lat = line(30);
    MarkovChaosEngine engine(*k, lat);
    const auto omega = sample_disorder(TailLaw::one_sided(1.5), 30, 2);
    std::vector<double> w(omega.begin(), omega.end());
    const auto r = engine.evaluate(w, 0.4, 30);
    CHECK(engine.evaluate_total(w, 0.4) == doctest::Approx(r.total).epsilon(1e-12));
}

TEST_CASE("mean identity over disorder replicas") {
    const auto k = random_product_kernel(11);
    const auto lat = line(16);
    MarkovChaosEngine engine(*k, lat);
    const auto law = TailLaw::one_sided(1.7);
    std::vector<double> tot;
    std::vector<double> omega(16);
    for (std::uint64_t r = 0; r < 20'000; ++r) {
        fill_disorder(law, derive_key(5, r, Purpose::disorder), omega);
        tot.push_back(engine.evaluate(omega, 0.3, 4).total);
    }
    const auto m = mean_estimate(tot);
    CHECK(std::abs(m.mean - k->psi0()) < 5.0 * m.standard_error);
}

TEST_CASE("order-one continuum chaos is the pairing") {
    const auto box = DomainBox::unit(1);
    const auto cloud = sample_cloud(box, 1.5, 1.0, 0.0, 0.05, 3);
    const KernelEvaluator f = [](std::span<const double> x) {
        return x.empty() ? 1.0 : std::cos(2.0 * x[0]) + x[0];
    };
    std::vector<SymmetricKernelSpec> ks(2);
    ks[0] = {0, f, KernelForm::generic, nullptr};
    ks[1] = {1, f, KernelForm::generic, nullptr};
    const double pair = pair_with_test_function(cloud, [&](std::span<const double> x) { return f(x); });
    CHECK(continuum_chaos(ks, cloud, 1.0, 64).per_order[1] == doctest::Approx(pair).epsilon(1e-10));
    CHECK(continuum_chaos(ks, cloud, 1.0, 64, ContinuumPath::exact).per_order[1] ==
          doctest::Approx(pair).epsilon(1e-8));

    PointCloud empty;
    empty.domain = box;
    empty.c_plus = empty.c_minus = 0.5;
    const auto fam = product_kernel_family(random_product_kernel(1), 3);
    const auto r = continuum_chaos(fam, empty, 1.0, 64);
    for (std::size_t j = 1; j <= 3; ++j) CHECK(r.per_order[j] == 0.0);
    CHECK_THROWS_AS(continuum_chaos(fam, empty, 1.0, 32), ParameterError);
    CHECK_THROWS_AS(continuum_chaos(fam, empty, 1.0, 64, ContinuumPath::exact), CapacityError);
}

TEST_CASE("exact and mesh continuum chaos agree at order two") {
    // Pinning-type kernel: power-law gaps with exponent alpha - 1.
    const double alpha = 0.6;
    auto k = std::make_shared<ProductKernel>();
    k->dim = 1;
    k->origin = {0.0};
    k->step = [alpha](std::span<const double> x, std::span<const double> y) {
        return std::pow(y[0] - x[0], alpha - 1.0);
    };
    k->terminal = [](std::span<const double>) { return 1.0; };
    const auto fam = product_kernel_family(k, 2);
    const auto box = DomainBox::unit(1);
    for (std::uint64_t s = 0; s < 5; ++s) {
        // Symmetric noise: no compensator, so the mesh only carries the atoms.
        const auto cloud = sample_cloud(box, 1.5, 0.5, 0.5, 1.2, s);
        REQUIRE(cloud.size() <= 5);
        const auto mesh = continuum_chaos(fam, cloud, 0.8, 64);
        const auto exact = continuum_chaos(fam, cloud, 0.8, 64, ContinuumPath::exact);
        CHECK(mesh.total == doctest::Approx(exact.total).epsilon(1e-3));
    }

    // Smooth kernel with a compensator: the mesh error shrinks under refinement.
    auto sk = std::make_shared<ProductKernel>();
    sk->dim = 1;
    sk->origin = {0.0};
    sk->step = [](std::span<const double> x, std::span<const double> y) { return std::exp(x[0] - y[0]); };
    sk->terminal = [](std::span<const double> x) { return 1.0 - 0.5 * x[0]; };
    const auto sfam = product_kernel_family(sk, 2);
    const auto cloud = sample_cloud(box, 1.5, 1.0, 0.0, 1.0, 2);
    REQUIRE(cloud.size() <= 5);
    const auto exact = continuum_chaos(sfam, cloud, 1.0, 64, ContinuumPath::exact);
    double prev_err = 1.0;
    for (std::size_t mesh : {256, 1024, 4096}) {
        const double err = std::abs(continuum_chaos(sfam, cloud, 1.0, mesh).total / exact.total - 1.0);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-3);
}

TEST_CASE("symmetric norms") {
    const auto lat = line(10);
    const KernelEvaluator one = [](std::span<const double>) { return 1.0; };
    CHECK(symmetric_norm({1, one, KernelForm::generic, nullptr}, lat, 2.0).value ==
          doctest::Approx(1.0));

    // Three sites, k = 2: six ordered off-diagonal pairs.
    Lattice three = line(3);
    const KernelEvaluator f2 = [](std::span<const double> x) {
        return x[0] == x[1] ? 0.0 : x[0] + x[1];
    };
    const double q = 1.5, v = 1.0 / 3.0;
    const double s01 = 1.0 / 6 + 1.0 / 2, s02 = 1.0 / 6 + 5.0 / 6, s12 = 1.0 / 2 + 5.0 / 6;
    const double hand = std::pow(v * v / 2.0 * 2.0 * (std::pow(s01, q) + std::pow(s02, q) + std::pow(s12, q)), 1.0 / q);
    CHECK(symmetric_norm({2, f2, KernelForm::generic, nullptr}, three, q).value == doctest::Approx(hand).epsilon(1e-14));

    // DP norm equals enumeration on a product kernel.
    const auto k = random_product_kernel(21);
    const auto fam = product_kernel_family(k, 3);
    const auto lat12 = line(12);
    for (std::size_t j = 1; j <= 3; ++j) {
        SymmetricKernelSpec generic = fam[j];
        generic.form = KernelForm::generic;
        CHECK(symmetric_norm(fam[j], lat12, 1.8).value ==
              doctest::Approx(symmetric_norm(generic, lat12, 1.8).value).epsilon(1e-12));
    }
}

TEST_CASE("simplex integral closed form") {
    CHECK(simplex_integral(1.0, 1, 1.0) == doctest::Approx(1.0));
    CHECK(simplex_integral(0.5, 2, 1.0) == doctest::Approx(2.0 * std::numbers::pi));
    CHECK_THROWS_AS(simplex_integral(0.0, 2, 1.0), ParameterError);

    const auto m1 = mc_simplex({0.5, 0.5, 0.5}, 1'000'000, 1);
    CHECK(std::abs(m1.mean / simplex_integral(0.5, 2, 1.0) - 1.0) < 0.01);

    // t = 2 rescales the unit-simplex integral by t^((k+1) xi - 1).
    const auto m2 = mc_simplex(std::vector<double>(5, 0.3), 1'000'000, 2);
    const double scaled = m2.mean * std::pow(2.0, 5 * 0.3 - 1.0);
    CHECK(std::abs(scaled - simplex_integral(0.3, 4, 2.0)) < 3.0 * m2.standard_error * std::pow(2.0, 0.5));

    // Continuum power-product norm: k gaps with exponent xi - 1 and a free final gap.
    const double alpha = 0.5, q = 1.8;
    const double xi = 1.0 - q * (1.0 - alpha);
    const auto m3 = mc_simplex({xi, xi, 1.0}, 1'000'000, 3);
    const double norm_q = std::pow(symmetric_norm_power_product(alpha, 2, q).value, q);
    CHECK(std::abs(m3.mean / norm_q - 1.0) < 0.01);
}

TEST_CASE("moment bound constant") {
    const double expect = 1.0 / 0.2 * std::max(std::pow(0.3, -1.0 / 1.2), std::pow(0.3, -1.0 / 1.8));
    CHECK(moment_bound_constant(1.2, 1.8, 1.5, 1.0, 1.0) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(std::abs(moment_bound_constant(1.2, 1.8, 1.5, 1.0, 1.0) - 13.65) < 0.02);
    CHECK(moment_bound_constant(1.2, 1.8, 1.5, 0.3, 1.0) == moment_bound_constant(1.2, 1.8, 1.5, 1.0, 1.0));
    CHECK(moment_bound_constant(1.49, 1.8, 1.5, 1.0, 1.0) > moment_bound_constant(1.2, 1.8, 1.5, 1.0, 1.0));
    CHECK(moment_bound_constant(1.4999, 1.8, 1.5, 1.0, 1.0) > 500.0);
    CHECK_THROWS_AS(moment_bound_constant(1.6, 1.8, 1.5, 1.0, 1.0), ParameterError);
}

TEST_CASE("order-one moment ratio is stable across seeds") {
    const KernelEvaluator one = [](std::span<const double>) { return 1.0; };
    std::vector<SymmetricKernelSpec> ks{{0, one, KernelForm::generic, nullptr},
                                        {1, one, KernelForm::generic, nullptr}};
    const auto law = TailLaw::one_sided(1.5);
    auto lat = line(16);
    lat.V_delta = solve_noise_scale(law, lat.v_delta);
    std::vector<double> r;
    for (std::uint64_t s : {1, 2, 3}) {
        const auto rep = empirical_moment_bound_check(ks, law, lat, 1.2, 1.8, 20'000, s);
        REQUIRE(rep.ratios.size() == 1);
        CHECK(std::isfinite(rep.ratios[0]));
        CHECK(rep.bound_holds);
        r.push_back(rep.ratios[0]);
    }
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    CHECK(*hi / *lo - 1.0 < 0.10);
}
