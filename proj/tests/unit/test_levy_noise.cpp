#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "levychaos/errors.hpp"
#include "levychaos/levy_noise.hpp"
#include "levychaos/stats.hpp"

using namespace levychaos;

namespace {

const TestFunction one = [](std::span<const double>) { return 1.0; };

}  // namespace

TEST_CASE("compensator closed forms") {
    CHECK(compensator_rate(1.5, 0.5, 0.5, 0.3) == 0.0);
    CHECK(compensator_rate(1.5, 1.0, 0.0, 1.0) == doctest::Approx(3.0));
    CHECK(levy_tail_mass(1.5, 0.1) == doctest::Approx(std::pow(10.0, 1.5)));
    CHECK_THROWS_AS(sample_cloud(DomainBox::unit(1), 1.5, 1.0, 0.0, 0.0, 1), ParameterError);
    CHECK_THROWS_AS(sample_cloud(DomainBox{{0.0}, {0.0}}, 1.5, 1.0, 0.0, 0.1, 1), ParameterError);
}

TEST_CASE("atom counts follow the Poisson law of the Levy measure") {
    const auto box = DomainBox::unit(1);
    const double mean = std::pow(10.0, 1.5);
    std::vector<double> counts;
    for (std::uint64_t r = 0; r < 10'000; ++r) {
        const auto c = sample_cloud(box, 1.5, 1.0, 0.0, 0.1, 17, r);
        counts.push_back(static_cast<double>(c.size()));
        for (double z : c.marks) REQUIRE(std::abs(z) > 0.1);
    }
    const auto m = mean_estimate(counts);
    CHECK(std::abs(m.mean - mean) < 3.0 * m.standard_error);

    // Chi-squared goodness of fit on binned counts.
    const int lo = 18, hi = 46;  // bins: <=lo, lo+1..hi-1, >=hi
    std::vector<double> obs(hi - lo + 1, 0.0);
    for (double c : counts) obs[std::clamp(static_cast<int>(c), lo, hi) - lo] += 1.0;
    auto pmf = [&](int k) { return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0)); };
    std::vector<double> expct(obs.size(), 0.0);
    double below = 0.0;
    for (int k = 0; k <= lo; ++k) below += pmf(k);
    expct[0] = below;
    double inner = below;
    for (int k = lo + 1; k < hi; ++k) {
        expct[k - lo] = pmf(k);
        inner += pmf(k);
    }
    expct.back() = 1.0 - inner;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double e = expct[i] * 1e4;
        chi2 += (obs[i] - e) * (obs[i] - e) / e;
    }
    boost::math::chi_squared dist(static_cast<double>(obs.size() - 1));
    CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("signs follow c_plus") {
    const auto c = sample_cloud(DomainBox::unit(2), 1.3, 0.3, 0.7, 0.05, 4);
    double pos = 0.0;
    for (double z : c.marks) pos += z > 0.0 ? 1.0 : 0.0;
    const double n = static_cast<double>(c.size());
    CHECK(std::abs(pos / n - 0.3) < 4.0 * std::sqrt(0.21 / n));
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (double x : c.position(i)) CHECK((x > 0.0 && x < 1.0));
    }
}

TEST_CASE("refinement adds annulus atoms only") {
    const auto box = DomainBox::unit(1);
    const auto c = sample_cloud(box, 1.5, 1.0, 0.0, 1.0, 8);
    const auto same = refine_cloud(c, 1.0, 8);
    CHECK(same.size() == c.size());
    CHECK_THROWS_AS(refine_cloud(c, 1.5, 8), ParameterError);

    std::vector<double> added;
    for (std::uint64_t r = 0; r < 20'000; ++r) {
        const auto coarse = sample_cloud(box, 1.5, 1.0, 0.0, 1.0, 21, r);
        const auto fine = refine_cloud(coarse, 0.5, 21, r);
        REQUIRE(fine.size() >= coarse.size());
        for (std::size_t i = 0; i < coarse.size(); ++i) REQUIRE(fine.marks[i] == coarse.marks[i]);
        for (std::size_t i = coarse.size(); i < fine.size(); ++i) {
            REQUIRE(std::abs(fine.marks[i]) > 0.5);
            REQUIRE(std::abs(fine.marks[i]) <= 1.0);
        }
        added.push_back(static_cast<double>(fine.size() - coarse.size()));
    }
    const auto m = mean_estimate(added);
    CHECK(std::abs(m.mean - (std::pow(0.5, -1.5) - 1.0)) < 3.0 * m.standard_error);

    const auto sym = sample_cloud(box, 1.5, 0.5, 0.5, 1.0, 2);
    CHECK(refine_cloud(sym, 0.3, 2).kappa == 0.0);
}

TEST_CASE("pairings are centered and martingale increments are orthogonal") {
    const auto box = DomainBox::unit(1);
    CHECK(pair_with_test_function(sample_cloud(box, 1.5, 1.0, 0.0, 0.2, 1),
                                  [](std::span<const double>) { return 0.0; }) == 0.0);

    const TestFunction f = [](std::span<const double> x) { return std::sin(3.0 * x[0]) + 0.5; };
    const TestFunction g = [](std::span<const double> x) { return x[0] < 0.5 ? 1.0 : -0.3; };
    const double If = box_integral(box, f);
    const double Ig = box_integral(box, g);
    CHECK(If == doctest::Approx((1.0 - std::cos(3.0)) / 3.0 + 0.5).epsilon(1e-12));

    std::vector<double> sym_pair, inc, coarse_g;
    for (std::uint64_t r = 0; r < 20'000; ++r) {
        sym_pair.push_back(pair_with_test_function(sample_cloud(box, 1.5, 0.5, 0.5, 0.1, 5, r), one, 1.0));
        const auto c1 = sample_cloud(box, 1.6, 1.0, 0.0, 0.5, 6, r);
        const auto c2 = refine_cloud(c1, 0.1, 6, r);
        inc.push_back(pair_with_test_function(c2, f, If) - pair_with_test_function(c1, f, If));
        coarse_g.push_back(pair_with_test_function(c1, g, Ig));
    }
    const auto m = mean_estimate(sym_pair);
    CHECK(std::abs(m.mean) < 4.0 * m.standard_error);
    const auto mi = mean_estimate(inc);
    CHECK(std::abs(mi.mean) < 5.0 * mi.standard_error);
    const auto cov = covariance_estimate(inc, coarse_g);
    CHECK(std::abs(cov.mean) < 5.0 * cov.standard_error);
}

TEST_CASE("small-jump increment variance") {
    // Var of the pairing of 1_B with atoms a' < |z| <= a is |B| gamma/(2-gamma) (a^(2-g) - a'^(2-g)).
    const auto box = DomainBox::unit(1);
    const double gamma = 1.5;
    const TestFunction ind = [](std::span<const double> x) { return x[0] < 0.4 ? 1.0 : 0.0; };
    std::vector<double> log_a, log_var;
    for (double a : {1.0, 0.3, 0.1}) {
        std::vector<double> inc;
        for (std::uint64_t r = 0; r < 20'000; ++r) {
            const auto c1 = sample_cloud(box, gamma, 1.0, 0.0, a, 31, r);
            const auto c2 = refine_cloud(c1, a / 20.0, 31, r);
            inc.push_back(pair_with_test_function(c2, ind, 0.4) - pair_with_test_function(c1, ind, 0.4));
        }
        const double var = mean_estimate(inc).sd * mean_estimate(inc).sd;
        const double expect = 0.4 * (small_jump_variance(gamma, a) - small_jump_variance(gamma, a / 20.0));
        CHECK(var == doctest::Approx(expect).epsilon(0.05));
        log_a.push_back(std::log(a));
        log_var.push_back(std::log(var));
    }
    CHECK(std::abs(linear_fit(log_a, log_var).slope - (2.0 - gamma)) < 0.1);
}

TEST_CASE("stable exponent constants match the Gamma-function closed form") {
    for (double gamma : {1.1, 1.3, 1.5, 1.7, 1.9}) {
        const auto c = stable_exponent_constants(gamma);
        const double base = gamma * boost::math::tgamma(-gamma);
        CHECK(c.cos_part == doctest::Approx(base * std::cos(std::numbers::pi * gamma / 2)).epsilon(1e-9));
        CHECK(c.sin_part == doctest::Approx(-base * std::sin(std::numbers::pi * gamma / 2)).epsilon(1e-9));
    }
}

TEST_CASE("characteristic functional") {
    const auto box = DomainBox::unit(1);
    CHECK(characteristic_functional(one, 0.0, box, 1.5, 1.0, 0.0) == std::complex<double>(1.0, 0.0));
    CHECK(characteristic_functional(one, 1.3, box, 1.5, 0.5, 0.5).imag() == doctest::Approx(0.0));

    // Non-constant f on a 2-d box: exponent is int of the scalar exponent at theta f(x).
    const DomainBox box2{{0.0, 0.0}, {1.0, 2.0}};
    const TestFunction f2 = [](std::span<const double> x) { return x[0] - 0.3 * x[1]; };
    const auto phi = characteristic_functional(f2, 0.7, box2, 1.4, 0.8, 0.2);
    double re = 0.0, im = 0.0;
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x0 = (i + 0.5) / n, x1 = 2.0 * (j + 0.5) / n;
            const auto e = levy_exponent(0.7 * (x0 - 0.3 * x1), 1.4, 0.8, 0.2);
            re += e.real() * 2.0 / (n * n);
            im += e.imag() * 2.0 / (n * n);
        }
    }
    CHECK(std::abs(phi - std::exp(std::complex<double>(re, im))) < 1e-4);

    // Monte Carlo at a small truncation level.
    std::vector<double> pairs;
    for (std::uint64_t r = 0; r < 10'000; ++r) {
        pairs.push_back(pair_with_test_function(sample_cloud(box, 1.5, 1.0, 0.0, 1e-3, 77, r), one, 1.0));
    }
    const double theta[] = {1.0};
    const auto emp = empirical_cf(pairs, theta);
    CHECK(std::abs(emp[0] - characteristic_functional(one, 1.0, box, 1.5, 1.0, 0.0)) < 0.02);
}

TEST_CASE("total mass sampler equals the unit pairing of the same cloud") {
    const DomainBox box{{0.0, 0.0}, {1.0, 2.0}};
    for (std::uint64_t r = 0; r < 20; ++r) {
        for (double cp : {1.0, 0.3}) {
            const auto c = sample_cloud(box, 1.6, cp, 1.0 - cp, 0.02, 8, r);
            const double direct = pair_with_test_function(c, one, box.volume());
            const double fast = sample_total_mass(box, 1.6, cp, 1.0 - cp, 0.02, 8, r);
            double abs_sum = 0.0;
            for (double m : c.marks) abs_sum += std::abs(m);
            CHECK(std::abs(fast - direct) <= 1e-12 * abs_sum);
        }
    }
}

TEST_CASE("cloud serialization round trips") {
    const DomainBox box{{0.0, -1.0}, {2.0, 1.0}};
    const auto c = sample_cloud(box, 1.7, 0.6, 0.4, 0.3, 12);
    std::stringstream ss;
    write_cloud_binary(c, ss);
    CHECK(ss.str().size() == 5 * 8 + c.size() * 3 * 8);
    const auto back = read_cloud_binary(ss, box);
    CHECK(back.size() == c.size());
    CHECK(back.positions == c.positions);
    CHECK(back.marks == c.marks);
    CHECK(back.kappa == c.kappa);
    std::ostringstream csv;
    write_cloud_csv(c, csv);
    CHECK(csv.str().rfind("x0,x1,z\r\n", 0) == 0);
}
