#include <cmath>
#include <vector>

#include "doctest.h"
#include "levychaos/errors.hpp"
#include "levychaos/heavy_tail.hpp"
#include "levychaos/rng.hpp"
#include "levychaos/stats.hpp"

using namespace levychaos;

namespace {

std::vector<double> uniforms(std::uint64_t seed, std::size_t n) {
    CounterRng rng(derive_key(seed, 0, Purpose::oracle));
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform();
    return x;
}

}  // namespace

TEST_CASE("KS distance edge cases") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK(ks_distance(a, a) == 0.0);
    const std::vector<double> b{4.0, 5.0};
    CHECK(ks_distance(a, b) == 1.0);
    CHECK_THROWS_AS(ks_distance(std::vector<double>{}, a), ParameterError);
    // Ties across samples.
    CHECK(ks_distance(std::vector<double>{1.0, 1.0, 2.0}, std::vector<double>{1.0, 2.0, 2.0}) ==
          doctest::Approx(1.0 / 3.0));
}

TEST_CASE("KS is symmetric and invariant under monotone maps") {
    const auto x = uniforms(1, 500);
    auto y = uniforms(2, 700);
    for (auto& v : y) v = v * v;
    CHECK(ks_distance(x, y) == ks_distance(y, x));
    std::vector<double> tx(x.size()), ty(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) tx[i] = std::exp(3.0 * x[i]);
    for (std::size_t i = 0; i < y.size(); ++i) ty[i] = std::exp(3.0 * y[i]);
    CHECK(ks_distance(tx, ty) == ks_distance(x, y));
}

TEST_CASE("same-law samples stay inside the 99% KS band") {
    int inside = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto x = uniforms(1000 + 2 * r, 10'000);
        const auto y = uniforms(1001 + 2 * r, 10'000);
        if (ks_distance(x, y) < ks_band_99(x.size(), y.size())) ++inside;
    }
    CHECK(inside >= 95);
}

TEST_CASE("bootstrap moment") {
    const std::vector<double> c(50, -2.5);
    const auto e = bootstrap_moment(c, 1.2, 300, 1);
    CHECK(e.estimate == doctest::Approx(2.5));
    CHECK(e.lower == doctest::Approx(2.5));
    CHECK(e.upper == doctest::Approx(2.5));
    std::vector<double> pm;
    for (int i = 0; i < 100; ++i) pm.push_back(i % 2 ? 1.0 : -1.0);
    CHECK(bootstrap_moment(pm, 1.0, 200, 2).estimate == doctest::Approx(1.0));
    CHECK_THROWS_AS(bootstrap_moment(pm, 1.0, 100, 2), ParameterError);

    // Pareto(gamma = 1.5, scale 1): E[X^p] = gamma/(gamma - p).
    const double truth = std::pow(1.5 / (1.5 - 1.2), 1.0 / 1.2);
    int covered = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        CounterRng rng(derive_key(77, r, Purpose::oracle));
        std::vector<double> x(20'000);
        for (auto& v : x) v = std::pow(rng.uniform(), -1.0 / 1.5);
        const auto m = bootstrap_moment(x, 1.2, 200, r);
        CHECK(m.lower <= m.estimate);
        CHECK(m.estimate <= m.upper);
        if (r == 0) CHECK((m.lower <= truth && truth <= m.upper));
        if (m.lower <= truth && truth <= m.upper) ++covered;
    }
    // |X|^p has infinite variance here, so percentile intervals undercover.
    MESSAGE("bootstrap coverage on Pareto(1.5), p = 1.2: " << covered << "/100");
}

TEST_CASE("bootstrap coverage on a light-tailed law") {
    int covered = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto x = uniforms(5000 + r, 2'000);
        const auto m = bootstrap_moment(x, 2.0, 300, r);
        if (m.lower <= std::sqrt(1.0 / 3.0) && std::sqrt(1.0 / 3.0) <= m.upper) ++covered;
    }
    CHECK(covered >= 90);
}

TEST_CASE("empirical characteristic function") {
    const std::vector<double> theta{0.0, 0.5, 2.0};
    auto x = uniforms(9, 20'000);
    for (auto& v : x) v = 2.0 * v - 1.0;
    const auto cf = empirical_cf(x, theta);
    CHECK(cf[0] == std::complex<double>(1.0, 0.0));
    for (std::size_t k = 1; k < theta.size(); ++k) {
        CHECK(std::abs(cf[k].imag()) < 4.0 / std::sqrt(2.0 * 20'000.0));
        CHECK(cf[k].real() == doctest::Approx(std::sin(theta[k]) / theta[k]).epsilon(0.02));
    }
}

TEST_CASE("report rendering") {
    ConvergenceReport rep;
    rep.name = "demo";
    rep.rows.push_back({"N=8", 8.0, 0.1, 1.0, 0.01, {1.2, 1.0, 0.9, 1.1}, 100});
    rep.verdicts.push_back({"ks", true});
    CHECK(rep.passed());
    CHECK(rep.to_json()["rows"][0]["ks"] == 0.1);
    CHECK(rep.to_text().find("ok") != std::string::npos);
    rep.verdicts.push_back({"other", false});
    CHECK_FALSE(rep.passed());
}

TEST_CASE("linear fit and quantiles") {
    const std::vector<double> x{0, 1, 2, 3};
    const std::vector<double> y{1, 3, 5, 7};
    const auto f = linear_fit(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
}
