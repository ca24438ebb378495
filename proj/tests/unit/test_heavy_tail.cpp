#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "doctest.h"
#include "levychaos/errors.hpp"
#include "levychaos/heavy_tail.hpp"
#include "levychaos/stats.hpp"

using namespace levychaos;

namespace {

// Independent density of the one-sided law: omega = X - gamma, X ~ Pareto(gamma, gamma - 1).
double one_sided_density(double gamma, double x) {
    const double s = gamma - 1.0;
    const double y = x + gamma;
    if (y <= s) return 0.0;
    return gamma * std::pow(s, gamma) * std::pow(y, -gamma - 1.0);
}

double one_sided_tail_by_quadrature(double gamma, double t) {
    boost::math::quadrature::exp_sinh<double> es;
    const double lo = std::max(t, -1.0);
    return es.integrate([&](double x) { return one_sided_density(gamma, x); }, lo,
                        std::numeric_limits<double>::infinity());
}

// E[|omega|^e 1{|omega| > t}] (big) or E[|omega|^e 1{|omega| <= t}] (small), t >= 1.
double exact_truncated_moment(double gamma, double e, double t, bool big) {
    if (big) {
        boost::math::quadrature::exp_sinh<double> es;
        return es.integrate([&](double x) { return std::pow(x, e) * one_sided_density(gamma, x); }, t,
                            std::numeric_limits<double>::infinity());
    }
    boost::math::quadrature::tanh_sinh<double> ts;
    auto g = [&](double x) { return std::pow(std::abs(x), e) * one_sided_density(gamma, x); };
    return ts.integrate(g, -1.0, 0.0) + ts.integrate(g, 0.0, 1.0) + ts.integrate(g, 1.0, t);
}

double bisect_tail(const std::function<double(double)>& tail, double v) {
    double lo = 0.0, hi = 1.0;
    while (tail(hi) > v) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tail(mid) > v ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("laws validate their parameters") {
    CHECK_THROWS_AS(TailLaw::one_sided(1.0), ParameterError);
    CHECK_THROWS_AS(TailLaw::one_sided(2.0), ParameterError);
    CHECK_THROWS_AS(TailLaw::two_sided(1.5, 1.2), ParameterError);
    CHECK_THROWS_AS(sample_disorder(TailLaw::one_sided(1.5), 0, 1), ParameterError);
    TailLaw bad = TailLaw::one_sided(1.5);
    bad.gamma = 2.5;
    CHECK_THROWS_AS(sample_disorder(bad, 10, 1), ParameterError);
}

TEST_CASE("one-sided samples are centered and bounded below by -1") {
    const auto law = TailLaw::one_sided(1.5);
    const auto x = sample_disorder(law, 1'000'000, 42);
    CHECK(std::all_of(x.begin(), x.end(), [](double v) { return v > -1.0; }));
    const auto m = mean_estimate(x);
    CHECK(std::abs(m.mean) < 5.0 * m.standard_error);
}

TEST_CASE("tail constant of the one-sided law") {
    const double gamma = 1.5;
    const auto law = TailLaw::one_sided(gamma);
    CHECK(law.tail_constant == doctest::Approx(0.3535533905932738).epsilon(1e-15));
    // Closed-form tail against quadrature of the density.
    for (double t : {-0.5, 0.0, 1.0, 10.0, 100.0}) {
        CHECK(law.tail_right(t) == doctest::Approx(one_sided_tail_by_quadrature(gamma, t)).epsilon(1e-9));
    }
    const auto x = sample_disorder(law, 10'000'000, 7);
    for (double t : {10.0, 30.0, 100.0}) {
        const double hits = static_cast<double>(std::count_if(x.begin(), x.end(), [t](double v) { return v > t; }));
        const double p_hat = hits / 1e7;
        const double p = law.tail_right(t);
        CHECK(std::abs(p_hat - p) < 4.0 * std::sqrt(p / 1e7));
        if (t >= 25.0) CHECK(p_hat * std::pow(t, gamma) == doctest::Approx(law.tail_constant).epsilon(0.10));
    }
}

TEST_CASE("symmetric two-sided law balances its tails") {
    const auto law = TailLaw::two_sided(1.9, 0.5);
    CHECK(law.mean_shift() == 0.0);
    const auto x = sample_disorder(law, 2'000'000, 3);
    const double t = 20.0;
    const double right = static_cast<double>(std::count_if(x.begin(), x.end(), [t](double v) { return v > t; }));
    const double both = static_cast<double>(std::count_if(x.begin(), x.end(), [t](double v) { return std::abs(v) > t; }));
    CHECK(right / both == doctest::Approx(0.5).epsilon(0.1));
    CHECK(law.tail_right(t) / law.tail_abs(t) == doctest::Approx(0.5));
}

TEST_CASE("asymmetric two-sided law has mean zero and the declared tail balance") {
    const auto law = TailLaw::two_sided(1.6, 0.7);
    const auto x = sample_disorder(law, 2'000'000, 11);
    const auto m = mean_estimate(x);
    CHECK(std::abs(m.mean) < 5.0 * m.standard_error);
    const double t = 1e4;
    CHECK(law.tail_right(t) / law.tail_abs(t) == doctest::Approx(0.7).epsilon(1e-3));
}

TEST_CASE("sampler agrees with the analytic CDF") {
    for (const auto& law : {TailLaw::one_sided(1.5), TailLaw::two_sided(1.3, 0.3)}) {
        auto x = sample_disorder(law, 1'000'000, 99);
        std::sort(x.begin(), x.end());
        double d = 0.0;
        const double n = static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double F = law.cdf(x[i]);
            d = std::max({d, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(i + 1) / n)});
        }
        CHECK(d <= 1.63 / std::sqrt(n) * 1.5);
    }
}

TEST_CASE("noise scale inverts the absolute tail") {
    const auto law = TailLaw::one_sided(1.5);
    CHECK_THROWS_AS(solve_noise_scale(law, 1.0), ParameterError);
    CHECK_THROWS_AS(solve_noise_scale(law, 0.0), ParameterError);

    // v = C0 lands below 1 where the left branch contributes.
    const double V0 = solve_noise_scale(law, law.tail_constant);
    const double V0_bisect = bisect_tail([&](double t) {
        const double right = one_sided_tail_by_quadrature(1.5, t);
        const double left = 1.0 - one_sided_tail_by_quadrature(1.5, -t);
        return right + left;
    }, law.tail_constant);
    CHECK(V0 == doctest::Approx(V0_bisect).epsilon(1e-8));
    CHECK(V0 > 0.0);
    CHECK(V0 < 1.0);

    CHECK(solve_noise_scale(law, law.tail_abs(7.0)) == doctest::Approx(7.0).epsilon(1e-12));
    for (double V = 1.0; V <= 1e6; V *= 3.7) {
        CHECK(solve_noise_scale(law, law.tail_abs(V)) == doctest::Approx(V).epsilon(1e-10));
    }
    const auto two = TailLaw::two_sided(1.4, 0.8);
    for (double V : {0.3, 1.0, 2.5, 40.0, 1e5}) {
        CHECK(solve_noise_scale(two, two.tail_abs(V)) == doctest::Approx(V).epsilon(1e-10));
    }
    // Pure-power regime.
    const double v = 1e-12;
    CHECK(solve_noise_scale(law, v) * std::pow(v, 1.0 / 1.5) ==
          doctest::Approx(std::pow(law.tail_constant, 1.0 / 1.5)).epsilon(1e-6));
}

TEST_CASE("noise scales bundle") {
    const auto law = TailLaw::one_sided(1.5);
    const auto s = NoiseScales::make(law, 1e-3, 0.25, 0.4);
    CHECK(law.tail_abs(s.V_delta) == doctest::Approx(1e-3).epsilon(1e-12));
    CHECK(s.beta_hat_delta == doctest::Approx(0.4 * s.V_delta / 0.25));
}

TEST_CASE("truncated moments match the exact integral of the law") {
    const auto law = TailLaw::one_sided(1.5);
    CHECK_THROWS_AS(truncated_moment_ratio(law, 1.5, 1.0, 1e-4, 100, 1), ParameterError);

    for (double v : {1e-2, 1e-4}) {
        const double V = solve_noise_scale(law, v);
        for (double e : {1.2, 1.8}) {
            const bool big = e < 1.5;
            const double exact = exact_truncated_moment(1.5, e, V, big);
            const auto est = estimate_truncated_moment(law, e, 1.0, v, 2'000'000, 5);
            // Big jumps have infinite variance, so allow a wider relative band.
            const double tol = big ? 0.05 * exact : 5.0 * est.standard_error;
            CHECK(std::abs(est.moment - exact) < tol);
        }
    }
    // Asymptotic regime: distance to 1 shrinks as v decreases.
    auto exact_ratio = [&](double e, double v) {
        const double V = solve_noise_scale(law, v);
        return exact_truncated_moment(1.5, e, V, e < 1.5) / truncated_moment_asymptotic(law, e, 1.0, v);
    };
    CHECK(std::abs(exact_ratio(1.2, 1e-4) - 1.0) < std::abs(exact_ratio(1.2, 1e-2) - 1.0));
    CHECK(std::abs(exact_ratio(1.8, 1e-4) - 1.0) < std::abs(exact_ratio(1.8, 1e-2) - 1.0));
    // Frozen values of the exact oracle at v = 1e-4.
    CHECK(exact_ratio(1.2, 1e-4) == doctest::Approx(1.006).epsilon(2e-3));
    CHECK(exact_ratio(1.8, 1e-4) == doctest::Approx(0.7057).epsilon(2e-3));
}
