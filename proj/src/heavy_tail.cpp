#include "levychaos/heavy_tail.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "levychaos/errors.hpp"
#include "levychaos/rng.hpp"

namespace levychaos {

namespace {

// P[Pareto(gamma, scale) > x]
double pareto_tail(double x, double scale, double gamma) {
    if (x <= scale) return 1.0;
    return std::pow(scale / x, gamma);
}

}  // namespace

std::string to_string(SupportMode mode) {
    return mode == SupportMode::one_sided_gibbs ? "one_sided_gibbs" : "two_sided";
}

SupportMode support_mode_from_string(const std::string& name) {
    if (name == "one_sided_gibbs" || name == "one_sided") return SupportMode::one_sided_gibbs;
    if (name == "two_sided") return SupportMode::two_sided;
    throw ParameterError("unknown support_mode '" + name + "'");
}

TailLaw TailLaw::one_sided(double gamma) {
    TailLaw law;
    law.gamma = gamma;
    law.c_plus = 1.0;
    law.c_minus = 0.0;
    law.support_mode = SupportMode::one_sided_gibbs;
    law.tail_constant = std::pow(gamma - 1.0, gamma);
    law.validate();
    return law;
}

TailLaw TailLaw::two_sided(double gamma, double c_plus) {
    TailLaw law;
    law.gamma = gamma;
    law.c_plus = c_plus;
    law.c_minus = 1.0 - c_plus;
    law.support_mode = SupportMode::two_sided;
    law.tail_constant = 1.0;
    law.validate();
    return law;
}

void TailLaw::validate() const {
    if (!(gamma > 1.0 && gamma < 2.0)) {
        throw ParameterError("gamma must lie in (1,2), got " + std::to_string(gamma));
    }
    if (!(c_plus >= 0.0 && c_plus <= 1.0 && c_minus >= 0.0 && c_minus <= 1.0) ||
        c_plus + c_minus != 1.0) {
        throw ParameterError("c_plus and c_minus must lie in [0,1] and sum to 1");
    }
    if (support_mode == SupportMode::one_sided_gibbs && c_minus != 0.0) {
        throw ParameterError("one_sided_gibbs law requires c_plus = 1");
    }
    if (!(tail_constant > 0.0)) throw ParameterError("tail_constant must be positive");
}

double TailLaw::pareto_scale() const {
    return support_mode == SupportMode::one_sided_gibbs ? gamma - 1.0 : 1.0;
}

double TailLaw::mean_shift() const {
    if (support_mode == SupportMode::one_sided_gibbs) return gamma;
    return gamma / (gamma - 1.0) * (c_plus - c_minus);
}

double TailLaw::tail_right(double t) const {
    const double s = pareto_scale();
    const double mu = mean_shift();
    if (support_mode == SupportMode::one_sided_gibbs) return pareto_tail(t + mu, s, gamma);
    double p = c_plus * pareto_tail(t + mu, s, gamma);
    if (-t - mu > s) p += c_minus * (1.0 - pareto_tail(-t - mu, s, gamma));
    return p;
}

double TailLaw::tail_left(double t) const {
    const double s = pareto_scale();
    const double mu = mean_shift();
    if (support_mode == SupportMode::one_sided_gibbs) {
        const double y = mu - t;  // omega < -t  <=>  X < mu - t
        if (y <= s) return 0.0;
        return 1.0 - pareto_tail(y, s, gamma);
    }
    double p = c_minus * pareto_tail(t - mu, s, gamma);
    if (mu - t > s) p += c_plus * (1.0 - pareto_tail(mu - t, s, gamma));
    return p;
}

double TailLaw::tail_abs(double t) const {
    if (t < 0.0) return 1.0;
    return tail_right(t) + tail_left(t);
}

double TailLaw::cdf(double x) const { return 1.0 - tail_right(x); }

double TailLaw::from_uniforms(double u_magnitude, double u_sign) const {
    const double mag = pareto_scale() * std::exp(-std::log(u_magnitude) / gamma);
    if (support_mode == SupportMode::one_sided_gibbs) return mag - gamma;
    const double sign = u_sign < c_plus ? 1.0 : -1.0;
    return sign * mag - mean_shift();
}

double TailLaw::pure_tail_threshold() const {
    if (support_mode == SupportMode::one_sided_gibbs) return 1.0;
    return 1.0 + std::abs(mean_shift());
}

NoiseScales NoiseScales::make(const TailLaw& law, double v_delta, double J_delta, double beta) {
    if (!(J_delta > 0.0)) throw ParameterError("J_delta must be positive");
    NoiseScales s;
    s.v_delta = v_delta;
    s.V_delta = solve_noise_scale(law, v_delta);
    s.J_delta = J_delta;
    s.beta_hat_delta = beta * s.V_delta / J_delta;
    return s;
}

void fill_disorder(const TailLaw& law, std::uint64_t stream_key, std::span<double> out,
                   std::uint64_t first_site) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint64_t site = first_site + i;
        const double u1 = to_open_unit(stream_at(stream_key, 2 * site));
        const double u2 = to_open_unit(stream_at(stream_key, 2 * site + 1));
        out[i] = law.from_uniforms(u1, u2);
    }
}

std::vector<double> sample_disorder(const TailLaw& law, std::size_t n_sites, std::uint64_t seed) {
    law.validate();
    if (n_sites == 0) throw ParameterError("n_sites must be at least 1");
    std::vector<double> out(n_sites);
    fill_disorder(law, derive_key(seed, 0, Purpose::disorder), out);
    return out;
}

double solve_noise_scale(const TailLaw& law, double v_delta) {
    law.validate();
    if (!(v_delta > 0.0 && v_delta < 1.0)) {
        throw ParameterError("v_delta must lie in (0,1), got " + std::to_string(v_delta));
    }
    // Pure-tail closed form when it applies.
    if (law.support_mode == SupportMode::one_sided_gibbs) {
        const double V = law.pareto_scale() * std::pow(v_delta, -1.0 / law.gamma) - law.gamma;
        if (V >= 1.0) return V;
    }
    auto f = [&](double t) { return law.tail_abs(t) - v_delta; };
    double hi = law.pure_tail_threshold() + std::pow(law.tail_constant / v_delta, 1.0 / law.gamma);
    while (f(hi) > 0.0) hi *= 2.0;
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 300;
    const auto [lo_root, hi_root] = boost::math::tools::toms748_solve(f, 0.0, hi, f(0.0), f(hi),
                                                                      tol, iters);
    if (iters >= 300) throw NumericalError("noise scale root finding did not converge");
    return 0.5 * (lo_root + hi_root);
}

double truncated_moment_asymptotic(const TailLaw& law, double exponent, double a,
                                   double v_delta) {
    const double g = law.gamma;
    if (exponent == g) throw ParameterError("exponent equal to gamma makes both formulas singular");
    if (!(a > 0.0)) throw ParameterError("a must be positive");
    const double V = solve_noise_scale(law, v_delta);
    if (exponent < g) {
        if (!(exponent > 0.0)) throw ParameterError("big-jump exponent must lie in (0,gamma)");
        return g / (g - exponent) * std::pow(a, exponent - g) * std::pow(V, exponent) * v_delta;
    }
    if (exponent > 2.0) throw ParameterError("small-jump exponent must lie in (gamma,2]");
    return g / (exponent - g) * std::pow(a, exponent - g) * std::pow(V, exponent) * v_delta;
}

TruncatedMomentEstimate estimate_truncated_moment(const TailLaw& law, double exponent, double a,
                                                  double v_delta, std::uint64_t n_samples,
                                                  std::uint64_t seed) {
    if (n_samples < 2) throw ParameterError("n_samples must be at least 2");
    TruncatedMomentEstimate est;
    est.asymptotic = truncated_moment_asymptotic(law, exponent, a, v_delta);
    est.big_jump = exponent < law.gamma;
    const double t = a * solve_noise_scale(law, v_delta);
    const std::uint64_t key = derive_key(seed, 0, Purpose::oracle);
    const double g = law.gamma;

    double mean = 0.0;
    double m2 = 0.0;
    auto accumulate = [&](std::uint64_t i, double x) {
        const double d = x - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (x - mean);
    };

    if (est.big_jump && t >= law.pure_tail_threshold()) {
        const double mu = law.mean_shift();
        double p_right = 0.0;
        double p_left = 0.0;
        double thr_right = 0.0;
        double thr_left = 0.0;
        if (law.support_mode == SupportMode::one_sided_gibbs) {
            thr_right = t + mu;
            p_right = std::pow(law.pareto_scale() / thr_right, g);
        } else {
            thr_right = t + mu;
            thr_left = t - mu;
            p_right = law.c_plus * std::pow(thr_right, -g);
            p_left = law.c_minus * std::pow(thr_left, -g);
        }
        const double prob = p_right + p_left;
        for (std::uint64_t i = 0; i < n_samples; ++i) {
            const double u1 = to_open_unit(stream_at(key, 2 * i));
            const double u2 = to_open_unit(stream_at(key, 2 * i + 1));
            const double scale = std::exp(-std::log(u1) / g);
            double abs_omega = 0.0;
            if (u2 * prob < p_right) {
                abs_omega = thr_right * scale - mu;
            } else {
                abs_omega = thr_left * scale + mu;
            }
            accumulate(i, prob * std::pow(abs_omega, exponent));
        }
    } else {
        for (std::uint64_t i = 0; i < n_samples; ++i) {
            const double u1 = to_open_unit(stream_at(key, 2 * i));
            const double u2 = to_open_unit(stream_at(key, 2 * i + 1));
            const double w = std::abs(law.from_uniforms(u1, u2));
            const bool keep = est.big_jump ? (w > t) : (w <= t);
            accumulate(i, keep ? std::pow(w, exponent) : 0.0);
        }
    }
    est.moment = mean;
    est.standard_error = std::sqrt(m2 / static_cast<double>(n_samples - 1) /
                                   static_cast<double>(n_samples));
    est.ratio = est.moment / est.asymptotic;
    return est;
}

double truncated_moment_ratio(const TailLaw& law, double exponent, double a, double v_delta,
                              std::uint64_t n_samples, std::uint64_t seed) {
    return estimate_truncated_moment(law, exponent, a, v_delta, n_samples, seed).ratio;
}

}  // namespace levychaos
