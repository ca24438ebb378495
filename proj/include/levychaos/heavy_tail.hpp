#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace levychaos {

enum class SupportMode { one_sided_gibbs, two_sided };

[[nodiscard]] std::string to_string(SupportMode mode);
[[nodiscard]] SupportMode support_mode_from_string(const std::string& name);

// Centered disorder law with pure power tails.
//
// one_sided_gibbs: omega = X - gamma with X ~ Pareto(gamma, scale gamma - 1).
//   Support (-1, inf), mean 0, P[omega > t] ~ (gamma - 1)^gamma t^-gamma.
// two_sided: sign + with probability c_plus, magnitude Pareto(gamma, 1),
//   then shifted by the analytic mean gamma/(gamma-1) (c_plus - c_minus).
struct TailLaw {
    double gamma = 1.5;
    double tail_constant = 0.0;  // C0 in P[|omega| > t] ~ C0 t^-gamma
    double c_plus = 1.0;
    double c_minus = 0.0;
    SupportMode support_mode = SupportMode::one_sided_gibbs;

    [[nodiscard]] static TailLaw one_sided(double gamma);
    [[nodiscard]] static TailLaw two_sided(double gamma, double c_plus);

    // Throws ParameterError when an invariant fails.
    void validate() const;

    // Constant subtracted from the raw variable to center it.
    [[nodiscard]] double mean_shift() const;
    // Pareto scale of the raw magnitude.
    [[nodiscard]] double pareto_scale() const;

    [[nodiscard]] double tail_right(double t) const;  // P[omega > t]
    [[nodiscard]] double tail_left(double t) const;   // P[omega < -t]
    [[nodiscard]] double tail_abs(double t) const;    // P[|omega| > t]
    [[nodiscard]] double cdf(double x) const;         // P[omega <= x]

    // Deterministic transform of independent uniforms in (0, 1).
    [[nodiscard]] double from_uniforms(double u_magnitude, double u_sign) const;

    // Below this level |omega| > t only happens through the pure Pareto
    // branches, so tail_abs has the closed form used by the conditional sampler.
    [[nodiscard]] double pure_tail_threshold() const;
};

struct NoiseScales {
    double v_delta = 0.0;
    double V_delta = 0.0;
    double J_delta = 1.0;
    double beta_hat_delta = 0.0;

    // V_delta solves P[|omega| > V] = v exactly; beta_hat = beta V / J.
    [[nodiscard]] static NoiseScales make(const TailLaw& law, double v_delta, double J_delta,
                                          double beta);
};

// i.i.d. draws; site i always uses the same counters of the stream, so a
// prefix of a longer field equals the shorter field.
[[nodiscard]] std::vector<double> sample_disorder(const TailLaw& law, std::size_t n_sites,
                                                  std::uint64_t seed);
void fill_disorder(const TailLaw& law, std::uint64_t stream_key, std::span<double> out,
                   std::uint64_t first_site = 0);

[[nodiscard]] double solve_noise_scale(const TailLaw& law, double v_delta);

// gamma/(gamma-p) a^(p-gamma) V^p v for exponent < gamma, and
// gamma/(q-gamma) a^(q-gamma) V^q v for exponent > gamma.
[[nodiscard]] double truncated_moment_asymptotic(const TailLaw& law, double exponent, double a,
                                                 double v_delta);

struct TruncatedMomentEstimate {
    double moment = 0.0;  // Monte Carlo estimate of the truncated moment
    double standard_error = 0.0;
    double asymptotic = 0.0;
    double ratio = 0.0;
    bool big_jump = true;
};

// Big-jump variant samples from the law conditioned on |omega| > aV when that
// event lies in the pure Pareto branches and multiplies by its exact
// probability; otherwise it falls back to plain sampling.
[[nodiscard]] TruncatedMomentEstimate estimate_truncated_moment(const TailLaw& law, double exponent,
                                                                double a, double v_delta,
                                                                std::uint64_t n_samples,
                                                                std::uint64_t seed);

[[nodiscard]] double truncated_moment_ratio(const TailLaw& law, double exponent, double a,
                                            double v_delta, std::uint64_t n_samples,
                                            std::uint64_t seed);

}  // namespace levychaos
