#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace levychaos {

// ============================================================================
// Acceptance thresholds
// ============================================================================

struct AcceptanceTable {
    // 1, 2: exact chaos identities
    double identity_rel_tol = 1e-9;
    // 3: renewal constant
    double doney_rel_tol = 0.10;
    // 4: homogeneous limits
    double ml_Z_rel_tol = 0.03;
    double ml_Zc_rel_tol = 0.05;
    double ml_exp_abs_tol = 1e-12;
    // 5: simplex identity, in standard errors
    double simplex_se_band = 3.0;
    // 6: characteristic functional
    double cf_abs_tol = 0.02;
    // 7: martingale checks, in standard errors, and p-norm spread
    double martingale_se_band = 5.0;
    double lp_spread_max = 2.0;
    // 8, 9: KS ladders
    double ks_noise_band = 0.01;
    double ks_pinning_final = 0.05;
    double ks_polymer_final = 0.07;
    double pnorm_rel_tol = 0.10;
    // 10: truncation bound, in standard errors
    double truncation_se_band = 3.0;
    // 11: relevance dichotomy
    double weak_mean_lo = 0.9;
    double weak_mean_hi = 1.1;
    double strong_median_max = 0.2;
    // 12: truncated moments
    double truncated_moment_rel_tol = 0.05;
    // 13: local limit theorem
    double llt_sup_tol = 0.05;
    double llt_noise = 1e-3;
    // 14: moment-bound shape
    double geometric_r2_min = 0.9;
    double refinement_spread_max = 2.0;
};

inline constexpr AcceptanceTable kAcceptance{};

// ============================================================================
// Samples and summaries
// ============================================================================

struct SampleSet {
    std::vector<double> values;
    std::string model_tag;
    std::string resolution;  // "N=256", "a=0.05", ...
    std::uint64_t seed_first = 0;
    std::uint64_t seed_last = 0;

    // Throws ParameterError on empty or non-finite data.
    void validate() const;
};

struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

[[nodiscard]] MeanEstimate mean_estimate(std::span<const double> x);
[[nodiscard]] double covariance(std::span<const double> x, std::span<const double> y);
// Standard error of the sample covariance via the products' spread.
[[nodiscard]] MeanEstimate covariance_estimate(std::span<const double> x,
                                               std::span<const double> y);
[[nodiscard]] double quantile(std::vector<double> x, double prob);
[[nodiscard]] double median(std::vector<double> x);
// (mean |x|^p)^(1/p)
[[nodiscard]] double p_norm(std::span<const double> x, double p);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
[[nodiscard]] LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// ============================================================================
// Distribution comparisons
// ============================================================================

[[nodiscard]] double ks_distance(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double ks_distance(const SampleSet& a, const SampleSet& b);
// Two-sample band 1.63 sqrt((m + n)/(m n)) at the 99% level.
[[nodiscard]] double ks_band_99(std::size_t m, std::size_t n);

struct MomentEstimate {
    double p = 1.0;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// Percentile bootstrap of (mean |x|^p)^(1/p) at the 95% level.
[[nodiscard]] MomentEstimate bootstrap_moment(std::span<const double> x, double p, std::size_t B,
                                              std::uint64_t seed);
[[nodiscard]] MomentEstimate bootstrap_moment(const SampleSet& s, double p, std::size_t B,
                                              std::uint64_t seed);

[[nodiscard]] std::vector<std::complex<double>> empirical_cf(std::span<const double> x,
                                                             std::span<const double> theta);

// ============================================================================
// Reports
// ============================================================================

struct ConvergenceRow {
    std::string label;
    double resolution = 0.0;
    double ks = 0.0;
    double mean = 0.0;
    double mean_se = 0.0;
    MomentEstimate moment;
    std::size_t n = 0;
};

struct ConvergenceReport {
    std::string name;
    std::vector<ConvergenceRow> rows;
    std::vector<std::pair<std::string, bool>> verdicts;
    nlohmann::json extra = nlohmann::json::object();

    [[nodiscard]] bool passed() const;
    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] std::string to_text() const;
};

}  // namespace levychaos
