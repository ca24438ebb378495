#include "levychaos/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "levychaos/errors.hpp"
#include "levychaos/rng.hpp"

namespace levychaos {

void SampleSet::validate() const {
    if (values.empty()) throw ParameterError("sample set '" + model_tag + "' is empty");
    for (double v : values) {
        if (!std::isfinite(v)) throw ParameterError("sample set '" + model_tag + "' has non-finite values");
    }
}

MeanEstimate mean_estimate(std::span<const double> x) {
    MeanEstimate e;
    e.n = x.size();
    if (x.empty()) return e;
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (x[i] - mean);
    }
    e.mean = mean;
    if (x.size() > 1) {
        e.sd = std::sqrt(m2 / static_cast<double>(x.size() - 1));
        e.standard_error = e.sd / std::sqrt(static_cast<double>(x.size()));
    }
    return e;
}

MeanEstimate covariance_estimate(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("covariance needs paired samples");
    const double mx = mean_estimate(x).mean;
    const double my = mean_estimate(y).mean;
    std::vector<double> prod(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx) * (y[i] - my);
    MeanEstimate e = mean_estimate(prod);
    const double n = static_cast<double>(x.size());
    e.mean *= n / (n - 1.0);
    return e;
}

double covariance(std::span<const double> x, std::span<const double> y) {
    return covariance_estimate(x, y).mean;
}

double quantile(std::vector<double> x, double prob) {
    if (x.empty()) throw ParameterError("quantile of empty sample");
    std::sort(x.begin(), x.end());
    const double pos = prob * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * x[lo] + w * x[hi];
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double p_norm(std::span<const double> x, double p) {
    if (x.empty()) throw ParameterError("p-norm of empty sample");
    double s = 0.0;
    for (double v : x) s += std::pow(std::abs(v), p);
    return std::pow(s / static_cast<double>(x.size()), 1.0 / p);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("linear fit needs >= 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ParameterError("ks_distance needs two nonempty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double m = static_cast<double>(x.size());
    const double n = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / m - static_cast<double>(j) / n));
    }
    // Once one sample is exhausted the gap only shrinks toward zero.
    return d;
}

double ks_distance(const SampleSet& a, const SampleSet& b) {
    a.validate();
    b.validate();
    return ks_distance(a.values, b.values);
}

double ks_band_99(std::size_t m, std::size_t n) {
    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    return 1.63 * std::sqrt((dm + dn) / (dm * dn));
}

MomentEstimate bootstrap_moment(std::span<const double> x, double p, std::size_t B,
                                std::uint64_t seed) {
    if (x.empty()) throw ParameterError("bootstrap of empty sample");
    if (!(p > 0.0 && p <= 2.0)) throw ParameterError("bootstrap moment order must lie in (0,2]");
    if (B < 200) throw ParameterError("bootstrap needs at least 200 resamples");
    std::vector<double> powered(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) powered[i] = std::pow(std::abs(x[i]), p);
    const double n = static_cast<double>(x.size());

    MomentEstimate e;
    e.p = p;
    e.estimate = std::pow(std::accumulate(powered.begin(), powered.end(), 0.0) / n, 1.0 / p);

    std::vector<double> stats(B);
    for (std::size_t b = 0; b < B; ++b) {
        CounterRng rng(derive_key(seed, b, Purpose::bootstrap));
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto k = static_cast<std::size_t>(rng.uniform() * n);
            s += powered[std::min(k, x.size() - 1)];
        }
        stats[b] = std::pow(s / n, 1.0 / p);
    }
    e.lower = std::min(quantile(stats, 0.025), e.estimate);
    e.upper = std::max(quantile(stats, 0.975), e.estimate);
    return e;
}

MomentEstimate bootstrap_moment(const SampleSet& s, double p, std::size_t B, std::uint64_t seed) {
    s.validate();
    return bootstrap_moment(s.values, p, B, seed);
}

std::vector<std::complex<double>> empirical_cf(std::span<const double> x,
                                               std::span<const double> theta) {
    if (x.empty()) throw ParameterError("empirical_cf of empty sample");
    std::vector<std::complex<double>> out(theta.size());
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (double v : x) {
            re += std::cos(theta[k] * v);
            im += std::sin(theta[k] * v);
        }
        out[k] = {re / n, im / n};
    }
    return out;
}

bool ConvergenceReport::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.second; });
}

nlohmann::json ConvergenceReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"label", r.label},
                             {"resolution", r.resolution},
                             {"ks", r.ks},
                             {"mean", r.mean},
                             {"mean_se", r.mean_se},
                             {"p", r.moment.p},
                             {"p_norm", r.moment.estimate},
                             {"p_norm_lo", r.moment.lower},
                             {"p_norm_hi", r.moment.upper},
                             {"n", r.n}});
    }
    j["verdicts"] = nlohmann::json::object();
    for (const auto& [k, v] : verdicts) j["verdicts"][k] = v;
    j["passed"] = passed();
    if (!extra.empty()) j["extra"] = extra;
    return j;
}

std::string ConvergenceReport::to_text() const {
    std::ostringstream os;
    os << name << '\n';
    for (const auto& r : rows) {
        os << "  " << r.label << "  KS=" << r.ks << "  mean=" << r.mean << " +- " << r.mean_se
           << "  |.|_" << r.moment.p << "=" << r.moment.estimate << " [" << r.moment.lower << ", "
           << r.moment.upper << "]  n=" << r.n << '\n';
    }
    for (const auto& [k, v] : verdicts) os << "  " << (v ? "ok   " : "FAIL ") << k << '\n';
    return os.str();
}

}  // namespace levychaos
