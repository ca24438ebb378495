#include "levychaos/levy_noise.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "batch_sampling.hpp"
#include "binary_io.hpp"
#include "levychaos/errors.hpp"
#include "levychaos/rng.hpp"

namespace levychaos {

// ============================================================================
// Domain
// ============================================================================

DomainBox DomainBox::unit(std::size_t dim) {
    return DomainBox{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

double DomainBox::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= upper[i] - lower[i];
    return v;
}

void DomainBox::validate() const {
    if (lower.empty() || lower.size() != upper.size()) {
        throw ParameterError("domain box needs matching nonempty bounds");
    }
    for (std::size_t i = 0; i < dim(); ++i) {
        if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
            throw ParameterError("domain box bounds must be finite with lower < upper");
        }
    }
}

// ============================================================================
// Levy measure
// ============================================================================

double compensator_rate(double gamma, double c_plus, double c_minus, double a) {
    return (c_plus - c_minus) * gamma / (gamma - 1.0) * std::pow(a, 1.0 - gamma);
}

double levy_tail_mass(double gamma, double a) { return std::pow(a, -gamma); }

double small_jump_variance(double gamma, double a) {
    return gamma / (2.0 - gamma) * std::pow(a, 2.0 - gamma);
}

namespace {

void check_noise_params(double gamma, double c_plus, double c_minus, double a) {
    if (!(gamma > 1.0 && gamma < 2.0)) throw ParameterError("gamma must lie in (1,2)");
    if (!(c_plus >= 0.0 && c_minus >= 0.0) || std::abs(c_plus + c_minus - 1.0) > 1e-15) {
        throw ParameterError("c_plus and c_minus must be nonnegative and sum to 1");
    }
    if (!(a > 0.0)) throw ParameterError("truncation level a must be positive");
}

std::uint64_t sub_key(std::uint64_t key, std::uint64_t tag) { return mix64(key ^ (tag * kGolden)); }

// Appends count atoms: uniform positions, signed marks from the magnitude batch.
void append_atoms(PointCloud& cloud, std::uint64_t key, std::size_t count,
                  const std::vector<double>& magnitudes) {
    const std::size_t d = cloud.domain.dim();
    const std::size_t base = cloud.size();
    cloud.positions.resize((base + count) * d);
    cloud.marks.resize(base + count);
    std::vector<double> coord(count);
    for (std::size_t k = 0; k < d; ++k) {
        detail::uniform_batch(sub_key(key, 10 + k), 0, count, cloud.domain.lower[k],
                              cloud.domain.upper[k] - cloud.domain.lower[k], coord.data());
        for (std::size_t i = 0; i < count; ++i) cloud.positions[(base + i) * d + k] = coord[i];
    }
    const std::uint64_t sign_key = sub_key(key, 3);
    for (std::size_t i = 0; i < count; ++i) {
        double sign = 1.0;
        if (cloud.c_minus > 0.0) {
            sign = (cloud.c_plus > 0.0 && to_open_unit(stream_at(sign_key, i)) < cloud.c_plus) ? 1.0
                                                                                            : -1.0;
        }
        cloud.marks[base + i] = sign * magnitudes[i];
    }
}

std::size_t poisson_count(std::uint64_t key, double mean) {
    if (mean > 1e9) throw CapacityError("expected atom count " + std::to_string(mean) + " exceeds 1e9");
    CounterRng rng(key);
    std::poisson_distribution<std::uint64_t> dist(mean);
    return static_cast<std::size_t>(dist(rng));
}

}  // namespace

PointCloud sample_cloud(const DomainBox& domain, double gamma, double c_plus, double c_minus,
                        double a, std::uint64_t seed, std::uint64_t replica) {
    domain.validate();
    check_noise_params(gamma, c_plus, c_minus, a);
    PointCloud cloud;
    cloud.domain = domain;
    cloud.gamma = gamma;
    cloud.c_plus = c_plus;
    cloud.c_minus = c_minus;
    cloud.a = a;
    cloud.kappa = compensator_rate(gamma, c_plus, c_minus, a);

    const std::uint64_t key = derive_key(seed, replica, Purpose::cloud);
    const std::size_t count = poisson_count(sub_key(key, 1), domain.volume() * levy_tail_mass(gamma, a));
    std::vector<double> mags(count);
    detail::pareto_batch(sub_key(key, 2), 0, count, a, gamma, mags.data());
    append_atoms(cloud, key, count, mags);
    return cloud;
}

double sample_total_mass(const DomainBox& domain, double gamma, double c_plus, double c_minus, double a,
                         std::uint64_t seed, std::uint64_t replica) {
    domain.validate();
    check_noise_params(gamma, c_plus, c_minus, a);
    const std::uint64_t key = derive_key(seed, replica, Purpose::cloud);
    const double volume = domain.volume();
    const std::size_t count = poisson_count(sub_key(key, 1), volume * levy_tail_mass(gamma, a));
    const std::uint64_t mark_key = sub_key(key, 2), sign_key = sub_key(key, 3);
    constexpr std::size_t kChunk = 4096;
    double buf[kChunk];
    double total = 0.0;
    for (std::size_t first = 0; first < count; first += kChunk) {
        const std::size_t n = std::min(kChunk, count - first);
        detail::pareto_batch(mark_key, first, n, a, gamma, buf);
        for (std::size_t i = 0; i < n; ++i) {
            double sign = 1.0;
            if (c_minus > 0.0) {
                sign = (c_plus > 0.0 && to_open_unit(stream_at(sign_key, first + i)) < c_plus) ? 1.0 : -1.0;
            }
            total += sign * buf[i];
        }
    }
    return total - compensator_rate(gamma, c_plus, c_minus, a) * volume;
}

PointCloud refine_cloud(const PointCloud& cloud, double a_prime, std::uint64_t seed,
                        std::uint64_t replica) {
    if (!(a_prime > 0.0) || a_prime > cloud.a) {
        throw ParameterError("refinement level must satisfy 0 < a' <= a");
    }
    PointCloud out = cloud;
    if (a_prime == cloud.a) return out;
    out.a = a_prime;
    out.kappa = compensator_rate(cloud.gamma, cloud.c_plus, cloud.c_minus, a_prime);
    // Level enters the key so successive refinements use fresh randomness.
    const std::uint64_t key =
        mix64(derive_key(seed, replica, Purpose::refine) ^ std::bit_cast<std::uint64_t>(a_prime));
    const double mass = cloud.domain.volume() *
                        (levy_tail_mass(cloud.gamma, a_prime) - levy_tail_mass(cloud.gamma, cloud.a));
    const std::size_t count = poisson_count(sub_key(key, 1), mass);
    std::vector<double> mags(count);
    detail::annulus_batch(sub_key(key, 2), 0, count, a_prime, cloud.a, cloud.gamma, mags.data());
    append_atoms(out, key, count, mags);
    return out;
}

// ============================================================================
// Pairings and quadrature
// ============================================================================

namespace {

double integrate_dims(const DomainBox& box, const TestFunction& f, std::vector<double>& x,
                      std::size_t k, double rel_tol) {
    using boost::math::quadrature::gauss_kronrod;
    auto inner = [&](double t) {
        x[k] = t;
        if (k + 1 == box.dim()) return f(std::span<const double>(x));
        return integrate_dims(box, f, x, k + 1, rel_tol);
    };
    double err = 0.0;
    const double val = gauss_kronrod<double, 31>::integrate(inner, box.lower[k], box.upper[k], 12,
                                                            rel_tol, &err);
    if (!std::isfinite(val)) throw NumericalError("box quadrature produced a non-finite value");
    return val;
}

}  // namespace

double box_integral(const DomainBox& domain, const TestFunction& f, double rel_tol) {
    domain.validate();
    if (domain.dim() > 3) throw CapacityError("box quadrature supports D <= 3");
    std::vector<double> x(domain.dim());
    return integrate_dims(domain, f, x, 0, rel_tol);
}

double pair_with_test_function(const PointCloud& cloud, const TestFunction& f,
                               double integral_of_f) {
    double s = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) s += cloud.marks[i] * f(cloud.position(i));
    return s - cloud.kappa * integral_of_f;
}

double pair_with_test_function(const PointCloud& cloud, const TestFunction& f) {
    const double integral = cloud.kappa == 0.0 ? 0.0 : box_integral(cloud.domain, f);
    return pair_with_test_function(cloud, f, integral);
}

// ============================================================================
// Characteristic functional
// ============================================================================

StableExponentConstants stable_exponent_constants(double gamma) {
    if (!(gamma > 1.0 && gamma < 2.0)) throw ParameterError("gamma must lie in (1,2)");
    using namespace boost::math::quadrature;
    tanh_sinh<double> ts;

    // [0, 1]: small-argument forms avoid cancellation.
    auto cos_near = [gamma](double w) {
        if (w <= 0.0) return 0.0;
        const double r = std::sin(0.5 * w) / w;
        return -2.0 * r * r * gamma * std::pow(w, 1.0 - gamma);
    };
    auto sin_near = [gamma](double w) {
        if (w <= 0.0) return 0.0;
        double d = 0.0;  // (sin w - w) / w^3
        if (w < 0.1) {
            const double w2 = w * w;
            d = -(1.0 - w2 / 20.0 * (1.0 - w2 / 42.0 * (1.0 - w2 / 72.0))) / 6.0;
        } else {
            d = (std::sin(w) - w) / (w * w * w);
        }
        return d * gamma * std::pow(w, 2.0 - gamma);
    };
    const double c0 = ts.integrate(cos_near, 0.0, 1.0);
    const double s0 = ts.integrate(sin_near, 0.0, 1.0);

    // [1, inf): oscillatory part through w = 1 + s.
    auto g = [gamma](double s) { return gamma * std::pow(1.0 + s, -1.0 - gamma); };
    ooura_fourier_cos<double> fc;
    ooura_fourier_sin<double> fs;
    const double Ic = fc.integrate(g, 1.0).first;  // int cos(s) g(s) ds
    const double Is = fs.integrate(g, 1.0).first;  // int sin(s) g(s) ds
    const double cos_tail = std::cos(1.0) * Ic - std::sin(1.0) * Is;
    const double sin_tail = std::sin(1.0) * Ic + std::cos(1.0) * Is;

    StableExponentConstants c;
    c.cos_part = c0 + cos_tail - 1.0;                   // int_1^inf gamma w^(-1-gamma) = 1
    c.sin_part = s0 + sin_tail - gamma / (gamma - 1.0);  // int_1^inf gamma w^(-gamma)
    if (!std::isfinite(c.cos_part) || !std::isfinite(c.sin_part)) {
        throw NumericalError("stable exponent quadrature failed");
    }
    return c;
}

std::complex<double> levy_exponent(double u, double gamma, double c_plus, double c_minus) {
    if (u == 0.0) return {0.0, 0.0};
    // Constants depend on gamma only; keep the last one per thread.
    thread_local double cached_gamma = 0.0;
    thread_local StableExponentConstants cached{};
    if (gamma != cached_gamma) {
        cached = stable_exponent_constants(gamma);
        cached_gamma = gamma;
    }
    const double m = std::pow(std::abs(u), gamma);
    const double sgn = u > 0.0 ? 1.0 : -1.0;
    return {m * cached.cos_part, m * sgn * (c_plus - c_minus) * cached.sin_part};
}

std::complex<double> characteristic_functional(const TestFunction& f, double theta,
                                               const DomainBox& domain, double gamma,
                                               double c_plus, double c_minus) {
    check_noise_params(gamma, c_plus, c_minus, 1.0);
    if (theta == 0.0) return {1.0, 0.0};
    const auto c = stable_exponent_constants(gamma);
    // The exponent scales as |theta f|^gamma, so only two spatial integrals remain.
    const double re = box_integral(domain, [&](std::span<const double> x) {
        return std::pow(std::abs(theta * f(x)), gamma);
    });
    const double im = box_integral(domain, [&](std::span<const double> x) {
        const double u = theta * f(x);
        return (u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0)) * std::pow(std::abs(u), gamma);
    });
    const std::complex<double> exponent{c.cos_part * re, (c_plus - c_minus) * c.sin_part * im};
    return std::exp(exponent);
}

// ============================================================================
// Serialization
// ============================================================================

using detail::get_le;
using detail::put_le;

void write_cloud_binary(const PointCloud& cloud, std::ostream& os) {
    const std::size_t d = cloud.domain.dim();
    put_le<std::uint64_t>(os, d);
    put_le<double>(os, cloud.gamma);
    put_le<double>(os, cloud.c_plus);
    put_le<double>(os, cloud.a);
    put_le<std::uint64_t>(os, cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) put_le<double>(os, cloud.positions[i * d + k]);
        put_le<double>(os, cloud.marks[i]);
    }
}

PointCloud read_cloud_binary(std::istream& is, const DomainBox& domain) {
    PointCloud cloud;
    const auto d = get_le<std::uint64_t>(is, "truncated cloud record");
    if (d != domain.dim()) throw ParameterError("cloud dimension does not match the domain");
    cloud.domain = domain;
    cloud.gamma = get_le<double>(is, "truncated cloud record");
    cloud.c_plus = get_le<double>(is, "truncated cloud record");
    cloud.c_minus = 1.0 - cloud.c_plus;
    cloud.a = get_le<double>(is, "truncated cloud record");
    check_noise_params(cloud.gamma, cloud.c_plus, cloud.c_minus, cloud.a);
    cloud.kappa = compensator_rate(cloud.gamma, cloud.c_plus, cloud.c_minus, cloud.a);
    const auto count = get_le<std::uint64_t>(is, "truncated cloud record");
    cloud.positions.resize(count * d);
    cloud.marks.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t k = 0; k < d; ++k) cloud.positions[i * d + k] = get_le<double>(is, "truncated cloud record");
        cloud.marks[i] = get_le<double>(is, "truncated cloud record");
    }
    return cloud;
}

void write_cloud_csv(const PointCloud& cloud, std::ostream& os) {
    const std::size_t d = cloud.domain.dim();
    for (std::size_t k = 0; k < d; ++k) os << 'x' << k << ',';
    os << "z\r\n";
    os.precision(17);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t k = 0; k < d; ++k) os << cloud.positions[i * d + k] << ',';
        os << cloud.marks[i] << "\r\n";
    }
}

}  // namespace levychaos
