#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace levychaos {

struct DomainBox {
    std::vector<double> lower;
    std::vector<double> upper;

    [[nodiscard]] static DomainBox unit(std::size_t dim);
    [[nodiscard]] std::size_t dim() const noexcept { return lower.size(); }
    [[nodiscard]] double volume() const;
    void validate() const;
};

using TestFunction = std::function<double(std::span<const double>)>;

// Realization of the truncated noise: atoms with |z| > a minus kappa(a) dx.
struct PointCloud {
    DomainBox domain;
    double gamma = 1.5;
    double c_plus = 1.0;
    double c_minus = 0.0;
    double a = 1.0;
    double kappa = 0.0;
    std::vector<double> positions;  // size() * dim, row-major
    std::vector<double> marks;

    [[nodiscard]] std::size_t size() const noexcept { return marks.size(); }
    [[nodiscard]] std::span<const double> position(std::size_t i) const {
        const std::size_t d = domain.dim();
        return {positions.data() + i * d, d};
    }
};

// (c_plus - c_minus) gamma/(gamma-1) a^(1-gamma)
[[nodiscard]] double compensator_rate(double gamma, double c_plus, double c_minus, double a);
// a^(-gamma): Levy measure of {|z| > a}
[[nodiscard]] double levy_tail_mass(double gamma, double a);
// gamma/(2-gamma) a^(2-gamma): second moment of the jumps below a
[[nodiscard]] double small_jump_variance(double gamma, double a);

[[nodiscard]] PointCloud sample_cloud(const DomainBox& domain, double gamma, double c_plus,
                                      double c_minus, double a, std::uint64_t seed,
                                      std::uint64_t replica = 0);

// zeta^(a)(domain): the pairing of sample_cloud(...) with f = 1, without
// storing positions. Same streams, so equal to that pairing up to summation order.
[[nodiscard]] double sample_total_mass(const DomainBox& domain, double gamma, double c_plus,
                                       double c_minus, double a, std::uint64_t seed,
                                       std::uint64_t replica = 0);

// Adds independent annulus atoms a' < |z| <= a to the given cloud.
[[nodiscard]] PointCloud refine_cloud(const PointCloud& cloud, double a_prime, std::uint64_t seed,
                                      std::uint64_t replica = 0);

// Sum of marks times f at the atoms minus kappa times the integral of f.
[[nodiscard]] double pair_with_test_function(const PointCloud& cloud, const TestFunction& f);
[[nodiscard]] double pair_with_test_function(const PointCloud& cloud, const TestFunction& f,
                                             double integral_of_f);

// Adaptive integral of f over the box (nested Gauss-Kronrod, D <= 3).
[[nodiscard]] double box_integral(const DomainBox& domain, const TestFunction& f,
                                  double rel_tol = 1e-10);

// Constants C_c = int_0^inf (cos w - 1) gamma w^(-1-gamma) dw and
// C_s = int_0^inf (sin w - w) gamma w^(-1-gamma) dw, by quadrature.
struct StableExponentConstants {
    double cos_part = 0.0;
    double sin_part = 0.0;
};
[[nodiscard]] StableExponentConstants stable_exponent_constants(double gamma);

// int_R (e^{iuz} - 1 - iuz) lambda(dz) for a single real u.
[[nodiscard]] std::complex<double> levy_exponent(double u, double gamma, double c_plus,
                                                 double c_minus);

[[nodiscard]] std::complex<double> characteristic_functional(const TestFunction& f, double theta,
                                                             const DomainBox& domain, double gamma,
                                                             double c_plus, double c_minus);

// Flat little-endian record: D, gamma, c_plus, a, count, then count*(D+1) reals.
void write_cloud_binary(const PointCloud& cloud, std::ostream& os);
[[nodiscard]] PointCloud read_cloud_binary(std::istream& is, const DomainBox& domain);
void write_cloud_csv(const PointCloud& cloud, std::ostream& os);

}  // namespace levychaos
