#pragma once

#include <cstddef>
#include <cstdint>

namespace levychaos::detail {

// out[i] = lo + width * U_i with U_i the (first + i)-th draw of the stream.
void uniform_batch(std::uint64_t key, std::uint64_t first, std::size_t n, double lo, double width,
                   double* out);

// out[i] = a * U_i^(-1/gamma): Pareto marks above a.
void pareto_batch(std::uint64_t key, std::uint64_t first, std::size_t n, double a, double gamma,
                  double* out);

// Marks with a_lo < |z| <= a_hi: (a_hi^-g + U (a_lo^-g - a_hi^-g))^(-1/g).
void annulus_batch(std::uint64_t key, std::uint64_t first, std::size_t n, double a_lo,
                   double a_hi, double gamma, double* out);

// sum a[i] b[i], reassociated freely.
[[nodiscard]] double dot(const double* a, const double* b, std::size_t n);

}  // namespace levychaos::detail
