// Built with relaxed floating-point flags so the loops vectorize through the
// vector math library. Results stay deterministic for a given binary.
#include "batch_sampling.hpp"

#include <cmath>

#include "levychaos/rng.hpp"

namespace levychaos::detail {

void uniform_batch(std::uint64_t key, std::uint64_t first, std::size_t n, double lo, double width,
                   double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + width * to_open_unit(stream_at(key, first + i));
    }
}

void pareto_batch(std::uint64_t key, std::uint64_t first, std::size_t n, double a, double gamma,
                  double* out) {
    const double inv_gamma = 1.0 / gamma;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = to_open_unit(stream_at(key, first + i));
        out[i] = a * std::exp(-inv_gamma * std::log(u));
    }
}

void annulus_batch(std::uint64_t key, std::uint64_t first, std::size_t n, double a_lo,
                   double a_hi, double gamma, double* out) {
    const double t_hi = std::pow(a_hi, -gamma);
    const double span = std::pow(a_lo, -gamma) - t_hi;
    const double inv_gamma = 1.0 / gamma;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = to_open_unit(stream_at(key, first + i));
        out[i] = std::exp(-inv_gamma * std::log(t_hi + u * span));
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace levychaos::detail
