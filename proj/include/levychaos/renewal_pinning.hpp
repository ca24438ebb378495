#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "levychaos/chaos.hpp"
#include "levychaos/levy_noise.hpp"

namespace levychaos {

// ============================================================================
// Renewal kernel
// ============================================================================

// K(n) = c0 n^-(1+alpha), c0 = 1/zeta(1+alpha). Index 0 of K is unused (0).
struct RenewalKernel {
    double alpha = 0.5;
    double c0 = 0.0;
    std::size_t N_max = 0;
    std::vector<double> K;     // 0..N_max
    std::vector<double> Kbar;  // P[tau_1 > n], 0..N_max, exact infinite tail
    std::vector<double> u;     // renewal mass, 0..N_max

    // Doney limit alpha sin(pi alpha) / pi of u(N) c0 N^(1-alpha).
    [[nodiscard]] double renewal_constant() const;
};

[[nodiscard]] RenewalKernel make_kernel(double alpha, std::size_t N_max);

// ============================================================================
// Homogeneous model
// ============================================================================

struct HomogeneousZ {
    double Z_free = 1.0;
    std::vector<double> Zc;     // constrained, 0..N
    std::vector<double> Zfree;  // free, 0..N
};

[[nodiscard]] HomogeneousZ homogeneous_Z(const RenewalKernel& kernel, double h, std::size_t N);

// E_a(z) = sum_k z^k Gamma(a)^k / Gamma(a k + 1), alpha in (0, 1].
[[nodiscard]] double mittag_leffler(double alpha, double z);
[[nodiscard]] double ml_derivative(double alpha, double z);

// Standard two-parameter function for beta in {1, alpha}.
[[nodiscard]] double mittag_leffler_standard(double alpha, double beta, double x);

struct ContinuumPinning {
    double Z = 1.0;   // E_a(h t^a)
    double Zc = 0.0;  // a t^(a-1) E'_a(h t^a)
};

[[nodiscard]] ContinuumPinning continuum_pinning(double alpha, double h_hat, double t);

// Chebyshev tables of Z_t and Zc_t in s = t^alpha, for repeated evaluation.
class PinningTable {
public:
    PinningTable(double alpha, double h_hat);
    [[nodiscard]] double Z(double t) const;
    [[nodiscard]] double Zc(double t) const;
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double h_hat() const noexcept { return h_hat_; }

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    double alpha_;
    double h_hat_;
};

// ============================================================================
// Correlation functions
// ============================================================================

// Z_1^-1 prod Zc(t_j - t_{j-1}) Z(1 - t_k); zero on ties.
[[nodiscard]] double pinning_correlation(double alpha, double h_hat, std::span<const double> times);

[[nodiscard]] std::shared_ptr<ProductKernel> pinning_product_kernel(double alpha, double h_hat);

// u(N)^-k P_{N,h}[indices in tau].
[[nodiscard]] double discrete_pinning_correlation(const RenewalKernel& kernel, double h, std::size_t N,
                                                  std::span<const std::size_t> indices);

// Same kernel on points t = n / N, n = 1..N.
[[nodiscard]] std::shared_ptr<ProductKernel> discrete_pinning_product_kernel(
    const RenewalKernel& kernel, double h, std::size_t N);

// Sites n / N, v = 1/N, V = V_N.
[[nodiscard]] Lattice pinning_lattice(std::size_t N, double V_N);

// ============================================================================
// Disordered model
// ============================================================================

struct PinningParams {
    std::size_t N = 0;
    double h = 0.0;
    double beta = 0.0;
    double h_hat = 0.0;
    double beta_hat = 0.0;

    // h = h_hat / (N u(N)), beta = beta_hat / (u(N) V_N).
    [[nodiscard]] static PinningParams from_continuum(const RenewalKernel& kernel, std::size_t N,
                                                      double h_hat, double beta_hat, double V_N);
    void validate(const RenewalKernel& kernel) const;
};

// Z^{omega,beta}_{N,h} / Z_{N,h}, free endpoint.
[[nodiscard]] double disordered_pinning_Z(const RenewalKernel& kernel, const PinningParams& params,
                                          std::span<const double> disorder);

// Forward table Zc^omega(0..N) and the free total, for the Gibbs sampler.
struct DisorderedPinningTable {
    std::vector<double> Zc;
    double Z_free = 0.0;
};

[[nodiscard]] DisorderedPinningTable disordered_pinning_table(const RenewalKernel& kernel,
                                                              const PinningParams& params,
                                                              std::span<const double> disorder);

// Renewal points in [1, N], increasing, drawn backwards from the table.
[[nodiscard]] std::vector<std::size_t> sample_pinning_gibbs(const RenewalKernel& kernel,
                                                            const PinningParams& params,
                                                            std::span<const double> disorder,
                                                            std::uint64_t seed,
                                                            std::uint64_t replica = 0);
[[nodiscard]] std::vector<std::size_t> sample_pinning_gibbs(const RenewalKernel& kernel,
                                                            const PinningParams& params,
                                                            const DisorderedPinningTable& table,
                                                            std::span<const double> disorder,
                                                            std::uint64_t seed,
                                                            std::uint64_t replica = 0);

// |sites| / (N u(N))
[[nodiscard]] double contact_fraction(const std::vector<std::size_t>& sites,
                                      const RenewalKernel& kernel, std::size_t N);

// Throws GateError when 1 - alpha >= 1/gamma unless overridden.
void check_pinning_gate(double alpha, double gamma, bool override_gate = false);

// ============================================================================
// Continuum chaos for the pinning kernels
// ============================================================================

// Full truncated chaos of the pinning kernels over a cloud, all orders.
// The compensator is resummed into h_hat - beta_hat kappa(a); optional
// Gaussian cells stand in for the jumps below a (variance sigma^2(a) per
// unit length), evaluated on distinct cells.
class ContinuumPinningProxy {
public:
    ContinuumPinningProxy(double alpha, double h_hat, double beta_hat, double gamma, double c_plus,
                          double c_minus, double a, std::size_t gaussian_cells = 0);

    // normals: one standard normal per cell (ignored when there are no cells).
    [[nodiscard]] double evaluate(const PointCloud& cloud, std::span<const double> normals = {}) const;
    // Draws the cloud and the normals from the replica's streams.
    [[nodiscard]] double sample(std::uint64_t seed, std::uint64_t replica) const;

    [[nodiscard]] double shifted_h_hat() const noexcept { return shifted_.h_hat(); }
    [[nodiscard]] double kappa() const noexcept { return kappa_; }
    [[nodiscard]] double cell_sd() const noexcept { return cell_sd_; }

private:
    double alpha_, h_hat_, beta_hat_, gamma_, c_plus_, c_minus_, a_;
    double kappa_;
    double cell_sd_ = 0.0;
    std::size_t cells_;
    PinningTable shifted_;
    double Z1_ = 1.0;
    double Z1_shifted_ = 1.0;
    std::vector<double> cell_times_;
    std::vector<double> cell_step_;      // Zc'(j h), j = 0..cells-1 (j = 0 unused)
    std::vector<double> cell_origin_;    // Zc'(t_c)
    std::vector<double> cell_terminal_;  // Z'(1 - t_c)
};

// Per-order truncated chaos X_0..X_M of the h_hat = 0 kernels
// prod (t_j - t_{j-1})^(alpha-1) over a 1-d cloud on (0,1): atoms exactly,
// compensator segments by the gamma-simplex identity.
[[nodiscard]] ChaosResult power_kernel_chaos(double alpha, const PointCloud& cloud, double beta_hat,
                                             std::size_t M);

}  // namespace levychaos
