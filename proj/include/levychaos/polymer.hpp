#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "levychaos/chaos.hpp"
#include "levychaos/heavy_tail.hpp"
#include "levychaos/levy_noise.hpp"
#include "levychaos/rng.hpp"

namespace levychaos {

// ============================================================================
// Walks and densities
// ============================================================================

// Increments round(Y), Y symmetric alpha-stable with E exp(i t Y) = exp(-|t|^alpha).
// In d >= 2 (experimental) Y is isotropic and each coordinate is rounded.
struct StableWalk {
    double alpha = 1.5;
    std::size_t d = 1;
    bool experimental = false;

    [[nodiscard]] double a_n(double n) const;  // n^(1/alpha)
    void validate() const;
};

// One draw of Y (d = 1), Chambers-Mallows-Stuck.
[[nodiscard]] double stable_variate(double alpha, CounterRng& rng);

// Positions S_1..S_N, row-major N x d.
[[nodiscard]] std::vector<long long> sample_walk(const StableWalk& walk, std::size_t N,
                                                 std::uint64_t seed, std::uint64_t replica = 0);

// g_1(x) = (1/pi) int_0^inf cos(x t) exp(-t^alpha) dt for d = 1; radial
// Hankel integral in d >= 2 with x the radius.
[[nodiscard]] double stable_density(double alpha, double x, std::size_t d = 1);

class StableDensity {
public:
    explicit StableDensity(double alpha, std::size_t d = 1);
    [[nodiscard]] double operator()(double x) const;
    // g_t(x) = t^(-d/alpha) g_1(x t^(-1/alpha))
    [[nodiscard]] double at(double t, double x) const;
    [[nodiscard]] double alpha() const noexcept { return alpha_; }

private:
    double alpha_;
    std::size_t d_;
};

// Single-step law of round(scale * Y): entries k = -W..W. Computed from the
// exact lattice characteristic function.
[[nodiscard]] std::vector<double> lattice_step_pmf(double alpha, double scale, long long W);

struct WalkPmf {
    long long window = 0;    // support -window..window
    std::vector<double> p;   // P(S_n = x), index x + window
    double defect = 0.0;     // mass outside the window
    [[nodiscard]] double at(long long x) const;
};

// Law of S_n on |x| <= window. Throws CapacityError (with a suggested window)
// when the mass outside exceeds the budget.
[[nodiscard]] WalkPmf walk_pmf(const StableWalk& walk, std::size_t n, long long window,
                               double defect_budget = 1e-8);

struct LltReport {
    std::size_t n = 0;
    double a_n = 0.0;
    double sup_error = 0.0;  // sup_x |a_n P(S_n = x) - g_1(x / a_n)|
    long long argmax = 0;
};

// Sup over |x| <= radius * a_n; outside both terms are below 1e-3 for radius 8.
[[nodiscard]] LltReport llt_check(const StableWalk& walk, std::size_t n, double radius = 8.0);

// ============================================================================
// Disordered polymer
// ============================================================================

struct PolymerParams {
    std::size_t N = 0;
    double beta = 0.0;
    double A = 4.0;
    double beta_hat = 0.0;
    TailLaw law;

    // Hard window L = ceil(2 A a_N).
    [[nodiscard]] long long window(const StableWalk& walk) const;
    // V_N solves P[|omega| > V] = 1/(N a_N^d); beta = beta_hat a_N^d / V_N.
    [[nodiscard]] static PolymerParams from_continuum(const StableWalk& walk, std::size_t N,
                                                      double beta_hat, double A, const TailLaw& law);
    [[nodiscard]] static double noise_scale(const StableWalk& walk, std::size_t N, const TailLaw& law);
    void validate(const StableWalk& walk) const;
};

// Throws GateError unless gamma < 1 + alpha/d.
void check_polymer_gate(double alpha, std::size_t d, double gamma, bool override_gate = false);

// omega_{n,x}, n = 1..N, x = -L..L. Values depend only on (key, n, x), so a
// narrower window over the same key sees the same environment.
struct DisorderField {
    std::size_t N = 0;
    long long L = 0;
    std::vector<double> values;  // row n - 1, column x + L

    [[nodiscard]] double at(std::size_t n, long long x) const {
        return values[(n - 1) * static_cast<std::size_t>(2 * L + 1) + static_cast<std::size_t>(x + L)];
    }
    [[nodiscard]] DisorderField restrict_to(long long L_inner) const;
};

[[nodiscard]] DisorderField sample_disorder_field(const TailLaw& law, std::size_t N, long long L,
                                                  std::uint64_t seed, std::uint64_t replica = 0);

// Binary grid: header {N, L, gamma, seed} then row-major 64-bit reals, little-endian.
void write_disorder_field(const DisorderField& field, double gamma, std::uint64_t seed,
                          std::ostream& os);
[[nodiscard]] DisorderField read_disorder_field(std::istream& is);

enum class WindowMode { hard_window, free_window };

struct PolymerZ {
    double Z = 0.0;
    double homogeneous_mass = 1.0;  // E_omega[Z] = P[walk stays in the window]
    double defect = 0.0;            // 1 - homogeneous_mass
    long long window = 0;
};

// Transfer-matrix DP over a fixed window, planned once and reused across
// disorder replicas.
class PolymerDP {
public:
    PolymerDP(const StableWalk& walk, std::size_t N, long long L);
    ~PolymerDP();
    PolymerDP(const PolymerDP&) = delete;
    PolymerDP& operator=(const PolymerDP&) = delete;
    PolymerDP(PolymerDP&&) noexcept;
    PolymerDP& operator=(PolymerDP&&) noexcept;

    // The field may be wider than the window; only |x| <= L is read.
    [[nodiscard]] double Z(const DisorderField& field, double beta) const;
    [[nodiscard]] double homogeneous_mass() const noexcept { return mass_; }
    [[nodiscard]] long long window() const noexcept { return L_; }
    [[nodiscard]] std::size_t N() const noexcept { return N_; }
    [[nodiscard]] const std::vector<double>& step_pmf() const noexcept { return pmf_; }

private:
    struct Plan;
    std::unique_ptr<Plan> plan_;
    std::size_t N_;
    long long L_;
    std::vector<double> pmf_;  // k = -2L..2L
    double mass_ = 1.0;
};

// Smallest window (doubling from ceil(2 A a_N)) whose escape mass is at most the budget.
[[nodiscard]] long long free_window_size(const StableWalk& walk, std::size_t N, double A,
                                         double defect_budget = 1e-3);

[[nodiscard]] PolymerZ disordered_polymer_Z(const StableWalk& walk, const PolymerParams& params,
                                            const DisorderField& field,
                                            WindowMode mode = WindowMode::hard_window,
                                            double defect_budget = 1e-3);

// Sum over all windowed paths, depth first. Feasible for (2L+1)^N up to ~1e10.
[[nodiscard]] double enumerate_polymer_Z(const StableWalk& walk, std::size_t N, long long L,
                                         const DisorderField& field, double beta);

// MC estimate of P[max_n |S_n| >= threshold] over N steps.
struct ProbabilityEstimate {
    double p = 0.0;
    double standard_error = 0.0;
};
[[nodiscard]] ProbabilityEstimate excursion_probability(const StableWalk& walk, std::size_t N,
                                                        double threshold, std::size_t samples,
                                                        std::uint64_t seed);

// ============================================================================
// Correlation kernels
// ============================================================================

// Sites (n / N, x / a_N), n = 1..N, |x| <= L, v = 1/(N a_N), J = a_N.
[[nodiscard]] Lattice polymer_lattice(const StableWalk& walk, std::size_t N, long long L,
                                      double V_N);

// a_N P(S_{n'-n} = x' - x) per step, terminal 1 (free); with a hard window the
// killed transitions and the survival of the remaining steps.
[[nodiscard]] std::shared_ptr<ProductKernel> polymer_kernel_discrete(const StableWalk& walk,
                                                                     std::size_t N, long long L,
                                                                     WindowMode mode);

// prod g_{t_j - t_{j-1}}(x_j - x_{j-1}), terminal 1.
[[nodiscard]] std::shared_ptr<ProductKernel> polymer_kernel_continuum(const StableWalk& walk);

// ============================================================================
// Continuum proxy
// ============================================================================

// Truncated chaos of the hard-window continuum polymer on (0,1) x (-2A, 2A),
// all orders: the noise is projected onto an Mt x Mx mesh and propagated by
// the cell law of g_{1/Mt}, killed outside the strip.
class ContinuumPolymerProxy {
public:
    ContinuumPolymerProxy(double alpha, double beta_hat, double gamma, double c_plus,
                          double c_minus, double a, double A, std::size_t Mt = 2048,
                          std::size_t Mx = 4097);
    ~ContinuumPolymerProxy();
    ContinuumPolymerProxy(const ContinuumPolymerProxy&) = delete;
    ContinuumPolymerProxy& operator=(const ContinuumPolymerProxy&) = delete;

    [[nodiscard]] double evaluate(const PointCloud& cloud) const;
    [[nodiscard]] double sample(std::uint64_t seed, std::uint64_t replica) const;
    [[nodiscard]] double homogeneous_mass() const noexcept { return mass_; }
    [[nodiscard]] DomainBox domain() const;

private:
    struct Plan;
    std::unique_ptr<Plan> plan_;
    double alpha_, beta_hat_, gamma_, c_plus_, c_minus_, a_, A_;
    std::size_t Mt_, Mx_;
    double dx_;
    double mass_ = 1.0;
};

}  // namespace levychaos
