#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "levychaos/heavy_tail.hpp"
#include "levychaos/levy_noise.hpp"
#include "levychaos/stats.hpp"

namespace levychaos {

// ============================================================================
// Lattices and kernels
// ============================================================================

struct Lattice {
    std::size_t dim = 1;
    std::vector<double> points;  // size() * dim, row-major
    double v_delta = 1.0;        // cell volume
    double V_delta = 1.0;        // noise scale
    double J_delta = 1.0;        // correlation normalizer
    std::size_t time_axis = 0;

    [[nodiscard]] std::size_t size() const noexcept { return dim == 0 ? 0 : points.size() / dim; }
    [[nodiscard]] std::span<const double> point(std::size_t i) const {
        return {points.data() + i * dim, dim};
    }

    // Cell centers of a uniform mesh over the box.
    [[nodiscard]] static Lattice cell_centers(const DomainBox& box,
                                              const std::vector<std::size_t>& cells_per_axis,
                                              double V_delta = 1.0, double J_delta = 1.0);
};

using StepWeight = std::function<double(std::span<const double> from, std::span<const double> to)>;
using TerminalWeight = std::function<double(std::span<const double> point)>;
// Flattened k * dim coordinates.
using KernelEvaluator = std::function<double(std::span<const double> points)>;

// psi(x_1..x_k) = normalizer^-1 prod step(x_{j-1} -> x_j) terminal(x_k) on the
// time-ordered sector, x_0 = origin; symmetric extension elsewhere, zero on ties.
struct ProductKernel {
    StepWeight step;
    TerminalWeight terminal;
    double normalizer = 1.0;
    std::size_t dim = 1;
    std::size_t time_axis = 0;
    std::vector<double> origin;

    [[nodiscard]] double evaluate(std::span<const double> points) const;
    [[nodiscard]] double psi0() const;
};

enum class KernelForm { generic, markov_product };

struct SymmetricKernelSpec {
    std::size_t order = 0;
    KernelEvaluator evaluator;
    KernelForm form = KernelForm::generic;
    std::shared_ptr<const ProductKernel> product;  // set for markov_product

    [[nodiscard]] double evaluate(std::span<const double> points) const { return evaluator(points); }
};

// Orders 0..M of a product family.
[[nodiscard]] std::vector<SymmetricKernelSpec> product_kernel_family(
    std::shared_ptr<const ProductKernel> kernel, std::size_t M);

// ============================================================================
// Chaos evaluation
// ============================================================================

struct ChaosResult {
    std::vector<double> per_order;  // beta_hat^k / k! weighted, k = 0..M
    double total = 0.0;
    std::size_t M = 0;

    [[nodiscard]] nlohmann::json to_json(const nlohmann::json& metadata = nlohmann::json::object()) const;
    // "M,total,X_0,...,X_M" with 17 significant digits.
    [[nodiscard]] std::string csv_row() const;
};

// Sequential DP over sites sorted by time. Pair weights are cached once and
// reused across disorder replicas.
class MarkovChaosEngine {
public:
    MarkovChaosEngine(const ProductKernel& kernel, const Lattice& lattice);

    // weights[i] = omega_i / V for lattice site i (lattice order).
    [[nodiscard]] ChaosResult evaluate(std::span<const double> weights, double beta_hat,
                                       std::size_t M) const;
    // All orders at once: total of the full expansion.
    [[nodiscard]] double evaluate_total(std::span<const double> weights, double beta_hat) const;
    // Same recursion on |psi|^q with unit weights: sum over ordered chains of |psi|^q.
    [[nodiscard]] std::vector<double> ordered_q_sums(double q, std::size_t M) const;

    [[nodiscard]] double psi0() const noexcept { return psi0_; }
    [[nodiscard]] std::size_t size() const noexcept { return order_.size(); }

private:
    std::vector<std::size_t> order_;       // sorted position -> lattice index
    std::vector<std::size_t> row_start_;   // offset of row j in steps_
    std::vector<std::size_t> row_len_;     // number of strictly earlier sites
    std::vector<double> steps_;            // steps_[row_start_[j] + i] = step(i -> j)
    std::vector<double> origin_step_;
    std::vector<double> terminal_;
    double normalizer_ = 1.0;
    double psi0_ = 1.0;
};

[[nodiscard]] ChaosResult discrete_chaos(const std::vector<SymmetricKernelSpec>& kernels,
                                         const Lattice& lattice, std::span<const double> disorder,
                                         double beta_hat);

// Brute-force enumeration over k-tuples; k <= 3 and n <= 40.
[[nodiscard]] ChaosResult discrete_chaos_enumerate(const std::vector<SymmetricKernelSpec>& kernels,
                                                   const Lattice& lattice,
                                                   std::span<const double> disorder,
                                                   double beta_hat);

enum class ContinuumPath { mesh, exact };

[[nodiscard]] ChaosResult continuum_chaos(const std::vector<SymmetricKernelSpec>& kernels,
                                          const PointCloud& cloud, double beta_hat,
                                          std::size_t mesh, ContinuumPath path = ContinuumPath::mesh);

// Cell masses of the truncated noise on a uniform mesh: atoms binned, minus kappa * volume.
[[nodiscard]] std::vector<double> mesh_masses(const PointCloud& cloud,
                                              const std::vector<std::size_t>& cells_per_axis);

// ============================================================================
// Norms and bounds
// ============================================================================

struct SymNorm {
    double q = 2.0;
    double value = 0.0;
};

// ((v^k / k!) sum over k-tuples |f|^q)^(1/q)
[[nodiscard]] SymNorm symmetric_norm(const SymmetricKernelSpec& kernel, const Lattice& lattice,
                                     double q);

// Continuum norm of psi(t) = prod_{j<=k} (t_j - t_{j-1})^(rho - 1) on (0,1)^k:
// ||psi||_q^q = Gamma(xi)^k / Gamma(k xi + 1) with xi = 1 - q (1 - rho).
[[nodiscard]] SymNorm symmetric_norm_power_product(double rho, std::size_t k, double q);

// Ordered-sector integral of prod_{j=1}^{k+1} (t_j - t_{j-1})^(xi-1), t_{k+1} = t.
[[nodiscard]] double simplex_integral(double xi, std::size_t k, double t);

[[nodiscard]] double moment_bound_constant(double p, double q, double gamma, double domain_volume,
                                           double C1);

struct MomentBoundReport {
    double p = 1.2;
    double q = 1.8;
    std::vector<double> chaos_pnorm;    // ||X_k||_p, k = 1..M
    std::vector<MomentEstimate> chaos_pnorm_ci;
    std::vector<double> kernel_qnorm;   // ||psi_k||_q
    std::vector<double> ratios;         // r_k
    LinearFit log_fit;                  // log r_k against k
    double C_hat = 0.0;                 // max_k r_k^(1/k)
    double C_calibration = 0.0;
    bool bound_holds = false;           // r_k <= C_calibration^k for all k
    std::vector<std::string> warnings;

    [[nodiscard]] nlohmann::json to_json() const;
};

// X_k = (1/k!) sum psi_k prod omega/V estimated over disorder replicas.
// C_calibration <= 0 means calibrate on this run (C_hat).
[[nodiscard]] MomentBoundReport empirical_moment_bound_check(
    const std::vector<SymmetricKernelSpec>& kernels, const TailLaw& law, const Lattice& lattice,
    double p, double q, std::size_t replicas, std::uint64_t seed, double C_calibration = 0.0);

}  // namespace levychaos
