#include "levychaos/renewal_pinning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/chebyshev_transform.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "batch_sampling.hpp"
#include "fftw_support.hpp"
#include "levychaos/errors.hpp"
#include "levychaos/rng.hpp"

namespace levychaos {

namespace {

// sum_{m >= L} m^-s, Euler-Maclaurin with L >= 1000.
double power_tail(double s, double L) {
    const double p = std::pow(L, -s);
    return L * p / (s - 1.0) + 0.5 * p + s * p / (12.0 * L) -
           s * (s + 1.0) * (s + 2.0) * p / (720.0 * L * L * L) +
           s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * p / (30240.0 * std::pow(L, 5.0));
}

// a reversed copy so that sum_j x[j] K[n - j] is a contiguous dot product.
std::vector<double> reversed(const std::vector<double>& v) { return {v.rbegin(), v.rend()}; }

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
}

}  // namespace

// ============================================================================
// Renewal kernel
// ============================================================================

double RenewalKernel::renewal_constant() const {
    return alpha * std::sin(std::numbers::pi * alpha) / std::numbers::pi;
}

RenewalKernel make_kernel(double alpha, std::size_t N_max) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (N_max < 2) throw ParameterError("N_max must be at least 2");
    RenewalKernel k;
    k.alpha = alpha;
    k.N_max = N_max;
    const double s = 1.0 + alpha;
    k.c0 = 1.0 / boost::math::zeta(s);
    k.K.assign(N_max + 1, 0.0);
    for (std::size_t n = 1; n <= N_max; ++n) k.K[n] = k.c0 * std::pow(static_cast<double>(n), -s);

    const std::size_t L = std::max<std::size_t>(N_max + 1, 1000);
    double tail = power_tail(s, static_cast<double>(L));
    for (std::size_t m = L - 1; m > N_max; --m) tail += std::pow(static_cast<double>(m), -s);
    k.Kbar.assign(N_max + 1, 0.0);
    k.Kbar[N_max] = k.c0 * tail;
    for (std::size_t n = N_max; n > 0; --n) k.Kbar[n - 1] = k.Kbar[n] + k.K[n];

    k.u.assign(N_max + 1, 0.0);
    k.u[0] = 1.0;
    const auto Kr = reversed(k.K);  // Kr[N_max - j] = K[j]
    for (std::size_t n = 1; n <= N_max; ++n) {
        k.u[n] = detail::dot(k.u.data(), Kr.data() + (N_max - n), n);
    }
    return k;
}

// ============================================================================
// Homogeneous model
// ============================================================================

HomogeneousZ homogeneous_Z(const RenewalKernel& kernel, double h, std::size_t N) {
    if (N > kernel.N_max) throw ParameterError("N exceeds the kernel range");
    HomogeneousZ z;
    const std::size_t NM = kernel.N_max;
    const auto Kr = reversed(kernel.K);
    const auto Kbr = reversed(kernel.Kbar);
    const double eh = std::exp(h);
    z.Zc.assign(N + 1, 0.0);
    z.Zc[0] = 1.0;
    for (std::size_t n = 1; n <= N; ++n) z.Zc[n] = eh * detail::dot(z.Zc.data(), Kr.data() + (NM - n), n);
    z.Zfree.assign(N + 1, 0.0);
    for (std::size_t m = 0; m <= N; ++m) z.Zfree[m] = detail::dot(z.Zc.data(), Kbr.data() + (NM - m), m + 1);
    z.Z_free = z.Zfree[N];
    return z;
}

double mittag_leffler_standard(double alpha, double beta, double x) {
    check_alpha(alpha);
    if (alpha == 1.0 && beta == 1.0) return std::exp(x);
    if (x == 0.0) return 1.0 / std::tgamma(beta);
    const double y = std::abs(x);
    if (x > 0.0 || std::pow(y, 1.0 / alpha) <= 3.0) {
        const double ly = std::log(y);
        double sum = 0.0;
        double prev_lt = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 10'000; ++k) {
            const double lt = k * ly - std::lgamma(alpha * k + beta);
            if (lt > 700.0) throw NumericalError("Mittag-Leffler series overflows");
            double t = std::exp(lt);
            if (x < 0.0 && (k % 2)) t = -t;
            sum += t;
            // Past the peak the terms decrease monotonically.
            if (lt < prev_lt && std::abs(t) < 1e-17 * std::abs(sum)) return sum;
            prev_lt = lt;
        }
        throw NumericalError("Mittag-Leffler series did not converge in 10^4 terms");
    }
    // Negative argument: Laplace-type integral representations.
    const double X = std::pow(y, 1.0 / alpha);
    const double sa = std::sin(alpha * std::numbers::pi), ca = std::cos(alpha * std::numbers::pi);
    boost::math::quadrature::exp_sinh<double> es;
    double err = 0.0;
    if (beta == 1.0) {
        auto f = [&](double r) {
            const double ra = std::pow(r, alpha);
            return ra / r * std::exp(-r * X) / (ra * ra + 2.0 * ra * ca + 1.0);
        };
        const double v = es.integrate(f, 1e-13, &err);
        return sa / std::numbers::pi * v;
    }
    if (beta == alpha) {
        auto f = [&](double r) {
            const double ra = std::pow(r, alpha);
            return std::exp(-r * X) * ra / (ra * ra + 2.0 * ra * ca + 1.0);
        };
        const double v = es.integrate(f, 1e-13, &err);
        return std::pow(y, (1.0 - alpha) / alpha) * sa / std::numbers::pi * v;
    }
    throw ParameterError("negative arguments are supported for beta in {1, alpha} only");
}

double mittag_leffler(double alpha, double z) {
    check_alpha(alpha);
    if (alpha == 1.0) return std::exp(z);
    return mittag_leffler_standard(alpha, 1.0, std::tgamma(alpha) * z);
}

double ml_derivative(double alpha, double z) {
    check_alpha(alpha);
    if (alpha == 1.0) return std::exp(z);
    const double g = std::tgamma(alpha);
    return g / alpha * mittag_leffler_standard(alpha, alpha, g * z);
}

ContinuumPinning continuum_pinning(double alpha, double h_hat, double t) {
    check_alpha(alpha);
    if (!(t > 0.0)) throw ParameterError("t must be positive");
    const double s = std::pow(t, alpha);
    return {mittag_leffler(alpha, h_hat * s), alpha * s / t * ml_derivative(alpha, h_hat * s)};
}

struct PinningTable::Impl {
    boost::math::chebyshev_transform<double> Z;
    boost::math::chebyshev_transform<double> G;
    double gamma_alpha;
};

PinningTable::PinningTable(double alpha, double h_hat) : alpha_(alpha), h_hat_(h_hat) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    const double g = std::tgamma(alpha);
    const double c = g * h_hat;
    if (c == 0.0) return;  // Z = 1, Zc = t^(alpha - 1)
    // Both functions are positive for alpha <= 1; their logs stay tame where the values span many decades.
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    impl_ = std::make_shared<Impl>(Impl{
        boost::math::chebyshev_transform<double>(
            [=](double s) { return std::log(mittag_leffler_standard(alpha, 1.0, c * s)); }, 0.0, 1.0, 1e-13, 6),
        boost::math::chebyshev_transform<double>(
            [=](double s) { return std::log(mittag_leffler_standard(alpha, alpha, c * s)); }, 0.0, 1.0, 1e-13, 6),
        g});
}

double PinningTable::Z(double t) const {
    if (t <= 0.0) return 1.0;
    if (t > 1.0) return continuum_pinning(alpha_, h_hat_, t).Z;
    if (!impl_) return 1.0;
    return std::exp(impl_->Z(std::pow(t, alpha_)));
}

double PinningTable::Zc(double t) const {
    if (!(t > 0.0)) throw ParameterError("Zc is evaluated at positive times only");
    if (t > 1.0) return continuum_pinning(alpha_, h_hat_, t).Zc;
    const double s = std::pow(t, alpha_);
    if (!impl_) return s / t;
    return impl_->gamma_alpha * s / t * std::exp(impl_->G(s));
}

// ============================================================================
// Correlation functions
// ============================================================================

double pinning_correlation(double alpha, double h_hat, std::span<const double> times) {
    double prev = 0.0;
    double v = 1.0;
    for (double t : times) {
        if (t < prev) throw ParameterError("times must be sorted");
        if (t == prev) return 0.0;
        if (t >= 1.0) throw ParameterError("times must lie in (0, 1)");
        v *= continuum_pinning(alpha, h_hat, t - prev).Zc;
        prev = t;
    }
    const double tail = prev < 1.0 ? continuum_pinning(alpha, h_hat, 1.0 - prev).Z : 1.0;
    return v * tail / continuum_pinning(alpha, h_hat, 1.0).Z;
}

std::shared_ptr<ProductKernel> pinning_product_kernel(double alpha, double h_hat) {
    auto table = std::make_shared<PinningTable>(alpha, h_hat);
    auto k = std::make_shared<ProductKernel>();
    k->dim = 1;
    k->origin = {0.0};
    k->step = [table](std::span<const double> x, std::span<const double> y) {
        const double d = y[0] - x[0];
        return d > 0.0 ? table->Zc(d) : 0.0;
    };
    k->terminal = [table](std::span<const double> x) { return table->Z(1.0 - x[0]); };
    k->normalizer = table->Z(1.0);
    return k;
}

double discrete_pinning_correlation(const RenewalKernel& kernel, double h, std::size_t N,
                                    std::span<const std::size_t> indices) {
    if (indices.empty()) return 1.0;
    const auto hz = homogeneous_Z(kernel, h, N);
    const double uN = kernel.u[N];
    std::size_t prev = 0;
    double v = 1.0;
    for (std::size_t n : indices) {
        if (n < prev || n > N || n == 0) throw ParameterError("indices must be increasing in [1, N]");
        if (n == prev) return 0.0;
        v *= hz.Zc[n - prev] / uN;
        prev = n;
    }
    return v * hz.Zfree[N - prev] / hz.Z_free;
}

std::shared_ptr<ProductKernel> discrete_pinning_product_kernel(const RenewalKernel& kernel, double h,
                                                               std::size_t N) {
    auto hz = std::make_shared<HomogeneousZ>(homogeneous_Z(kernel, h, N));
    const double uN = kernel.u[N];
    const double Nd = static_cast<double>(N);
    auto k = std::make_shared<ProductKernel>();
    k->dim = 1;
    k->origin = {0.0};
    k->step = [hz, uN, Nd, N](std::span<const double> x, std::span<const double> y) {
        const long long d = std::llround((y[0] - x[0]) * Nd);
        if (d <= 0 || static_cast<std::size_t>(d) > N) return 0.0;
        return hz->Zc[static_cast<std::size_t>(d)] / uN;
    };
    k->terminal = [hz, Nd, N](std::span<const double> x) {
        const long long n = std::llround(x[0] * Nd);
        return hz->Zfree[N - static_cast<std::size_t>(std::clamp<long long>(n, 0, static_cast<long long>(N)))];
    };
    k->normalizer = hz->Z_free;
    return k;
}

Lattice pinning_lattice(std::size_t N, double V_N) {
    Lattice lat;
    lat.dim = 1;
    lat.points.resize(N);
    for (std::size_t n = 1; n <= N; ++n) lat.points[n - 1] = static_cast<double>(n) / static_cast<double>(N);
    lat.v_delta = 1.0 / static_cast<double>(N);
    lat.V_delta = V_N;
    return lat;
}

// ============================================================================
// Disordered model
// ============================================================================

PinningParams PinningParams::from_continuum(const RenewalKernel& kernel, std::size_t N, double h_hat,
                                            double beta_hat, double V_N) {
    if (N == 0 || N > kernel.N_max) throw ParameterError("N outside the kernel range");
    PinningParams p;
    p.N = N;
    p.h_hat = h_hat;
    p.beta_hat = beta_hat;
    const double uN = kernel.u[N];
    p.h = h_hat / (static_cast<double>(N) * uN);
    p.beta = beta_hat / (uN * V_N);
    return p;
}

void PinningParams::validate(const RenewalKernel& kernel) const {
    if (N == 0 || N > kernel.N_max) throw ParameterError("N outside the kernel range");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in [0, 1]");
    if (!std::isfinite(h)) throw ParameterError("h must be finite");
}

DisorderedPinningTable disordered_pinning_table(const RenewalKernel& kernel, const PinningParams& params,
                                                std::span<const double> disorder) {
    params.validate(kernel);
    const std::size_t N = params.N, NM = kernel.N_max;
    if (disorder.size() < N) throw ParameterError("disorder shorter than N");
    const auto Kr = reversed(kernel.K);
    const auto Kbr = reversed(kernel.Kbar);
    const double eh = std::exp(params.h);
    DisorderedPinningTable t;
    t.Zc.assign(N + 1, 0.0);
    t.Zc[0] = 1.0;
    for (std::size_t n = 1; n <= N; ++n) {
        const double w = 1.0 + params.beta * disorder[n - 1];
        if (w < 0.0) throw ParameterError("1 + beta omega must be nonnegative");
        t.Zc[n] = eh * w * detail::dot(t.Zc.data(), Kr.data() + (NM - n), n);
    }
    t.Z_free = detail::dot(t.Zc.data(), Kbr.data() + (NM - N), N + 1);
    return t;
}

double disordered_pinning_Z(const RenewalKernel& kernel, const PinningParams& params,
                            std::span<const double> disorder) {
    const auto t = disordered_pinning_table(kernel, params, disorder);
    if (params.beta == 0.0) return 1.0;
    // Kernels are a deterministic function of (alpha, N_max).
    thread_local double ca = -1.0, ch = std::numeric_limits<double>::quiet_NaN(), cZ = 1.0;
    thread_local std::size_t cmax = 0, cN = 0;
    if (ca != kernel.alpha || cmax != kernel.N_max || cN != params.N || ch != params.h) {
        cZ = homogeneous_Z(kernel, params.h, params.N).Z_free;
        ca = kernel.alpha;
        cmax = kernel.N_max;
        cN = params.N;
        ch = params.h;
    }
    return t.Z_free / cZ;
}

std::vector<std::size_t> sample_pinning_gibbs(const RenewalKernel& kernel, const PinningParams& params,
                                              const DisorderedPinningTable& table,
                                              std::span<const double> disorder, std::uint64_t seed,
                                              std::uint64_t replica) {
    const std::size_t N = params.N;
    CounterRng rng(derive_key(seed, replica, Purpose::gibbs));
    const double eh = std::exp(params.h);
    std::vector<std::size_t> sites;
    // Last renewal before N.
    double target = rng.uniform() * table.Z_free;
    std::size_t m = 0;
    double acc = 0.0;
    for (std::size_t j = N + 1; j-- > 0;) {
        acc += table.Zc[j] * kernel.Kbar[N - j];
        if (acc >= target) {
            m = j;
            break;
        }
    }
    while (m > 0) {
        sites.push_back(m);
        const double w = eh * (1.0 + params.beta * disorder[m - 1]);
        target = rng.uniform() * table.Zc[m] / w;
        acc = 0.0;
        std::size_t next = 0;
        for (std::size_t j = m; j-- > 0;) {
            acc += table.Zc[j] * kernel.K[m - j];
            if (acc >= target) {
                next = j;
                break;
            }
        }
        m = next;
    }
    std::reverse(sites.begin(), sites.end());
    return sites;
}

std::vector<std::size_t> sample_pinning_gibbs(const RenewalKernel& kernel, const PinningParams& params,
                                              std::span<const double> disorder, std::uint64_t seed,
                                              std::uint64_t replica) {
    const auto table = disordered_pinning_table(kernel, params, disorder);
    return sample_pinning_gibbs(kernel, params, table, disorder, seed, replica);
}

double contact_fraction(const std::vector<std::size_t>& sites, const RenewalKernel& kernel,
                        std::size_t N) {
    return static_cast<double>(sites.size()) / (static_cast<double>(N) * kernel.u[N]);
}

void check_pinning_gate(double alpha, double gamma, bool override_gate) {
    if (1.0 - alpha < 1.0 / gamma || override_gate) return;
    throw GateError("pinning needs 1 - alpha < 1/gamma; got 1 - alpha = " + std::to_string(1.0 - alpha) +
                    ", 1/gamma = " + std::to_string(1.0 / gamma) + " (override to run anyway)");
}

// ============================================================================
// Continuum chaos
// ============================================================================

ContinuumPinningProxy::ContinuumPinningProxy(double alpha, double h_hat, double beta_hat, double gamma,
                                             double c_plus, double c_minus, double a,
                                             std::size_t gaussian_cells)
    : alpha_(alpha),
      h_hat_(h_hat),
      beta_hat_(beta_hat),
      gamma_(gamma),
      c_plus_(c_plus),
      c_minus_(c_minus),
      a_(a),
      kappa_(compensator_rate(gamma, c_plus, c_minus, a)),
      cells_(gaussian_cells),
      shifted_(alpha, h_hat - beta_hat * compensator_rate(gamma, c_plus, c_minus, a)) {
    if (beta_hat < 0.0) throw ParameterError("beta_hat must be nonnegative");
    Z1_ = continuum_pinning(alpha, h_hat, 1.0).Z;
    Z1_shifted_ = shifted_.Z(1.0);
    if (cells_ > 0) {
        const double h = 1.0 / static_cast<double>(cells_);
        cell_sd_ = std::sqrt(small_jump_variance(gamma, a) * h);
        cell_times_.resize(cells_);
        cell_step_.assign(cells_, 0.0);
        cell_origin_.resize(cells_);
        cell_terminal_.resize(cells_);
        for (std::size_t c = 0; c < cells_; ++c) {
            cell_times_[c] = (static_cast<double>(c) + 0.5) * h;
            if (c > 0) cell_step_[c] = shifted_.Zc(static_cast<double>(c) * h);
            cell_origin_[c] = shifted_.Zc(cell_times_[c]);
            cell_terminal_[c] = shifted_.Z(1.0 - cell_times_[c]);
        }
    }
}

double ContinuumPinningProxy::evaluate(const PointCloud& cloud, std::span<const double> normals) const {
    if (cloud.domain.dim() != 1) throw ParameterError("pinning clouds are one-dimensional");
    if (cells_ > 0 && normals.size() != cells_) throw ParameterError("need one normal per cell");
    struct Site {
        double t;
        double w;
        long cell;  // -1 for atoms
    };
    std::vector<Site> sites;
    sites.reserve(cloud.size() + cells_);
    for (std::size_t i = 0; i < cloud.size(); ++i) sites.push_back({cloud.positions[i], cloud.marks[i], -1});
    for (std::size_t c = 0; c < cells_; ++c) sites.push_back({cell_times_[c], cell_sd_ * normals[c], static_cast<long>(c)});
    std::sort(sites.begin(), sites.end(), [](const Site& x, const Site& y) { return x.t < y.t; });

    const std::size_t n = sites.size();
    std::vector<double> G(n);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Site& sj = sites[j];
        double s = sj.cell >= 0 ? cell_origin_[static_cast<std::size_t>(sj.cell)] : shifted_.Zc(sj.t);
        for (std::size_t i = 0; i < j; ++i) {
            const Site& si = sites[i];
            if (G[i] == 0.0 || si.t >= sj.t) continue;
            const double step = (si.cell >= 0 && sj.cell >= 0)
                                    ? cell_step_[static_cast<std::size_t>(sj.cell - si.cell)]
                                    : shifted_.Zc(sj.t - si.t);
            s += step * G[i];
        }
        G[j] = beta_hat_ * sj.w * s;
        const double term = sj.cell >= 0 ? cell_terminal_[static_cast<std::size_t>(sj.cell)] : shifted_.Z(1.0 - sj.t);
        acc += G[j] * term;
    }
    return (Z1_shifted_ + acc) / Z1_;
}

double ContinuumPinningProxy::sample(std::uint64_t seed, std::uint64_t replica) const {
    const auto cloud = sample_cloud(DomainBox::unit(1), gamma_, c_plus_, c_minus_, a_, seed, replica);
    std::vector<double> normals(cells_);
    CounterRng rng(derive_key(seed, replica, Purpose::small_jumps));
    for (auto& z : normals) z = rng.normal();
    return evaluate(cloud, normals);
}

ChaosResult power_kernel_chaos(double alpha, const PointCloud& cloud, double beta_hat, std::size_t M) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (cloud.domain.dim() != 1 || cloud.domain.lower[0] != 0.0 || cloud.domain.upper[0] != 1.0) {
        throw ParameterError("power-kernel chaos runs on the unit interval");
    }
    const double c = -cloud.kappa;
    const double la = std::lgamma(alpha);
    // B_m(L) = L^((m+1)a - 1) gB[m], T_m(L) = L^(m a) gT[m]
    std::vector<double> gB(M + 1), gT(M + 1), cp(M + 1);
    for (std::size_t m = 0; m <= M; ++m) {
        const double md = static_cast<double>(m);
        gB[m] = std::exp((md + 1.0) * la - std::lgamma((md + 1.0) * alpha));
        gT[m] = std::exp(md * la - std::lgamma(md * alpha + 1.0));
        cp[m] = std::pow(c, md);
    }
    std::vector<std::size_t> ord(cloud.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](std::size_t x, std::size_t y) { return cloud.positions[x] < cloud.positions[y]; });
    const std::size_t n = ord.size();
    std::vector<double> t(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = cloud.positions[ord[i]];
        z[i] = cloud.marks[ord[i]];
    }
    // F[i * (M + 1) + k]: chains of total order k ending at atom i.
    std::vector<double> F(n * (M + 1), 0.0);
    std::vector<double> Bpow(M + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double* Fi = F.data() + i * (M + 1);
        const double lt = std::log(t[i]);
        for (std::size_t k = 1; k <= M; ++k) {
            const double md = static_cast<double>(k - 1);
            Fi[k] = cp[k - 1] * gB[k - 1] * std::exp(((md + 1.0) * alpha - 1.0) * lt);
        }
        for (std::size_t i2 = 0; i2 < i; ++i2) {
            if (!(t[i2] < t[i])) continue;
            const double lL = std::log(t[i] - t[i2]);
            for (std::size_t m = 0; m + 2 <= M; ++m) {
                Bpow[m] = cp[m] * gB[m] * std::exp(((static_cast<double>(m) + 1.0) * alpha - 1.0) * lL);
            }
            const double* Fp = F.data() + i2 * (M + 1);
            for (std::size_t k = 2; k <= M; ++k) {
                double s = 0.0;
                for (std::size_t m = 0; m + 1 < k; ++m) s += Fp[k - 1 - m] * Bpow[m];
                Fi[k] += s;
            }
        }
        for (std::size_t k = 1; k <= M; ++k) Fi[k] *= z[i];
    }
    ChaosResult r;
    r.M = M;
    r.per_order.assign(M + 1, 0.0);
    r.per_order[0] = 1.0;
    double bk = 1.0;
    for (std::size_t k = 1; k <= M; ++k) {
        bk *= beta_hat;
        double s = cp[k] * gT[k];
        for (std::size_t i = 0; i < n; ++i) {
            const double lr = std::log1p(-t[i]);
            const double* Fi = F.data() + i * (M + 1);
            for (std::size_t m = 0; m < k; ++m) {
                s += Fi[k - m] * cp[m] * gT[m] * std::exp(static_cast<double>(m) * alpha * lr);
            }
        }
        r.per_order[k] = bk * s;
    }
    r.total = std::accumulate(r.per_order.begin(), r.per_order.end(), 0.0);
    return r;
}

}  // namespace levychaos
