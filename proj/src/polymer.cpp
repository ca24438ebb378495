#include "levychaos/polymer.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "binary_io.hpp"
#include "fftw_support.hpp"
#include "levychaos/errors.hpp"

namespace levychaos {

namespace {

constexpr double kPi = std::numbers::pi;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw ParameterError("alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
}

}  // namespace

// ============================================================================
// Walks
// ============================================================================

double StableWalk::a_n(double n) const { return std::pow(n, 1.0 / alpha); }

void StableWalk::validate() const {
    check_alpha(alpha);
    if (d == 0) throw ParameterError("d must be at least 1");
    if (d > 1 && !experimental) throw CapacityError("d >= 2 requires the experimental flag");
}

double stable_variate(double alpha, CounterRng& rng) {
    const double V = kPi * (rng.uniform() - 0.5);
    const double W = -std::log(rng.uniform());
    if (alpha == 1.0) return std::tan(V);
    return std::sin(alpha * V) / std::pow(std::cos(V), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * V) / W, (1.0 - alpha) / alpha);
}

namespace {

// Positive stable with Laplace transform exp(-lambda^rho), 0 < rho < 1 (Kanter).
double positive_stable(double rho, CounterRng& rng) {
    const double U = kPi * rng.uniform();
    const double E = -std::log(rng.uniform());
    const double A = std::pow(std::sin(rho * U), rho / (1.0 - rho)) * std::sin((1.0 - rho) * U) /
                     std::pow(std::sin(U), 1.0 / (1.0 - rho));
    return std::pow(A / E, (1.0 - rho) / rho);
}

}  // namespace

std::vector<long long> sample_walk(const StableWalk& walk, std::size_t N, std::uint64_t seed,
                                   std::uint64_t replica) {
    walk.validate();
    if (N == 0) throw ParameterError("N must be at least 1");
    CounterRng rng(derive_key(seed, replica, Purpose::walk));
    std::vector<long long> out(N * walk.d);
    std::vector<long long> pos(walk.d, 0);
    for (std::size_t n = 0; n < N; ++n) {
        if (walk.d == 1) {
            pos[0] += std::llround(stable_variate(walk.alpha, rng));
        } else {
            // Isotropic: sqrt(2 W) times a standard Gaussian vector.
            const double scale =
                walk.alpha == 2.0 ? std::sqrt(2.0) : std::sqrt(2.0 * positive_stable(walk.alpha / 2.0, rng));
            for (auto& p : pos) p += std::llround(scale * rng.normal());
        }
        std::copy(pos.begin(), pos.end(), out.begin() + static_cast<std::ptrdiff_t>(n * walk.d));
    }
    return out;
}

// ============================================================================
// Densities
// ============================================================================

namespace {

// Convergent for alpha > 1; only used at |x| <= 1.
double density_small_series(double alpha, double x) {
    double sum = 0.0;
    const double lx = std::log(x);
    for (int k = 0; k < 300; ++k) {
        const double mag = std::exp(std::lgamma((2.0 * k + 1.0) / alpha) - std::lgamma(2.0 * k + 1.0) +
                                    (k == 0 ? 0.0 : 2.0 * k * lx));
        sum += (k % 2 == 0 ? mag : -mag);
        if (k > 2 && mag < 1e-17 * std::abs(sum)) break;
    }
    return sum / (kPi * alpha);
}

// Expansion in |x|^(-alpha k - 1): convergent for alpha < 1, asymptotic for
// alpha > 1. Returns nothing when the terms grow before reaching round-off.
std::optional<double> density_tail_series(double alpha, double x) {
    const double lx = std::log(x);
    double sum = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 400; ++k) {
        const double mag = std::exp(std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0) - (alpha * k + 1.0) * lx);
        const double s = std::sin(kPi * alpha * k / 2.0);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * mag * s;
        if (k > 1 && mag < 1e-17 * std::abs(sum)) return sum / kPi;
        if (k > 2 && mag > prev) return std::nullopt;
        prev = mag;
    }
    return std::nullopt;
}

double density_fourier(double alpha, double x) {
    thread_local boost::math::quadrature::ooura_fourier_cos<double> integrator(1e-13);
    const auto [value, rel] = integrator.integrate([alpha](double t) { return std::exp(-std::pow(t, alpha)); }, x);
    if (!std::isfinite(value) || rel > 1e-7) {
        throw NumericalError("stable density quadrature did not converge at x = " + std::to_string(x));
    }
    return value / kPi;
}

double density_d1(double alpha, double x) {
    x = std::abs(x);
    if (alpha == 2.0) return std::exp(-x * x / 4.0) / std::sqrt(4.0 * kPi);
    if (alpha == 1.0) return 1.0 / (kPi * (1.0 + x * x));
    if (x == 0.0) return std::tgamma(1.0 + 1.0 / alpha) / kPi;
    if (alpha > 1.0 && x <= 1.0) return density_small_series(alpha, x);
    if (x >= (alpha < 1.0 ? 0.5 : 3.0)) {
        if (const auto v = density_tail_series(alpha, x)) return *v;
    }
    return density_fourier(alpha, x);
}

double density_radial(double alpha, double r, std::size_t d) {
    const double h = static_cast<double>(d) / 2.0;
    const double pref = std::pow(2.0 * kPi, -h);
    if (r == 0.0) {
        return pref * std::tgamma(static_cast<double>(d) / alpha) / alpha /
               (std::pow(2.0, h - 1.0) * std::tgamma(h));
    }
    if (alpha == 2.0) return std::pow(4.0 * kPi, -h) * std::exp(-r * r / 4.0);
    boost::math::quadrature::exp_sinh<double> es;
    double err = 0.0;
    const double I = es.integrate(
        [&](double t) {
            return std::exp(-std::pow(t, alpha)) * std::pow(t, h) * boost::math::cyl_bessel_j(h - 1.0, r * t);
        },
        1e-10, &err);
    if (!std::isfinite(I)) throw NumericalError("radial stable density quadrature failed");
    return pref * std::pow(r, 1.0 - h) * I;
}

}  // namespace

double stable_density(double alpha, double x, std::size_t d) {
    check_alpha(alpha);
    if (d == 0) throw ParameterError("d must be at least 1");
    if (d == 1) return density_d1(alpha, x);
    return density_radial(alpha, std::abs(x), d);
}

StableDensity::StableDensity(double alpha, std::size_t d) : alpha_(alpha), d_(d) {
    check_alpha(alpha);
    if (d == 0) throw ParameterError("d must be at least 1");
}

double StableDensity::operator()(double x) const { return stable_density(alpha_, x, d_); }

double StableDensity::at(double t, double x) const {
    if (!(t > 0.0)) return 0.0;
    const double s = std::pow(t, 1.0 / alpha_);
    return std::pow(s, -static_cast<double>(d_)) * stable_density(alpha_, x / s, d_);
}

// ============================================================================
// Lattice laws
// ============================================================================

namespace {

// Characteristic function of round(scale Y) at theta in [0, pi]:
// sum_m exp(-|scale (theta + 2 pi m)|^alpha) sinc((theta + 2 pi m) / 2).
class LatticeCf {
public:
    LatticeCf(double alpha, double scale) : alpha_(alpha), scale_(scale) {
        // exp(-46) < 1e-20; beyond m_max every image term is below it.
        const double reach = std::pow(46.0, 1.0 / alpha) / scale;
        m_max_ = static_cast<long long>(std::ceil((reach + kPi) / (2.0 * kPi))) + 1;
    }

    double operator()(double theta) const {
        double s = term(theta);
        for (long long m = 1; m <= m_max_; ++m) {
            s += term(theta + 2.0 * kPi * static_cast<double>(m)) +
                 term(theta - 2.0 * kPi * static_cast<double>(m));
        }
        return s;
    }

private:
    double term(double u) const {
        const double sinc = u == 0.0 ? 1.0 : std::sin(u / 2.0) / (u / 2.0);
        return std::exp(-std::pow(std::abs(scale_ * u), alpha_)) * sinc;
    }
    double alpha_;
    double scale_;
    long long m_max_;
};

// P(S_n = k) for |k| <= W and each n in ns, S_n a sum of n copies of round(scale Y).
std::vector<std::vector<double>> lattice_power_pmfs(double alpha, double scale, const std::vector<std::size_t>& ns,
                                                    long long W) {
    if (W < 0) throw ParameterError("window must be nonnegative");
    std::size_t M = 4096;
    while (M < 64 * static_cast<std::size_t>(W + 1)) M <<= 1;
    if (M > (std::size_t{1} << 26)) throw CapacityError("lattice pmf grid exceeds 2^26 points");
    const LatticeCf cf(alpha, scale);
    std::vector<double> phi(M / 2 + 1);
    for (std::size_t j = 0; j <= M / 2; ++j) phi[j] = cf(2.0 * kPi * static_cast<double>(j) / static_cast<double>(M));

    fftw_complex* spec = fftw_alloc_complex(M / 2 + 1);
    double* real = fftw_alloc_real(M);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(M), spec, real, FFTW_ESTIMATE);
    }
    std::vector<std::vector<double>> result;
    result.reserve(ns.size());
    const double inv = 1.0 / static_cast<double>(M);
    const auto Ml = static_cast<long long>(M);
    for (std::size_t n : ns) {
        const double nd = static_cast<double>(n);
        for (std::size_t j = 0; j <= M / 2; ++j) {
            const double f = phi[j];
            spec[j][0] = n == 1 ? f : (f >= 0.0 ? std::pow(f, nd) : (n % 2 == 0 ? 1.0 : -1.0) * std::pow(-f, nd));
            spec[j][1] = 0.0;
        }
        fftw_execute(plan);
        std::vector<double> out(static_cast<std::size_t>(2 * W + 1));
        for (long long k = -W; k <= W; ++k) {
            const auto idx = static_cast<std::size_t>((k % Ml + Ml) % Ml);
            out[static_cast<std::size_t>(k + W)] = std::max(0.0, real[idx] * inv);
        }
        result.push_back(std::move(out));
    }
    {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(spec);
    fftw_free(real);
    return result;
}

std::vector<double> lattice_power_pmf(double alpha, double scale, std::size_t n, long long W) {
    return std::move(lattice_power_pmfs(alpha, scale, {n}, W).front());
}

}  // namespace

std::vector<double> lattice_step_pmf(double alpha, double scale, long long W) {
    check_alpha(alpha);
    if (!(scale > 0.0)) throw ParameterError("scale must be positive");
    return lattice_power_pmf(alpha, scale, 1, W);
}

double WalkPmf::at(long long x) const {
    if (x < -window || x > window) return 0.0;
    return p[static_cast<std::size_t>(x + window)];
}

WalkPmf walk_pmf(const StableWalk& walk, std::size_t n, long long window, double defect_budget) {
    walk.validate();
    if (walk.d != 1) throw CapacityError("walk_pmf supports d = 1 only");
    if (n == 0) throw ParameterError("n must be at least 1");
    WalkPmf r;
    r.window = window;
    r.p = lattice_power_pmf(walk.alpha, 1.0, n, window);
    double mass = 0.0;
    for (double v : r.p) mass += v;
    r.defect = std::max(0.0, 1.0 - mass);
    if (r.defect > defect_budget) {
        const double grow = std::pow(r.defect / defect_budget, 1.0 / walk.alpha);
        const auto suggested = static_cast<long long>(std::ceil(1.1 * grow * static_cast<double>(window + 1)));
        throw CapacityError("window " + std::to_string(window) + " loses mass " + std::to_string(r.defect) +
                            "; try window >= " + std::to_string(suggested));
    }
    return r;
}

LltReport llt_check(const StableWalk& walk, std::size_t n, double radius) {
    walk.validate();
    LltReport r;
    r.n = n;
    r.a_n = walk.a_n(static_cast<double>(n));
    const auto W = static_cast<long long>(std::ceil(radius * r.a_n));
    const auto pmf = walk_pmf(walk, n, W, 1.0);
    for (long long x = 0; x <= W; ++x) {  // symmetric
        const double e = std::abs(r.a_n * pmf.at(x) - stable_density(walk.alpha, static_cast<double>(x) / r.a_n));
        if (e > r.sup_error) {
            r.sup_error = e;
            r.argmax = x;
        }
    }
    return r;
}

// ============================================================================
// Parameters and disorder
// ============================================================================

long long PolymerParams::window(const StableWalk& walk) const {
    return static_cast<long long>(std::ceil(2.0 * A * walk.a_n(static_cast<double>(N))));
}

double PolymerParams::noise_scale(const StableWalk& walk, std::size_t N, const TailLaw& law) {
    const double aN = walk.a_n(static_cast<double>(N));
    return solve_noise_scale(law, 1.0 / (static_cast<double>(N) * std::pow(aN, static_cast<double>(walk.d))));
}

PolymerParams PolymerParams::from_continuum(const StableWalk& walk, std::size_t N, double beta_hat,
                                            double A, const TailLaw& law) {
    walk.validate();
    if (N == 0) throw ParameterError("N must be at least 1");
    PolymerParams p;
    p.N = N;
    p.A = A;
    p.beta_hat = beta_hat;
    p.law = law;
    const double aN = walk.a_n(static_cast<double>(N));
    p.beta = beta_hat * std::pow(aN, static_cast<double>(walk.d)) / noise_scale(walk, N, law);
    p.validate(walk);
    return p;
}

void PolymerParams::validate(const StableWalk& walk) const {
    walk.validate();
    law.validate();
    if (N == 0) throw ParameterError("N must be at least 1");
    if (!(A > 0.0)) throw ParameterError("A must be positive");
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ParameterError("beta must lie in [0, 1], got " + std::to_string(beta));
    }
}

void check_polymer_gate(double alpha, std::size_t d, double gamma, bool override_gate) {
    if (override_gate) return;
    const double bound = 1.0 + alpha / static_cast<double>(d);
    if (!(gamma < bound)) {
        throw GateError("gamma = " + std::to_string(gamma) + " violates gamma < 1 + alpha/d = " +
                        std::to_string(bound));
    }
}

namespace {

constexpr std::uint64_t kRowStride = std::uint64_t{1} << 32;
constexpr std::uint64_t kColumnOffset = std::uint64_t{1} << 31;

}  // namespace

DisorderField DisorderField::restrict_to(long long L_inner) const {
    if (L_inner > L || L_inner < 0) throw ParameterError("inner window exceeds the field");
    DisorderField f;
    f.N = N;
    f.L = L_inner;
    const auto W = static_cast<std::size_t>(2 * L_inner + 1);
    f.values.resize(N * W);
    for (std::size_t n = 1; n <= N; ++n)
        for (long long x = -L_inner; x <= L_inner; ++x)
            f.values[(n - 1) * W + static_cast<std::size_t>(x + L_inner)] = at(n, x);
    return f;
}

DisorderField sample_disorder_field(const TailLaw& law, std::size_t N, long long L, std::uint64_t seed,
                                    std::uint64_t replica) {
    law.validate();
    if (N == 0 || L < 0) throw ParameterError("field needs N >= 1 and L >= 0");
    if (static_cast<std::uint64_t>(L) >= kColumnOffset) throw CapacityError("window too wide");
    DisorderField f;
    f.N = N;
    f.L = L;
    const auto W = static_cast<std::size_t>(2 * L + 1);
    f.values.resize(N * W);
    const std::uint64_t key = derive_key(seed, replica, Purpose::disorder);
    for (std::size_t n = 1; n <= N; ++n) {
        fill_disorder(law, key, std::span<double>(f.values.data() + (n - 1) * W, W),
                      (n - 1) * kRowStride + kColumnOffset - static_cast<std::uint64_t>(L));
    }
    return f;
}

void write_disorder_field(const DisorderField& field, double gamma, std::uint64_t seed, std::ostream& os) {
    detail::put_le<std::uint64_t>(os, field.N);
    detail::put_le<std::int64_t>(os, field.L);
    detail::put_le<double>(os, gamma);
    detail::put_le<std::uint64_t>(os, seed);
    for (double v : field.values) detail::put_le<double>(os, v);
}

DisorderField read_disorder_field(std::istream& is) {
    constexpr const char* what = "truncated disorder grid";
    DisorderField f;
    f.N = detail::get_le<std::uint64_t>(is, what);
    f.L = detail::get_le<std::int64_t>(is, what);
    (void)detail::get_le<double>(is, what);
    (void)detail::get_le<std::uint64_t>(is, what);
    if (f.N == 0 || f.L < 0) throw ParameterError("invalid disorder grid header");
    f.values.resize(f.N * static_cast<std::size_t>(2 * f.L + 1));
    for (auto& v : f.values) v = detail::get_le<double>(is, what);
    return f;
}

// ============================================================================
// Transfer-matrix DP
// ============================================================================

struct PolymerDP::Plan {
    detail::WindowConvolver conv;
};

PolymerDP::PolymerDP(const StableWalk& walk, std::size_t N, long long L) : N_(N), L_(L) {
    walk.validate();
    if (walk.d != 1) throw CapacityError("the polymer DP supports d = 1 only");
    if (N == 0 || L < 0) throw ParameterError("DP needs N >= 1 and L >= 0");
    pmf_ = lattice_step_pmf(walk.alpha, 1.0, 2 * L);
    plan_ = std::make_unique<Plan>(Plan{detail::WindowConvolver(pmf_, static_cast<std::size_t>(2 * L + 1))});
    DisorderField empty;
    empty.N = N;
    empty.L = L;
    mass_ = Z(empty, 0.0);
}

PolymerDP::~PolymerDP() = default;
PolymerDP::PolymerDP(PolymerDP&&) noexcept = default;
PolymerDP& PolymerDP::operator=(PolymerDP&&) noexcept = default;

double PolymerDP::Z(const DisorderField& field, double beta) const {
    if (beta != 0.0 && (field.N < N_ || field.L < L_)) {
        throw ParameterError("disorder field does not cover the window");
    }
    const auto W = static_cast<std::size_t>(2 * L_ + 1);
    std::vector<double> u(W, 0.0), v(W);
    u[static_cast<std::size_t>(L_)] = 1.0;
    auto ws = plan_->conv.workspace();
    for (std::size_t n = 1; n <= N_; ++n) {
        plan_->conv.apply(u.data(), v.data(), *ws);
        if (beta == 0.0) {
            u.swap(v);
            continue;
        }
        const double* row = field.values.data() + (n - 1) * static_cast<std::size_t>(2 * field.L + 1) +
                            static_cast<std::size_t>(field.L - L_);
        for (std::size_t i = 0; i < W; ++i) u[i] = v[i] * (1.0 + beta * row[i]);
    }
    double z = 0.0;
    for (double x : u) z += x;
    return z;
}

long long free_window_size(const StableWalk& walk, std::size_t N, double A, double defect_budget) {
    walk.validate();
    if (!(defect_budget > 0.0)) throw ParameterError("defect budget must be positive");
    auto L = static_cast<long long>(std::ceil(2.0 * A * walk.a_n(static_cast<double>(N))));
    for (int iter = 0; iter < 40; ++iter) {
        if (L > (1LL << 22)) break;
        const double defect = 1.0 - PolymerDP(walk, N, L).homogeneous_mass();
        if (defect <= defect_budget) return L;
        const double grow = std::max(2.0, std::pow(defect / defect_budget, 1.0 / walk.alpha));
        L = static_cast<long long>(std::ceil(grow * static_cast<double>(L)));
    }
    throw CapacityError("no window up to 2^22 meets the defect budget " + std::to_string(defect_budget));
}

PolymerZ disordered_polymer_Z(const StableWalk& walk, const PolymerParams& params,
                              const DisorderField& field, WindowMode mode, double defect_budget) {
    params.validate(walk);
    const long long L =
        mode == WindowMode::hard_window ? params.window(walk) : free_window_size(walk, params.N, params.A, defect_budget);
    if (field.N < params.N || field.L < L) {
        if (mode == WindowMode::free_window) {
            throw CapacityError("free window needs a field with L >= " + std::to_string(L));
        }
        throw ParameterError("disorder field does not cover the window L = " + std::to_string(L));
    }
    const PolymerDP dp(walk, params.N, L);
    PolymerZ r;
    r.window = L;
    r.homogeneous_mass = dp.homogeneous_mass();
    r.defect = std::max(0.0, 1.0 - r.homogeneous_mass);
    r.Z = dp.Z(field, params.beta);
    return r;
}

double enumerate_polymer_Z(const StableWalk& walk, std::size_t N, long long L, const DisorderField& field,
                           double beta) {
    walk.validate();
    if (walk.d != 1) throw CapacityError("enumeration supports d = 1 only");
    if (N == 0 || L < 0) throw ParameterError("enumeration needs N >= 1 and L >= 0");
    const auto W = static_cast<std::size_t>(2 * L + 1);
    if (std::pow(static_cast<double>(W), static_cast<double>(N)) > 2e10) {
        throw CapacityError("too many paths to enumerate");
    }
    if (field.N < N || field.L < L) throw ParameterError("disorder field does not cover the window");
    const auto pmf = lattice_step_pmf(walk.alpha, 1.0, 2 * L);
    const double* p = pmf.data() + 2 * L;  // p[k], |k| <= 2L
    std::vector<double> f(N * W);
    for (std::size_t n = 1; n <= N; ++n)
        for (long long x = -L; x <= L; ++x) f[(n - 1) * W + static_cast<std::size_t>(x + L)] = 1.0 + beta * field.at(n, x);
    // Weight of the final step from each position.
    std::vector<double> last(W, 0.0);
    for (long long y = -L; y <= L; ++y)
        for (long long x = -L; x <= L; ++x)
            last[static_cast<std::size_t>(y + L)] += p[x - y] * f[(N - 1) * W + static_cast<std::size_t>(x + L)];

    std::vector<long long> path(N + 1, 0);
    std::vector<double> prefix(N + 1, 1.0);
    if (N == 1) return last[static_cast<std::size_t>(L)];
    // Subtree sums per depth keep the rounding error at O(N eps).
    std::vector<double> partial(N + 1, 0.0);
    std::vector<long long> cursor(N, -L);
    std::size_t depth = 1;
    cursor[1] = -L;
    while (depth >= 1) {
        if (cursor[depth] > L) {
            partial[depth - 1] += partial[depth];
            partial[depth] = 0.0;
            --depth;
            if (depth >= 1) ++cursor[depth];
            continue;
        }
        const long long x = cursor[depth];
        const double w = prefix[depth - 1] * p[x - path[depth - 1]] * f[(depth - 1) * W + static_cast<std::size_t>(x + L)];
        path[depth] = x;
        if (depth == N - 1) {
            partial[depth] += w * last[static_cast<std::size_t>(x + L)];
            ++cursor[depth];
        } else {
            prefix[depth] = w;
            ++depth;
            cursor[depth] = -L;
        }
    }
    return partial[0];
}

ProbabilityEstimate excursion_probability(const StableWalk& walk, std::size_t N, double threshold,
                                          std::size_t samples, std::uint64_t seed) {
    walk.validate();
    if (samples == 0) throw ParameterError("samples must be positive");
    std::size_t hits = 0;
    for (std::size_t r = 0; r < samples; ++r) {
        const auto path = sample_walk(walk, N, seed, r);
        bool hit = false;
        for (std::size_t n = 0; n < N && !hit; ++n) {
            double norm2 = 0.0;
            for (std::size_t k = 0; k < walk.d; ++k) {
                const double v = static_cast<double>(path[n * walk.d + k]);
                norm2 += v * v;
            }
            hit = std::sqrt(norm2) >= threshold;
        }
        hits += hit ? 1 : 0;
    }
    ProbabilityEstimate e;
    const double n = static_cast<double>(samples);
    e.p = static_cast<double>(hits) / n;
    e.standard_error = std::sqrt(std::max(e.p * (1.0 - e.p), 1.0 / n) / n);
    return e;
}

// ============================================================================
// Kernels
// ============================================================================

Lattice polymer_lattice(const StableWalk& walk, std::size_t N, long long L, double V_N) {
    walk.validate();
    if (walk.d != 1) throw CapacityError("polymer lattices support d = 1 only");
    const double aN = walk.a_n(static_cast<double>(N));
    Lattice lat;
    lat.dim = 2;
    lat.time_axis = 0;
    lat.v_delta = 1.0 / (static_cast<double>(N) * aN);
    lat.V_delta = V_N;
    lat.J_delta = aN;
    lat.points.reserve(2 * N * static_cast<std::size_t>(2 * L + 1));
    for (std::size_t n = 1; n <= N; ++n)
        for (long long x = -L; x <= L; ++x) {
            lat.points.push_back(static_cast<double>(n) / static_cast<double>(N));
            lat.points.push_back(static_cast<double>(x) / aN);
        }
    return lat;
}

std::shared_ptr<ProductKernel> polymer_kernel_discrete(const StableWalk& walk, std::size_t N, long long L,
                                                       WindowMode mode) {
    walk.validate();
    if (walk.d != 1) throw CapacityError("polymer kernels support d = 1 only");
    if (N == 0 || L < 0) throw ParameterError("kernel needs N >= 1 and L >= 0");
    const double aN = walk.a_n(static_cast<double>(N));
    const auto W = static_cast<std::size_t>(2 * L + 1);
    const double Nd = static_cast<double>(N);
    auto k = std::make_shared<ProductKernel>();
    k->dim = 2;
    k->time_axis = 0;
    k->origin = {0.0, 0.0};
    k->normalizer = 1.0;

    if (mode == WindowMode::free_window) {
        if (static_cast<double>(N) * static_cast<double>(4 * L + 1) > 6.7e7) throw CapacityError("kernel table too large");
        // table[(m - 1) (4L + 1) + dx + 2L] = P(S_m = dx)
        auto table = std::make_shared<std::vector<double>>();
        table->reserve(N * static_cast<std::size_t>(4 * L + 1));
        std::vector<std::size_t> steps(N);
        for (std::size_t m = 1; m <= N; ++m) steps[m - 1] = m;
        for (const auto& pm : lattice_power_pmfs(walk.alpha, 1.0, steps, 2 * L)) {
            table->insert(table->end(), pm.begin(), pm.end());
        }
        k->step = [table, aN, Nd, L](std::span<const double> from, std::span<const double> to) {
            const long long m = std::llround(to[0] * Nd) - std::llround(from[0] * Nd);
            if (m <= 0) return 0.0;
            const long long dx = std::llround(to[1] * aN) - std::llround(from[1] * aN);
            if (dx < -2 * L || dx > 2 * L) return 0.0;
            return aN * (*table)[static_cast<std::size_t>(m - 1) * static_cast<std::size_t>(4 * L + 1) +
                                 static_cast<std::size_t>(dx + 2 * L)];
        };
        k->terminal = [](std::span<const double>) { return 1.0; };
        return k;
    }

    if (static_cast<double>(N + 1) * static_cast<double>(W) * static_cast<double>(W) > 1.7e7) {
        throw CapacityError("windowed transition table too large");
    }
    const auto pmf = lattice_step_pmf(walk.alpha, 1.0, 2 * L);
    // Q[m][x0][x1]: m-step transitions that stay in the window.
    auto Q = std::make_shared<std::vector<double>>((N + 1) * W * W, 0.0);
    auto surv = std::make_shared<std::vector<double>>((N + 1) * W, 0.0);
    for (std::size_t i = 0; i < W; ++i) (*Q)[i * W + i] = 1.0;
    for (std::size_t m = 1; m <= N; ++m) {
        const double* prev = Q->data() + (m - 1) * W * W;
        double* cur = Q->data() + m * W * W;
        for (std::size_t i = 0; i < W; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                const double pij = prev[i * W + j];
                if (pij == 0.0) continue;
                for (std::size_t l = 0; l < W; ++l) {
                    cur[i * W + l] += pij * pmf[static_cast<std::size_t>(static_cast<long long>(l) - static_cast<long long>(j) + 2 * L)];
                }
            }
    }
    for (std::size_t m = 0; m <= N; ++m)
        for (std::size_t i = 0; i < W; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < W; ++j) s += (*Q)[m * W * W + i * W + j];
            (*surv)[m * W + i] = s;
        }
    auto index = [aN, L](double y) -> long long { return std::llround(y * aN) + L; };
    k->step = [Q, W, aN, Nd, L, index](std::span<const double> from, std::span<const double> to) {
        const long long m = std::llround(to[0] * Nd) - std::llround(from[0] * Nd);
        if (m <= 0) return 0.0;
        const long long i = index(from[1]), j = index(to[1]);
        if (i < 0 || j < 0 || i > 2 * L || j > 2 * L) return 0.0;
        return aN * (*Q)[static_cast<std::size_t>(m) * W * W + static_cast<std::size_t>(i) * W + static_cast<std::size_t>(j)];
    };
    k->terminal = [surv, W, N, Nd, L, index](std::span<const double> x) {
        const long long n = std::llround(x[0] * Nd);
        const long long i = index(x[1]);
        if (n < 0 || n > static_cast<long long>(N) || i < 0 || i > 2 * L) return 0.0;
        return (*surv)[static_cast<std::size_t>(static_cast<long long>(N) - n) * W + static_cast<std::size_t>(i)];
    };
    return k;
}

std::shared_ptr<ProductKernel> polymer_kernel_continuum(const StableWalk& walk) {
    walk.validate();
    if (walk.d != 1) throw CapacityError("polymer kernels support d = 1 only");
    auto g = std::make_shared<StableDensity>(walk.alpha, 1);
    auto k = std::make_shared<ProductKernel>();
    k->dim = 2;
    k->time_axis = 0;
    k->origin = {0.0, 0.0};
    k->normalizer = 1.0;
    k->step = [g](std::span<const double> from, std::span<const double> to) {
        const double dt = to[0] - from[0];
        if (!(dt > 0.0)) return 0.0;
        return g->at(dt, to[1] - from[1]);
    };
    k->terminal = [](std::span<const double>) { return 1.0; };
    return k;
}

// ============================================================================
// Continuum proxy
// ============================================================================

struct ContinuumPolymerProxy::Plan {
    detail::WindowConvolver conv;
};

ContinuumPolymerProxy::ContinuumPolymerProxy(double alpha, double beta_hat, double gamma, double c_plus,
                                             double c_minus, double a, double A, std::size_t Mt,
                                             std::size_t Mx)
    : alpha_(alpha), beta_hat_(beta_hat), gamma_(gamma), c_plus_(c_plus), c_minus_(c_minus), a_(a), A_(A),
      Mt_(Mt), Mx_(Mx) {
    check_alpha(alpha);
    if (!(A > 0.0)) throw ParameterError("A must be positive");
    if (Mt < 64 || Mx < 65) throw ParameterError("mesh must have at least 64 cells per axis");
    if (Mx % 2 == 0) throw ParameterError("Mx must be odd so that a cell is centred at 0");
    if (beta_hat < 0.0) throw ParameterError("beta_hat must be nonnegative");
    dx_ = 4.0 * A / static_cast<double>(Mx);
    const double dt = 1.0 / static_cast<double>(Mt);
    const double scale = std::pow(dt, 1.0 / alpha) / dx_;
    auto pmf = lattice_step_pmf(alpha, scale, static_cast<long long>(Mx) - 1);
    plan_ = std::make_unique<Plan>(Plan{detail::WindowConvolver(std::move(pmf), Mx)});
    PointCloud empty;
    empty.domain = domain();
    empty.gamma = gamma;
    empty.c_plus = c_plus;
    empty.c_minus = c_minus;
    empty.a = a;
    empty.kappa = 0.0;
    mass_ = evaluate(empty);
}

ContinuumPolymerProxy::~ContinuumPolymerProxy() = default;

DomainBox ContinuumPolymerProxy::domain() const { return DomainBox{{0.0, -2.0 * A_}, {1.0, 2.0 * A_}}; }

double ContinuumPolymerProxy::evaluate(const PointCloud& cloud) const {
    if (cloud.domain.dim() != 2) throw ParameterError("polymer clouds live in (0,1) x (-2A, 2A)");
    struct Insertion {
        std::size_t step;
        std::size_t cell;
        double weight;
    };
    std::vector<Insertion> ins;
    ins.reserve(cloud.size());
    const double Mt = static_cast<double>(Mt_);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto p = cloud.position(i);
        const auto step = static_cast<std::size_t>(std::clamp(std::ceil(p[0] * Mt), 1.0, Mt));
        const double c = std::floor((p[1] + 2.0 * A_) / dx_);
        if (c < 0.0 || c >= static_cast<double>(Mx_)) continue;
        ins.push_back({step, static_cast<std::size_t>(c), beta_hat_ * cloud.marks[i] / dx_});
    }
    std::sort(ins.begin(), ins.end(), [](const Insertion& l, const Insertion& r) { return l.step < r.step; });

    const double damp = 1.0 - beta_hat_ * cloud.kappa / Mt;
    std::vector<double> u(Mx_, 0.0), v(Mx_);
    u[Mx_ / 2] = 1.0;
    auto ws = plan_->conv.workspace();
    std::size_t next = 0;
    for (std::size_t n = 1; n <= Mt_; ++n) {
        plan_->conv.apply(u.data(), v.data(), *ws);
        for (std::size_t j = 0; j < Mx_; ++j) u[j] = damp * v[j];
        for (; next < ins.size() && ins[next].step == n; ++next) u[ins[next].cell] += ins[next].weight * v[ins[next].cell];
    }
    double z = 0.0;
    for (double x : u) z += x;
    return z;
}

double ContinuumPolymerProxy::sample(std::uint64_t seed, std::uint64_t replica) const {
    return evaluate(sample_cloud(domain(), gamma_, c_plus_, c_minus_, a_, seed, replica));
}

}  // namespace levychaos
