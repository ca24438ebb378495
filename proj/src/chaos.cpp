#include "levychaos/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "levychaos/errors.hpp"
#include "levychaos/rng.hpp"

namespace levychaos {

namespace {

// Lexicographic with the time axis first.
bool time_less(std::span<const double> a, std::span<const double> b, std::size_t time_axis) {
    if (a[time_axis] != b[time_axis]) return a[time_axis] < b[time_axis];
    for (std::size_t d = 0; d < a.size(); ++d) {
        if (d == time_axis) continue;
        if (a[d] != b[d]) return a[d] < b[d];
    }
    return false;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void check_kernels(const std::vector<SymmetricKernelSpec>& kernels) {
    if (kernels.empty()) throw ParameterError("chaos needs at least the order-0 kernel");
    for (std::size_t k = 0; k < kernels.size(); ++k) {
        if (kernels[k].order != k) throw ParameterError("kernel list must be ordered 0..M");
        if (!kernels[k].evaluator) throw ParameterError("kernel without evaluator");
    }
}

// One shared product kernel behind orders 1..M, or null.
const ProductKernel* shared_product(const std::vector<SymmetricKernelSpec>& kernels) {
    if (kernels.size() < 2) return nullptr;
    const ProductKernel* p = kernels[1].product.get();
    for (std::size_t k = 1; k < kernels.size(); ++k) {
        if (kernels[k].form != KernelForm::markov_product || kernels[k].product.get() != p ||
            p == nullptr)
            return nullptr;
    }
    return p;
}

double factorial(std::size_t k) { return std::tgamma(static_cast<double>(k) + 1.0); }

}  // namespace

// ============================================================================
// Lattice and kernels
// ============================================================================

Lattice Lattice::cell_centers(const DomainBox& box, const std::vector<std::size_t>& cells_per_axis,
                              double V_delta, double J_delta) {
    box.validate();
    const std::size_t D = box.dim();
    if (cells_per_axis.size() != D) throw ParameterError("cells_per_axis must match the dimension");
    Lattice lat;
    lat.dim = D;
    lat.V_delta = V_delta;
    lat.J_delta = J_delta;
    std::size_t total = 1;
    lat.v_delta = 1.0;
    for (std::size_t d = 0; d < D; ++d) {
        if (cells_per_axis[d] == 0) throw ParameterError("empty mesh axis");
        total *= cells_per_axis[d];
        lat.v_delta *= (box.upper[d] - box.lower[d]) / static_cast<double>(cells_per_axis[d]);
    }
    lat.points.resize(total * D);
    std::vector<std::size_t> idx(D, 0);
    for (std::size_t c = 0; c < total; ++c) {
        for (std::size_t d = 0; d < D; ++d) {
            const double h = (box.upper[d] - box.lower[d]) / static_cast<double>(cells_per_axis[d]);
            lat.points[c * D + d] = box.lower[d] + (static_cast<double>(idx[d]) + 0.5) * h;
        }
        for (std::size_t d = D; d-- > 0;) {
            if (++idx[d] < cells_per_axis[d]) break;
            idx[d] = 0;
        }
    }
    return lat;
}

double ProductKernel::evaluate(std::span<const double> points) const {
    if (dim == 0 || points.size() % dim != 0) throw ParameterError("point list does not match dim");
    const std::size_t k = points.size() / dim;
    if (k == 0) return psi0();
    std::vector<std::size_t> ord(k);
    std::iota(ord.begin(), ord.end(), 0);
    auto pt = [&](std::size_t i) { return points.subspan(i * dim, dim); };
    std::sort(ord.begin(), ord.end(),
              [&](std::size_t a, std::size_t b) { return time_less(pt(a), pt(b), time_axis); });
    for (std::size_t j = 1; j < k; ++j) {
        if (pt(ord[j])[time_axis] == pt(ord[j - 1])[time_axis]) return 0.0;
    }
    if (pt(ord[0])[time_axis] <= origin[time_axis]) return 0.0;
    double v = step(origin, pt(ord[0]));
    for (std::size_t j = 1; j < k && v != 0.0; ++j) v *= step(pt(ord[j - 1]), pt(ord[j]));
    return v * terminal(pt(ord[k - 1])) / normalizer;
}

double ProductKernel::psi0() const { return terminal(origin) / normalizer; }

std::vector<SymmetricKernelSpec> product_kernel_family(std::shared_ptr<const ProductKernel> kernel,
                                                       std::size_t M) {
    if (!kernel) throw ParameterError("null product kernel");
    if (kernel->origin.size() != kernel->dim) throw ParameterError("origin must have dim entries");
    std::vector<SymmetricKernelSpec> out;
    for (std::size_t k = 0; k <= M; ++k) {
        SymmetricKernelSpec s;
        s.order = k;
        s.form = KernelForm::markov_product;
        s.product = kernel;
        s.evaluator = [kernel](std::span<const double> x) { return kernel->evaluate(x); };
        out.push_back(std::move(s));
    }
    return out;
}

// ============================================================================
// Results
// ============================================================================

nlohmann::json ChaosResult::to_json(const nlohmann::json& metadata) const {
    nlohmann::json j;
    j["per_order"] = per_order;
    j["total"] = total;
    j["M"] = M;
    j["metadata"] = metadata;
    return j;
}

std::string ChaosResult::csv_row() const {
    std::string s = std::to_string(M) + "," + fmt17(total);
    for (double x : per_order) s += "," + fmt17(x);
    return s;
}

// ============================================================================
// Markov product DP
// ============================================================================

MarkovChaosEngine::MarkovChaosEngine(const ProductKernel& kernel, const Lattice& lattice) {
    const std::size_t n = lattice.size();
    if (lattice.dim != kernel.dim) throw ParameterError("lattice and kernel dimensions differ");
    if (kernel.normalizer <= 0.0) throw ParameterError("normalizer must be positive");
    const std::size_t ta = kernel.time_axis;
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
        return time_less(lattice.point(a), lattice.point(b), ta);
    });
    row_start_.resize(n);
    row_len_.resize(n);
    std::size_t total = 0;
    std::size_t group_start = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j > 0 && lattice.point(order_[j])[ta] != lattice.point(order_[j - 1])[ta]) group_start = j;
        row_start_[j] = total;
        row_len_[j] = group_start;
        total += group_start;
    }
    if (total > (std::size_t{1} << 28)) throw CapacityError("step matrix exceeds 2^28 entries");
    steps_.resize(total);
    origin_step_.resize(n);
    terminal_.resize(n);
    const std::span<const double> origin(kernel.origin);
    for (std::size_t j = 0; j < n; ++j) {
        const auto xj = lattice.point(order_[j]);
        origin_step_[j] = xj[ta] > origin[ta] ? kernel.step(origin, xj) : 0.0;
        terminal_[j] = kernel.terminal(xj);
        double* row = steps_.data() + row_start_[j];
        for (std::size_t i = 0; i < row_len_[j]; ++i) row[i] = kernel.step(lattice.point(order_[i]), xj);
    }
    normalizer_ = kernel.normalizer;
    psi0_ = kernel.psi0();
}

ChaosResult MarkovChaosEngine::evaluate(std::span<const double> weights, double beta_hat,
                                        std::size_t M) const {
    const std::size_t n = order_.size();
    if (weights.size() != n) throw ParameterError("weights must have one entry per site");
    ChaosResult r;
    r.M = M;
    r.per_order.assign(M + 1, 0.0);
    r.per_order[0] = psi0_;
    std::vector<double> w(n), prev(n), cur(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = weights[order_[j]];
    double bk = 1.0;
    for (std::size_t k = 1; k <= M; ++k) {
        bk *= beta_hat;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s;
            if (k == 1) {
                s = origin_step_[j];
            } else {
                const double* row = steps_.data() + row_start_[j];
                s = 0.0;
                for (std::size_t i = 0; i < row_len_[j]; ++i) s += row[i] * prev[i];
            }
            cur[j] = w[j] * s;
            acc += cur[j] * terminal_[j];
        }
        r.per_order[k] = bk * acc / normalizer_;
        std::swap(prev, cur);
    }
    r.total = std::accumulate(r.per_order.begin(), r.per_order.end(), 0.0);
    return r;
}

double MarkovChaosEngine::evaluate_total(std::span<const double> weights, double beta_hat) const {
    const std::size_t n = order_.size();
    if (weights.size() != n) throw ParameterError("weights must have one entry per site");
    std::vector<double> g(n);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double* row = steps_.data() + row_start_[j];
        double s = 0.0;
        for (std::size_t i = 0; i < row_len_[j]; ++i) s += row[i] * g[i];
        g[j] = beta_hat * weights[order_[j]] * (origin_step_[j] + s);
        acc += g[j] * terminal_[j];
    }
    return psi0_ + acc / normalizer_;
}

std::vector<double> MarkovChaosEngine::ordered_q_sums(double q, std::size_t M) const {
    const std::size_t n = order_.size();
    std::vector<double> out(M + 1, 0.0);
    out[0] = std::pow(std::abs(psi0_), q);
    std::vector<double> prev(n), cur(n);
    const double nq = std::pow(normalizer_, q);
    for (std::size_t k = 1; k <= M; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s;
            if (k == 1) {
                s = std::pow(std::abs(origin_step_[j]), q);
            } else {
                const double* row = steps_.data() + row_start_[j];
                s = 0.0;
                for (std::size_t i = 0; i < row_len_[j]; ++i) s += std::pow(std::abs(row[i]), q) * prev[i];
            }
            cur[j] = s;
            acc += s * std::pow(std::abs(terminal_[j]), q);
        }
        out[k] = acc / nq;
        std::swap(prev, cur);
    }
    return out;
}

// ============================================================================
// Discrete chaos
// ============================================================================

ChaosResult discrete_chaos_enumerate(const std::vector<SymmetricKernelSpec>& kernels,
                                     const Lattice& lattice, std::span<const double> disorder,
                                     double beta_hat) {
    check_kernels(kernels);
    const std::size_t n = lattice.size();
    const std::size_t D = lattice.dim;
    if (disorder.size() != n) throw ParameterError("disorder length must equal the site count");
    const std::size_t M = kernels.size() - 1;
    if (M > 3 || n > 40) throw CapacityError("enumeration is limited to k <= 3 and 40 sites");
    ChaosResult r;
    r.M = M;
    r.per_order.assign(M + 1, 0.0);
    r.per_order[0] = kernels[0].evaluate({});
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = disorder[i] / lattice.V_delta;
    std::vector<double> buf(3 * D);
    std::vector<std::size_t> idx(3);
    for (std::size_t k = 1; k <= M; ++k) {
        double acc = 0.0;
        std::size_t tuples = 1;
        for (std::size_t j = 0; j < k; ++j) tuples *= n;
        for (std::size_t t = 0; t < tuples; ++t) {
            std::size_t rem = t;
            bool distinct = true;
            double prod = 1.0;
            for (std::size_t j = 0; j < k; ++j) {
                idx[j] = rem % n;
                rem /= n;
                for (std::size_t m = 0; m < j; ++m) distinct = distinct && idx[m] != idx[j];
                prod *= w[idx[j]];
                const auto p = lattice.point(idx[j]);
                std::copy(p.begin(), p.end(), buf.begin() + static_cast<std::ptrdiff_t>(j * D));
            }
            if (!distinct || prod == 0.0) continue;
            acc += kernels[k].evaluate(std::span<const double>(buf.data(), k * D)) * prod;
        }
        r.per_order[k] = std::pow(beta_hat, static_cast<double>(k)) / factorial(k) * acc;
    }
    r.total = std::accumulate(r.per_order.begin(), r.per_order.end(), 0.0);
    return r;
}

ChaosResult discrete_chaos(const std::vector<SymmetricKernelSpec>& kernels, const Lattice& lattice,
                           std::span<const double> disorder, double beta_hat) {
    check_kernels(kernels);
    if (beta_hat < 0.0) throw ParameterError("beta_hat must be nonnegative");
    if (disorder.size() != lattice.size()) throw ParameterError("disorder length must equal the site count");
    const ProductKernel* p = shared_product(kernels);
    if (p == nullptr) return discrete_chaos_enumerate(kernels, lattice, disorder, beta_hat);
    MarkovChaosEngine engine(*p, lattice);
    std::vector<double> w(disorder.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = disorder[i] / lattice.V_delta;
    auto r = engine.evaluate(w, beta_hat, kernels.size() - 1);
    r.per_order[0] = kernels[0].evaluate({});
    r.total = std::accumulate(r.per_order.begin(), r.per_order.end(), 0.0);
    return r;
}

// ============================================================================
// Continuum chaos
// ============================================================================

std::vector<double> mesh_masses(const PointCloud& cloud,
                                const std::vector<std::size_t>& cells_per_axis) {
    const auto& box = cloud.domain;
    const std::size_t D = box.dim();
    if (cells_per_axis.size() != D) throw ParameterError("cells_per_axis must match the dimension");
    std::size_t total = 1;
    double vol = 1.0;
    for (std::size_t d = 0; d < D; ++d) {
        total *= cells_per_axis[d];
        vol *= (box.upper[d] - box.lower[d]) / static_cast<double>(cells_per_axis[d]);
    }
    std::vector<double> m(total, -cloud.kappa * vol);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto x = cloud.position(i);
        std::size_t c = 0;
        for (std::size_t d = 0; d < D; ++d) {
            const double u = (x[d] - box.lower[d]) / (box.upper[d] - box.lower[d]);
            const auto n = cells_per_axis[d];
            const auto j = std::min(n - 1, static_cast<std::size_t>(std::max(0.0, u) * static_cast<double>(n)));
            c = c * n + j;
        }
        m[c] += cloud.marks[i];
    }
    return m;
}

namespace {

double ts_integrate(const std::function<double(double)>& f, double lo, double hi, bool strict = true) {
    if (!(hi - lo > 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)}))) return 0.0;
    // Stay off the endpoints by more than the coordinate round-off: kernels see
    // differences of coordinates and vanish on exact ties.
    boost::math::quadrature::tanh_sinh<double> ts(15, 1e-14);
    double err = 0.0, l1 = 0.0;
    const double v = ts.integrate(f, lo, hi, 1e-9, &err, &l1);
    if (!std::isfinite(v) || (strict && err > 1e-5 * std::max(1.0, l1))) {
        throw NumericalError("tanh-sinh quadrature did not converge on [" + std::to_string(lo) + ", " + std::to_string(hi) + "], error " + std::to_string(err) + " of " + std::to_string(l1));
    }
    return v;
}

ChaosResult continuum_exact(const std::vector<SymmetricKernelSpec>& kernels, const PointCloud& cloud,
                            double beta_hat) {
    const std::size_t M = kernels.size() - 1;
    if (M > 2) throw CapacityError("exact continuum chaos supports k <= 2 only");
    if (cloud.domain.dim() != 1) throw CapacityError("exact continuum chaos supports D = 1 only");
    const double lo = cloud.domain.lower[0], hi = cloud.domain.upper[0];
    const double kappa = cloud.kappa;
    const std::size_t n = cloud.size();
    ChaosResult r;
    r.M = M;
    r.per_order.assign(M + 1, 0.0);
    r.per_order[0] = kernels[0].evaluate({});
    if (M >= 1) {
        const auto& k1 = kernels[1];
        auto f1 = [&](double x) { return k1.evaluate(std::span<const double>(&x, 1)); };
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += cloud.marks[i] * f1(cloud.positions[i]);
        if (kappa != 0.0) s -= kappa * ts_integrate(f1, lo, hi);
        r.per_order[1] = beta_hat * s;
    }
    if (M >= 2) {
        const auto& k2 = kernels[2];
        auto f2 = [&](double x, double y) {
            const double p[2] = {x, y};
            return k2.evaluate(std::span<const double>(p, 2));
        };
        double atoms = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) atoms += cloud.marks[i] * cloud.marks[j] * f2(cloud.positions[i], cloud.positions[j]);
        double mixed = 0.0, leb = 0.0;
        if (kappa != 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                const double x = cloud.positions[i];
                auto g = [&](double y) { return f2(x, y); };
                mixed += cloud.marks[i] * (ts_integrate(g, lo, x) + ts_integrate(g, x, hi));
            }
            auto inner = [&](double x) {
                // Near the upper end the offsets fall below coordinate round-off.
                return ts_integrate([&](double y) { return f2(x, y); }, x, hi, false);
            };
            leb = 2.0 * ts_integrate(inner, lo, hi);
        }
        r.per_order[2] = 0.5 * beta_hat * beta_hat * (atoms - 2.0 * kappa * mixed + kappa * kappa * leb);
    }
    r.total = std::accumulate(r.per_order.begin(), r.per_order.end(), 0.0);
    return r;
}

}  // namespace

ChaosResult continuum_chaos(const std::vector<SymmetricKernelSpec>& kernels, const PointCloud& cloud,
                            double beta_hat, std::size_t mesh, ContinuumPath path) {
    check_kernels(kernels);
    if (beta_hat < 0.0) throw ParameterError("beta_hat must be nonnegative");
    if (path == ContinuumPath::exact) return continuum_exact(kernels, cloud, beta_hat);
    if (mesh < 64) throw ParameterError("mesh must have at least 64 cells per axis");

    // Atoms keep their exact positions; the compensator is carried by cell centers.
    const auto& box = cloud.domain;
    const std::size_t D = box.dim();
    auto lat = Lattice::cell_centers(box, std::vector<std::size_t>(D, mesh));
    const std::size_t cells = lat.size();
    std::vector<double> w(cells, -cloud.kappa * lat.v_delta);
    lat.points.insert(lat.points.end(), cloud.positions.begin(), cloud.positions.end());
    w.insert(w.end(), cloud.marks.begin(), cloud.marks.end());

    const std::size_t M = kernels.size() - 1;
    ChaosResult r;
    if (const ProductKernel* p = shared_product(kernels)) {
        r = MarkovChaosEngine(*p, lat).evaluate(w, beta_hat, M);
        r.per_order[0] = kernels[0].evaluate({});
    } else if (M >= 2) {
        r = discrete_chaos_enumerate(kernels, lat, w, beta_hat);
    } else {
        r.M = M;
        r.per_order.assign(M + 1, 0.0);
        r.per_order[0] = kernels[0].evaluate({});
    }
    // Order one is the pairing itself; use the exact integral of the kernel.
    if (M >= 1 && D <= 3) {
        const auto& k1 = kernels[1];
        const TestFunction f = [&](std::span<const double> x) { return k1.evaluate(x); };
        r.per_order[1] = beta_hat * pair_with_test_function(cloud, f,
                                                            cloud.kappa == 0.0 ? 0.0 : box_integral(box, f));
    }
    r.total = std::accumulate(r.per_order.begin(), r.per_order.end(), 0.0);
    return r;
}

// ============================================================================
// Norms and bounds
// ============================================================================

SymNorm symmetric_norm(const SymmetricKernelSpec& kernel, const Lattice& lattice, double q) {
    if (!(q > 1.0 && q <= 2.0)) throw ParameterError("q must lie in (1, 2]");
    const std::size_t k = kernel.order;
    const double vk = std::pow(lattice.v_delta, static_cast<double>(k));
    if (k == 0) return {q, std::abs(kernel.evaluate({}))};
    if (kernel.form == KernelForm::markov_product && kernel.product) {
        MarkovChaosEngine engine(*kernel.product, lattice);
        const auto sums = engine.ordered_q_sums(q, k);
        return {q, std::pow(vk * sums[k], 1.0 / q)};
    }
    const std::size_t n = lattice.size();
    const std::size_t D = lattice.dim;
    if (k > 3 || n > 40) throw CapacityError("enumeration is limited to k <= 3 and 40 sites");
    std::size_t tuples = 1;
    for (std::size_t j = 0; j < k; ++j) tuples *= n;
    std::vector<double> buf(k * D);
    double acc = 0.0;
    for (std::size_t t = 0; t < tuples; ++t) {
        std::size_t rem = t;
        for (std::size_t j = 0; j < k; ++j) {
            const auto p = lattice.point(rem % n);
            rem /= n;
            std::copy(p.begin(), p.end(), buf.begin() + static_cast<std::ptrdiff_t>(j * D));
        }
        acc += std::pow(std::abs(kernel.evaluate(buf)), q);
    }
    return {q, std::pow(vk / factorial(k) * acc, 1.0 / q)};
}

SymNorm symmetric_norm_power_product(double rho, std::size_t k, double q) {
    if (!(q > 1.0 && q <= 2.0)) throw ParameterError("q must lie in (1, 2]");
    const double xi = 1.0 - q * (1.0 - rho);
    if (!(xi > 0.0)) throw ParameterError("kernel is not in L^q: xi <= 0");
    const double kk = static_cast<double>(k);
    const double log_val = kk * std::lgamma(xi) - std::lgamma(kk * xi + 1.0);
    return {q, std::exp(log_val / q)};
}

double simplex_integral(double xi, std::size_t k, double t) {
    if (!(xi > 0.0)) throw ParameterError("simplex integral diverges for xi <= 0");
    if (k == 0) throw ParameterError("k must be positive");
    if (!(t > 0.0)) throw ParameterError("t must be positive");
    const double m = static_cast<double>(k + 1);
    return std::exp((m * xi - 1.0) * std::log(t) + m * std::lgamma(xi) - std::lgamma(m * xi));
}

double moment_bound_constant(double p, double q, double gamma, double domain_volume, double C1) {
    if (!(1.0 < p && p < gamma && gamma < q && q <= 2.0)) {
        throw ParameterError("need 1 < p < gamma < q <= 2");
    }
    if (!(C1 > 0.0) || !(domain_volume > 0.0)) throw ParameterError("C1 and volume must be positive");
    const double m = std::max(std::pow(gamma - p, -1.0 / p), std::pow(q - gamma, -1.0 / q));
    return C1 / (p - 1.0) * m * std::pow(std::max(domain_volume, 1.0), 1.0 / p - 1.0 / q);
}

nlohmann::json MomentBoundReport::to_json() const {
    nlohmann::json j;
    j["p"] = p;
    j["q"] = q;
    j["chaos_pnorm"] = chaos_pnorm;
    j["kernel_qnorm"] = kernel_qnorm;
    j["ratios"] = ratios;
    j["log_fit"] = {{"slope", log_fit.slope}, {"intercept", log_fit.intercept}, {"r2", log_fit.r2}};
    j["C_hat"] = C_hat;
    j["C_calibration"] = C_calibration;
    j["bound_holds"] = bound_holds;
    j["warnings"] = warnings;
    nlohmann::json ci = nlohmann::json::array();
    for (const auto& m : chaos_pnorm_ci) ci.push_back({m.lower, m.upper});
    j["chaos_pnorm_ci"] = ci;
    return j;
}

MomentBoundReport empirical_moment_bound_check(const std::vector<SymmetricKernelSpec>& kernels,
                                               const TailLaw& law, const Lattice& lattice, double p,
                                               double q, std::size_t replicas, std::uint64_t seed,
                                               double C_calibration) {
    check_kernels(kernels);
    law.validate();
    if (!(1.0 < p && p < law.gamma && law.gamma < q && q <= 2.0)) {
        throw ParameterError("need 1 < p < gamma < q <= 2");
    }
    if (replicas < 2) throw ParameterError("need at least two replicas");
    const std::size_t M = kernels.size() - 1;
    const std::size_t n = lattice.size();
    MomentBoundReport rep;
    rep.p = p;
    rep.q = q;

    std::vector<std::vector<double>> xs(M + 1, std::vector<double>(replicas));
    const ProductKernel* prod = shared_product(kernels);
    std::unique_ptr<MarkovChaosEngine> engine;
    if (prod) engine = std::make_unique<MarkovChaosEngine>(*prod, lattice);
    std::vector<double> omega(n), w(n);
    for (std::size_t r = 0; r < replicas; ++r) {
        fill_disorder(law, derive_key(seed, r, Purpose::disorder), omega);
        ChaosResult c;
        if (engine) {
            for (std::size_t i = 0; i < n; ++i) w[i] = omega[i] / lattice.V_delta;
            c = engine->evaluate(w, 1.0, M);
        } else {
            c = discrete_chaos_enumerate(kernels, lattice, omega, 1.0);
        }
        for (std::size_t k = 1; k <= M; ++k) xs[k][r] = c.per_order[k];
    }

    std::vector<double> ks, logs;
    for (std::size_t k = 1; k <= M; ++k) {
        const auto est = bootstrap_moment(xs[k], p, 200, derive_key(seed, k, Purpose::bootstrap));
        rep.chaos_pnorm.push_back(est.estimate);
        rep.chaos_pnorm_ci.push_back(est);
        const double norm = symmetric_norm(kernels[k], lattice, q).value;
        rep.kernel_qnorm.push_back(norm);
        const double ratio = norm > 0.0 ? est.estimate / norm : 0.0;
        rep.ratios.push_back(ratio);
        if (ratio > 0.0) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(std::log(ratio));
            rep.C_hat = std::max(rep.C_hat, std::pow(ratio, 1.0 / static_cast<double>(k)));
        }
        if (est.upper > 2.0 * est.lower && est.lower > 0.0) {
            rep.warnings.push_back("order " + std::to_string(k) + ": p-norm CI wider than 2x");
        }
    }
    if (ks.size() >= 2) rep.log_fit = linear_fit(ks, logs);
    rep.C_calibration = C_calibration > 0.0 ? C_calibration : rep.C_hat;
    rep.bound_holds = true;
    for (std::size_t k = 1; k <= M; ++k) {
        const double bound = std::pow(rep.C_calibration, static_cast<double>(k));
        if (rep.ratios[k - 1] > bound * (1.0 + 1e-12)) rep.bound_holds = false;
    }
    return rep;
}

}  // namespace levychaos
