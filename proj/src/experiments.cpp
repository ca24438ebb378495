#include "levychaos/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "levychaos/chaos.hpp"
#include "levychaos/errors.hpp"
#include "levychaos/heavy_tail.hpp"
#include "levychaos/levy_noise.hpp"
#include "levychaos/polymer.hpp"
#include "levychaos/renewal_pinning.hpp"
#include "levychaos/rng.hpp"

namespace levychaos {

namespace {

using json = nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent base seed per experiment and sub-run.
std::uint64_t sub_seed(const RunContext& ctx, const std::string& tag, std::uint64_t extra = 0) {
    return mix64(ctx.seed ^ fnv1a(tag) ^ (extra * kGolden));
}

std::string run_label(const std::string& name, const json& params, std::uint64_t seed) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(params.dump() + "#" + std::to_string(seed))));
    return name + "-" + buf;
}

class Stopwatch {
public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

template <class T>
T get(const json& p, const char* key, T fallback) {
    return p.contains(key) ? p.at(key).get<T>() : fallback;
}

CriterionResult make_result(int id, std::string name) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    return r;
}

Table make_table(std::string name, std::vector<std::string> columns) {
    Table t;
    t.name = std::move(name);
    t.columns = std::move(columns);
    return t;
}

Check le(std::string name, double value, double threshold, std::string note = {}) {
    return Check{std::move(name), value <= threshold, value, threshold, std::move(note)};
}

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t j) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][j];
    return out;
}

}  // namespace

// ============================================================================
// Context helpers
// ============================================================================

unsigned resolve_threads(std::optional<unsigned> flag) {
    if (flag && *flag > 0) return *flag;
    if (const char* env = std::getenv("LEVYCHAOS_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v < 4096) return static_cast<unsigned>(v);
        throw ParameterError(std::string("LEVYCHAOS_THREADS must be a positive integer, got '") + env + "'");
    }
    return 1;
}

namespace {

#define LEVYCHAOS_TOLERANCES(X)                                                                       \
    X(identity_rel_tol) X(doney_rel_tol) X(ml_Z_rel_tol) X(ml_Zc_rel_tol) X(ml_exp_abs_tol)            \
    X(simplex_se_band) X(cf_abs_tol) X(martingale_se_band) X(lp_spread_max) X(ks_noise_band)           \
    X(ks_pinning_final) X(ks_polymer_final) X(pnorm_rel_tol) X(truncation_se_band) X(weak_mean_lo)     \
    X(weak_mean_hi) X(strong_median_max) X(truncated_moment_rel_tol) X(llt_sup_tol) X(llt_noise)       \
    X(geometric_r2_min) X(refinement_spread_max)

}  // namespace

void apply_tolerance_overrides(AcceptanceTable& table, const json& overrides) {
    if (overrides.is_null()) return;
    if (!overrides.is_object()) throw ParameterError("tolerances must be an object");
    for (const auto& [key, value] : overrides.items()) {
        if (!value.is_number()) throw ParameterError("tolerance '" + key + "' must be a number");
        bool found = false;
#define LEVYCHAOS_SET(field)            \
    if (key == #field) {                \
        table.field = value.get<double>(); \
        found = true;                   \
    }
        LEVYCHAOS_TOLERANCES(LEVYCHAOS_SET)
#undef LEVYCHAOS_SET
        if (!found) throw ParameterError("unknown tolerance '" + key + "'");
    }
}

json tolerance_table_json(const AcceptanceTable& table) {
    json j = json::object();
#define LEVYCHAOS_GET(field) j[#field] = table.field;
    LEVYCHAOS_TOLERANCES(LEVYCHAOS_GET)
#undef LEVYCHAOS_GET
    return j;
}

std::vector<std::vector<double>> run_replicas(const RunContext& ctx, const std::string& label, std::size_t n,
                                              std::size_t width,
                                              const std::function<void(std::uint64_t, std::span<double>)>& fn) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(width, 0.0));
    std::vector<char> done(n, 0);
    std::unique_ptr<std::ofstream> sink;
    if (ctx.checkpoint_dir) {
        std::filesystem::create_directories(*ctx.checkpoint_dir);
        const auto path = *ctx.checkpoint_dir / (label + ".csv");
        std::ifstream in(path);
        std::string line;
        std::size_t loaded = 0;
        while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells.size() != width + 1) continue;  // partial trailing write
            try {
                const auto r = static_cast<std::size_t>(std::stoull(cells[0]));
                if (r >= n) continue;
                for (std::size_t j = 0; j < width; ++j) rows[r][j] = std::stod(cells[j + 1]);
                if (!done[r]) ++loaded;
                done[r] = 1;
            } catch (const std::exception&) {
                continue;
            }
        }
        if (loaded > 0) ctx.note(label + ": resumed " + std::to_string(loaded) + " replicas");
        sink = std::make_unique<std::ofstream>(path, std::ios::app);
        if (!*sink) throw ParameterError("cannot write checkpoint " + path.string());
    }

    std::atomic<std::size_t> next{0};
    std::mutex io;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= n) return;
            if (done[r]) continue;
            {
                std::lock_guard<std::mutex> lock(io);
                if (failure) return;
            }
            try {
                fn(r, std::span<double>(rows[r]));
            } catch (...) {
                std::lock_guard<std::mutex> lock(io);
                if (!failure) failure = std::current_exception();
                return;
            }
            if (sink) {
                std::string out = std::to_string(r);
                for (double v : rows[r]) out += "," + fmt17(v);
                out += "\n";
                std::lock_guard<std::mutex> lock(io);
                *sink << out;
                sink->flush();
            }
        }
    };
    const unsigned t = std::max(1u, std::min<unsigned>(ctx.threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

std::vector<double> run_replicas(const RunContext& ctx, const std::string& label, std::size_t n,
                                 const std::function<double(std::uint64_t)>& fn) {
    const auto rows = run_replicas(ctx, label, n, 1, [&](std::uint64_t r, std::span<double> row) { row[0] = fn(r); });
    return column(rows, 0);
}

// ============================================================================
// Tables and results
// ============================================================================

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return fmt17(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return csv_field(std::get<std::string>(c));
}

}  // namespace

void Table::write_csv(std::ostream& os) const {
    for (std::size_t j = 0; j < columns.size(); ++j) os << (j ? "," : "") << csv_field(columns[j]);
    os << "\r\n";
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << cell_text(row[j]);
        os << "\r\n";
    }
}

json Table::to_json() const {
    json rows_j = json::array();
    for (const auto& row : rows) {
        json r = json::object();
        for (std::size_t j = 0; j < row.size() && j < columns.size(); ++j) {
            std::visit([&](const auto& v) { r[columns[j]] = v; }, row[j]);
        }
        rows_j.push_back(std::move(r));
    }
    return json{{"name", name}, {"rows", rows_j}};
}

bool CriterionResult::passed() const {
    if (checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string CriterionResult::summary_line() const {
    std::string s = passed() ? "PASS" : "FAIL";
    s += " " + std::string(id < 10 ? " " : "") + std::to_string(id) + "  " + name + ":";
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto& c = checks[i];
        s += (i ? "; " : " ") + c.name + " " + fmt_short(c.value) + (c.passed ? " ok" : " FAILED") + " (limit " +
             fmt_short(c.threshold) + (c.note.empty() ? "" : ", " + c.note) + ")";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, " [%.1f s]", seconds);
    return s + buf;
}

json CriterionResult::to_json() const {
    json cs = json::array();
    for (const auto& c : checks) {
        cs.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold},
                      {"note", c.note}});
    }
    json ts = json::array();
    for (const auto& t : tables) ts.push_back(t.to_json());
    return json{{"id", id},          {"name", name},     {"passed", passed()}, {"checks", cs},
                {"seconds", seconds}, {"detail", detail}, {"tables", ts}};
}

// ============================================================================
// 1. Pinning: transfer DP against the full chaos expansion
// ============================================================================

CriterionResult pinning_chaos_identity(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(1, "exact chaos identity (pinning)");
    const auto configs = get<std::size_t>(p, "configs", 100);
    const auto N = get<std::size_t>(p, "N", 12);
    CounterRng draw(derive_key(sub_seed(ctx, "pinning-identity"), 0, Purpose::config));
    auto t = make_table("pinning_identity", {"config", "alpha", "gamma", "h_hat", "beta", "dp_Z", "chaos_Z", "rel_err"});
    double worst = 0.0;
    for (std::size_t c = 0; c < configs; ++c) {
        const double alpha = 0.4 + 0.5 * draw.uniform();
        const double gamma = 1.2 + 0.6 * draw.uniform();
        const double h_hat = -1.0 + 3.0 * draw.uniform();
        const double beta = draw.uniform();
        const auto kernel = make_kernel(alpha, N);
        const auto law = TailLaw::one_sided(gamma);
        const double V = solve_noise_scale(law, 1.0 / static_cast<double>(N));
        auto params = PinningParams::from_continuum(kernel, N, h_hat, 0.0, V);
        params.beta = beta;
        std::vector<double> omega(N);
        fill_disorder(law, derive_key(sub_seed(ctx, "pinning-identity-disorder"), c, Purpose::disorder), omega);
        const double dp = disordered_pinning_Z(kernel, params, omega);
        const auto fam = product_kernel_family(discrete_pinning_product_kernel(kernel, params.h, N), N);
        const double chaos = discrete_chaos(fam, pinning_lattice(N, V), omega, beta * kernel.u[N] * V).total;
        const double rel = std::abs(dp - chaos) / std::abs(dp);
        worst = std::max(worst, rel);
        t.add({static_cast<long long>(c), alpha, gamma, h_hat, beta, dp, chaos, rel});
    }
    res.checks.push_back(le("max rel err", worst, ctx.tol.identity_rel_tol));
    res.tables.push_back(std::move(t));
    res.detail = {{"configs", configs}, {"N", N}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 2. Polymer: path enumeration, chaos expansion and transfer DP
// ============================================================================

CriterionResult polymer_chaos_identity(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(2, "exact chaos identity (polymer)");
    const auto configs = get<std::size_t>(p, "configs", 50);
    const auto N = get<std::size_t>(p, "N", 8);
    const auto L = get<long long>(p, "window", 8);
    CounterRng draw(derive_key(sub_seed(ctx, "polymer-identity"), 0, Purpose::config));
    auto t = make_table("polymer_identity", {"config", "alpha", "gamma", "beta", "enumeration_Z", "chaos_Z", "dp_Z",
                                              "chaos_rel_err", "dp_rel_err"});
    double worst_chaos = 0.0, worst_dp = 0.0;
    for (std::size_t c = 0; c < configs; ++c) {
        const double alpha = 1.1 + 0.8 * draw.uniform();
        const double gamma = 1.2 + 0.6 * draw.uniform();
        const double beta = draw.uniform();
        const StableWalk walk{alpha};
        const auto law = TailLaw::one_sided(gamma);
        const double V = PolymerParams::noise_scale(walk, N, law);
        const auto field = sample_disorder_field(law, N, L, sub_seed(ctx, "polymer-identity-disorder"), c);
        const double enumerated = enumerate_polymer_Z(walk, N, L, field, beta);

        const auto kernel = polymer_kernel_discrete(walk, N, L, WindowMode::hard_window);
        const MarkovChaosEngine engine(*kernel, polymer_lattice(walk, N, L, V));
        std::vector<double> w(field.values.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = field.values[i] / V;
        const double chaos = engine.evaluate_total(w, beta * V / walk.a_n(static_cast<double>(N)));
        const double dp = PolymerDP(walk, N, L).Z(field, beta);
        const double rc = std::abs(chaos - enumerated) / std::abs(enumerated);
        const double rd = std::abs(dp - enumerated) / std::abs(enumerated);
        worst_chaos = std::max(worst_chaos, rc);
        worst_dp = std::max(worst_dp, rd);
        t.add({static_cast<long long>(c), alpha, gamma, beta, enumerated, chaos, dp, rc, rd});
    }
    res.checks.push_back(le("chaos vs enumeration", worst_chaos, ctx.tol.identity_rel_tol));
    res.checks.push_back(le("DP vs enumeration", worst_dp, ctx.tol.identity_rel_tol));
    res.tables.push_back(std::move(t));
    res.detail = {{"configs", configs}, {"N", N}, {"window", L}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 3. Renewal constant
// ============================================================================

CriterionResult renewal_constant_check(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(3, "renewal mass constant");
    const auto N = get<std::size_t>(p, "N", 30'000);
    const auto alphas = get<std::vector<double>>(p, "alphas", {0.3, 0.5, 0.8});
    auto t = make_table("renewal_constant", {"alpha", "N", "u_N", "normalized", "limit", "ratio"});
    for (double alpha : alphas) {
        const auto k = make_kernel(alpha, N);
        const double normalized = k.u[N] * k.c0 * std::pow(static_cast<double>(N), 1.0 - alpha);
        const double ratio = normalized / k.renewal_constant();
        t.add({alpha, static_cast<long long>(N), k.u[N], normalized, k.renewal_constant(), ratio});
        res.checks.push_back(le("alpha=" + fmt_short(alpha) + " |ratio-1|", std::abs(ratio - 1.0), ctx.tol.doney_rel_tol));
    }
    res.tables.push_back(std::move(t));
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 4. Homogeneous limits
// ============================================================================

CriterionResult homogeneous_limits(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(4, "Mittag-Leffler limits");
    const double alpha = get<double>(p, "alpha", 0.5);
    const double h_hat = get<double>(p, "h_hat", 1.0);
    const auto N = get<std::size_t>(p, "N", 20'000);
    const auto lim = continuum_pinning(alpha, h_hat, 1.0);

    auto t = make_table("homogeneous_limits", {"N", "Z_N", "E_alpha", "Z_rel_dev", "sqrtN_dev", "Zc_ratio", "Zc_rel_dev"});
    double z_dev = 0.0, zc_dev = 0.0;
    std::vector<double> ladder{static_cast<double>(N) / 2, static_cast<double>(N), 2.0 * static_cast<double>(N)};
    std::vector<double> zs;
    for (double Nd : ladder) {
        const auto n = static_cast<std::size_t>(Nd);
        const auto k = make_kernel(alpha, n);
        const auto z = homogeneous_Z(k, h_hat / (Nd * k.u[n]), n);
        const double dev = z.Z_free / lim.Z - 1.0;
        const double zc = z.Zc[n] / k.u[n] / lim.Zc;
        t.add({static_cast<long long>(n), z.Z_free, lim.Z, dev, std::sqrt(Nd) * dev, zc, zc - 1.0});
        zs.push_back(z.Z_free);
        if (n == N) {
            z_dev = std::abs(dev);
            zc_dev = std::abs(zc - 1.0);
        }
    }
    res.checks.push_back(le("|Z_N/E - 1|", z_dev, ctx.tol.ml_Z_rel_tol));
    res.checks.push_back(le("|Zc_N/(u Zc) - 1|", zc_dev, ctx.tol.ml_Zc_rel_tol));

    double e1 = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double z = -5.0 + 0.01 * i;
        e1 = std::max({e1, std::abs(mittag_leffler(1.0, z) - std::exp(z)),
                       std::abs(mittag_leffler_standard(1.0, 1.0, z) - std::exp(z))});
    }
    res.checks.push_back(le("max |E_1(z) - e^z|", e1, ctx.tol.ml_exp_abs_tol));
    // Bias ~ N^(alpha - 1): two-point extrapolation from N/2 and 2N.
    const double rich = (2.0 * zs[2] - zs[0]) / lim.Z - 1.0;
    res.detail = {{"extrapolated_rel_dev", rich}, {"alpha", alpha}, {"h_hat", h_hat}};
    res.tables.push_back(std::move(t));
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 5. Gamma-simplex identity
// ============================================================================

CriterionResult simplex_identity(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(5, "gamma-simplex identity");
    const auto points = get<std::size_t>(p, "points", 1'000'000);
    const auto xis = get<std::vector<double>>(p, "xi", {0.3, 0.5, 1.0});
    const auto kmax = get<std::size_t>(p, "k_max", 4);
    auto t = make_table("simplex", {"xi", "k", "closed_form", "mc_mean", "mc_se", "z_score"});
    double worst = 0.0;
    std::size_t case_id = 0;
    for (double xi : xis) {
        for (std::size_t k = 1; k <= kmax; ++k, ++case_id) {
            // Dirichlet(xi/2) proposals on the k+1 gaps keep the weights bounded.
            const std::size_t m = k + 1;
            const double eta = xi / 2.0;
            const double log_norm = static_cast<double>(m) * std::lgamma(eta) - std::lgamma(static_cast<double>(m) * eta);
            std::mt19937_64 rng(derive_key(sub_seed(ctx, "simplex"), case_id, Purpose::oracle));
            std::gamma_distribution<double> gd(eta, 1.0);
            std::vector<double> w(points), g(m);
            for (std::size_t i = 0; i < points; ++i) {
                double s = 0.0;
                for (auto& gj : g) {
                    do gj = gd(rng);
                    while (gj <= 0.0);
                    s += gj;
                }
                double lw = log_norm;
                for (double gj : g) lw += (xi - eta) * std::log(gj / s);
                w[i] = std::exp(lw);
            }
            const auto est = mean_estimate(w);
            const double exact = simplex_integral(xi, k, 1.0);
            const double z = std::abs(est.mean - exact) / est.standard_error;
            worst = std::max(worst, z);
            t.add({xi, static_cast<long long>(k), exact, est.mean, est.standard_error, z});
        }
    }
    res.checks.push_back(le("max |MC - closed| / SE", worst, ctx.tol.simplex_se_band));
    res.tables.push_back(std::move(t));
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 6. Characteristic functional of the noise
// ============================================================================

CriterionResult noise_functional(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(6, "noise characteristic functional");
    const auto clouds = get<std::size_t>(p, "clouds", 100'000);
    const double a = get<double>(p, "a", 1e-3);
    const auto gammas = get<std::vector<double>>(p, "gammas", {1.3, 1.7});
    const auto cps = get<std::vector<double>>(p, "c_plus", {1.0, 0.5});
    std::vector<double> theta;
    for (int i = -10; i <= 10; ++i) theta.push_back(i);
    const auto box = DomainBox::unit(1);
    const TestFunction one = [](std::span<const double>) { return 1.0; };
    auto t = make_table("noise_cf", {"gamma", "c_plus", "theta", "emp_re", "emp_im", "theory_re", "theory_im", "abs_diff"});
    for (double gamma : gammas) {
        for (double cp : cps) {
            const std::string tag = "noise-cf-" + fmt_short(gamma) + "-" + fmt_short(cp);
            const std::uint64_t seed = sub_seed(ctx, tag);
            json lp = p;
            lp["gamma"] = gamma;
            lp["cp"] = cp;
            const auto mass = run_replicas(ctx, run_label(tag, lp, ctx.seed), clouds, [&](std::uint64_t r) {
                return sample_total_mass(box, gamma, cp, 1.0 - cp, a, seed, r);
            });
            const auto emp = empirical_cf(mass, theta);
            double sup = 0.0;
            for (std::size_t i = 0; i < theta.size(); ++i) {
                const auto th = characteristic_functional(one, theta[i], box, gamma, cp, 1.0 - cp);
                const double d = std::abs(emp[i] - th);
                sup = std::max(sup, d);
                t.add({gamma, cp, theta[i], emp[i].real(), emp[i].imag(), th.real(), th.imag(), d});
            }
            res.checks.push_back(le("gamma=" + fmt_short(gamma) + " c+=" + fmt_short(cp) + " sup", sup, ctx.tol.cf_abs_tol));
            ctx.note("criterion 6: gamma " + fmt_short(gamma) + ", c+ " + fmt_short(cp) + " done");
        }
    }
    res.tables.push_back(std::move(t));
    res.detail = {{"clouds", clouds}, {"a", a}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 7. Martingale structure of the truncated chaos
// ============================================================================

CriterionResult chaos_martingale(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(7, "chaos martingale and boundedness");
    const double alpha = get<double>(p, "alpha", 0.7);
    const double gamma = get<double>(p, "gamma", 1.5);
    const double beta_hat = get<double>(p, "beta_hat", 0.5);
    const auto M = get<std::size_t>(p, "M", 6);
    const auto levels = get<std::vector<double>>(p, "a", {0.5, 0.2, 0.1, 0.05});
    const auto reps = get<std::size_t>(p, "replicas", 20'000);
    const double pnorm = get<double>(p, "p", 1.2);
    const auto box = DomainBox::unit(1);
    const std::uint64_t seed = sub_seed(ctx, "martingale");
    const auto rows = run_replicas(ctx, run_label("martingale", p, ctx.seed), reps, levels.size(),
                                   [&](std::uint64_t r, std::span<double> out) {
                                       auto cloud = sample_cloud(box, gamma, 1.0, 0.0, levels[0], seed, r);
                                       for (std::size_t l = 0; l < levels.size(); ++l) {
                                           if (l > 0) cloud = refine_cloud(cloud, levels[l], seed, r);
                                           out[l] = power_kernel_chaos(alpha, cloud, beta_hat, M).total;
                                       }
                                   });
    auto t = make_table("martingale", {"a", "mean", "se", "p_norm", "increment_mean", "increment_se", "cov_with_coarse", "cov_se"});
    double worst_mean = 0.0, worst_cov = 0.0, lo = INFINITY, hi = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto x = column(rows, l);
        const auto m = mean_estimate(x);
        const double pn = p_norm(x, pnorm);
        lo = std::min(lo, pn);
        hi = std::max(hi, pn);
        if (l == 0) {
            t.add({levels[l], m.mean, m.standard_error, pn, 0.0, 0.0, 0.0, 0.0});
            continue;
        }
        const auto coarse = column(rows, l - 1);
        std::vector<double> inc(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) inc[i] = x[i] - coarse[i];
        const auto mi = mean_estimate(inc);
        const auto cv = covariance_estimate(inc, coarse);
        worst_mean = std::max(worst_mean, std::abs(mi.mean) / mi.standard_error);
        worst_cov = std::max(worst_cov, std::abs(cv.mean) / cv.standard_error);
        t.add({levels[l], m.mean, m.standard_error, pn, mi.mean, mi.standard_error, cv.mean, cv.standard_error});
    }
    res.checks.push_back(le("max |increment mean|/SE", worst_mean, ctx.tol.martingale_se_band));
    res.checks.push_back(le("max |cov(increment, coarse)|/SE", worst_cov, ctx.tol.martingale_se_band));
    res.checks.push_back(le("p-norm max/min", hi / lo, ctx.tol.lp_spread_max));
    res.tables.push_back(std::move(t));
    res.detail = {{"alpha", alpha}, {"gamma", gamma}, {"beta_hat", beta_hat}, {"M", M}, {"replicas", reps}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// KS ladders
// ============================================================================

namespace {

struct Ladder {
    std::vector<double> ks;
    std::vector<MomentEstimate> pnorm;
};

void ladder_checks(CriterionResult& res, const RunContext& ctx, const Ladder& l, double final_ks_tol,
                   const MomentEstimate& ref) {
    double worst_rise = -INFINITY;
    for (std::size_t i = 1; i < l.ks.size(); ++i) worst_rise = std::max(worst_rise, l.ks[i] - l.ks[i - 1]);
    res.checks.push_back(le("max KS rise", worst_rise, ctx.tol.ks_noise_band));
    res.checks.push_back(le("final KS", l.ks.back(), final_ks_tol));
    const auto& fin = l.pnorm.back();
    const bool overlap = fin.lower <= ref.upper && ref.lower <= fin.upper;
    res.checks.push_back(le("|p-norm ratio - 1|", std::abs(fin.estimate / ref.estimate - 1.0), ctx.tol.pnorm_rel_tol,
                            std::string("95% bootstrap intervals ") + (overlap ? "overlap" : "do not overlap")));
}

}  // namespace

// ============================================================================
// 8. Pinning convergence
// ============================================================================

CriterionResult pinning_convergence(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(8, "intermediate disorder (pinning)");
    const double alpha = get<double>(p, "alpha", 0.7);
    const double gamma = get<double>(p, "gamma", 1.5);
    const double h_hat = get<double>(p, "h_hat", 0.5);
    const double beta_hat = get<double>(p, "beta_hat", 0.5);
    const double a = get<double>(p, "a", 0.05);
    const auto cells = get<std::size_t>(p, "gaussian_cells", 64);
    const auto reps = get<std::size_t>(p, "replicas", 5000);
    const auto Ns = get<std::vector<std::size_t>>(p, "N", {256, 512, 1024, 2048, 4096});
    const double pn = get<double>(p, "p", 1.2);
    check_pinning_gate(alpha, gamma, get<bool>(p, "force", false));
    const auto law = TailLaw::one_sided(gamma);

    const ContinuumPinningProxy proxy(alpha, h_hat, beta_hat, gamma, 1.0, 0.0, a, cells);
    const std::uint64_t pseed = sub_seed(ctx, "pinning-proxy");
    const auto ref = run_replicas(ctx, run_label("pinning-proxy", p, ctx.seed), reps,
                                  [&](std::uint64_t r) { return proxy.sample(pseed, r); });
    const auto ref_m = mean_estimate(ref);
    const auto ref_b = bootstrap_moment(ref, pn, 400, sub_seed(ctx, "pinning-proxy-boot"));
    ctx.note("criterion 8: proxy done");

    auto t = make_table("pinning_converge", {"N", "KS", "mean", "mean_se", "p_norm", "p_norm_lo", "p_norm_hi", "beta", "h"});
    t.add({std::string("proxy"), 0.0, ref_m.mean, ref_m.standard_error, ref_b.estimate, ref_b.lower, ref_b.upper, 0.0, 0.0});
    Ladder lad;
    for (std::size_t N : Ns) {
        const auto kernel = make_kernel(alpha, N);
        const double V = solve_noise_scale(law, 1.0 / static_cast<double>(N));
        const auto params = PinningParams::from_continuum(kernel, N, h_hat, beta_hat, V);
        const std::uint64_t seed = sub_seed(ctx, "pinning-disorder", N);
        json lp = p;
        lp["current_N"] = N;
        const auto z = run_replicas(ctx, run_label("pinning-Z", lp, ctx.seed), reps, [&](std::uint64_t r) {
            std::vector<double> omega(N);
            fill_disorder(law, derive_key(seed, r, Purpose::disorder), omega);
            return disordered_pinning_Z(kernel, params, omega);
        });
        const double ks = ks_distance(z, ref);
        const auto m = mean_estimate(z);
        const auto b = bootstrap_moment(z, pn, 400, sub_seed(ctx, "pinning-boot", N));
        lad.ks.push_back(ks);
        lad.pnorm.push_back(b);
        t.add({std::to_string(N), ks, m.mean, m.standard_error, b.estimate, b.lower, b.upper, params.beta, params.h});
        ctx.note("criterion 8: N = " + std::to_string(N) + " KS " + fmt_short(ks));
    }
    ladder_checks(res, ctx, lad, ctx.tol.ks_pinning_final, ref_b);
    res.tables.push_back(std::move(t));
    res.detail = {{"alpha", alpha},       {"gamma", gamma},   {"h_hat", h_hat},     {"beta_hat", beta_hat},
                  {"a", a},               {"gaussian_cells", cells}, {"replicas", reps},
                  {"orders", "all (resummed)"}, {"ks_band_99", ks_band_99(reps, reps)}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 9. Polymer convergence
// ============================================================================

CriterionResult polymer_convergence(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(9, "intermediate disorder (polymer)");
    const double alpha = get<double>(p, "alpha", 1.5);
    const double gamma = get<double>(p, "gamma", 1.4);
    const double beta_hat = get<double>(p, "beta_hat", 0.5);
    const double A = get<double>(p, "A", 4.0);
    const double a = get<double>(p, "a", 0.05);
    const auto reps = get<std::size_t>(p, "replicas", 2000);
    const auto Ns = get<std::vector<std::size_t>>(p, "N", {128, 256, 512, 1024});
    const double pn = get<double>(p, "p", 1.2);
    const auto Mt = get<std::size_t>(p, "mesh_t", 2048);
    const auto Mx = get<std::size_t>(p, "mesh_x", 4097);
    const StableWalk walk{alpha};
    check_polymer_gate(alpha, 1, gamma, get<bool>(p, "force", false));
    const auto law = TailLaw::one_sided(gamma);

    const ContinuumPolymerProxy proxy(alpha, beta_hat, gamma, 1.0, 0.0, a, A, Mt, Mx);
    const std::uint64_t pseed = sub_seed(ctx, "polymer-proxy");
    const auto ref = run_replicas(ctx, run_label("polymer-proxy", p, ctx.seed), reps,
                                  [&](std::uint64_t r) { return proxy.sample(pseed, r); });
    const auto ref_m = mean_estimate(ref);
    const auto ref_b = bootstrap_moment(ref, pn, 400, sub_seed(ctx, "polymer-proxy-boot"));
    ctx.note("criterion 9: proxy done");

    auto t = make_table("polymer_converge", {"N", "KS", "mean", "mean_se", "homogeneous_mass", "p_norm", "p_norm_lo", "p_norm_hi", "beta", "window"});
    t.add({std::string("proxy"), 0.0, ref_m.mean, ref_m.standard_error, proxy.homogeneous_mass(), ref_b.estimate,
           ref_b.lower, ref_b.upper, 0.0, 0LL});
    Ladder lad;
    for (std::size_t N : Ns) {
        const auto params = PolymerParams::from_continuum(walk, N, beta_hat, A, law);
        const long long L = params.window(walk);
        const PolymerDP dp(walk, N, L);
        const std::uint64_t seed = sub_seed(ctx, "polymer-disorder", N);
        json lp = p;
        lp["current_N"] = N;
        const auto z = run_replicas(ctx, run_label("polymer-Z", lp, ctx.seed), reps, [&](std::uint64_t r) {
            return dp.Z(sample_disorder_field(law, N, L, seed, r), params.beta);
        });
        const double ks = ks_distance(z, ref);
        const auto m = mean_estimate(z);
        const auto b = bootstrap_moment(z, pn, 400, sub_seed(ctx, "polymer-boot", N));
        lad.ks.push_back(ks);
        lad.pnorm.push_back(b);
        t.add({std::to_string(N), ks, m.mean, m.standard_error, dp.homogeneous_mass(), b.estimate, b.lower, b.upper,
               params.beta, static_cast<long long>(L)});
        ctx.note("criterion 9: N = " + std::to_string(N) + " KS " + fmt_short(ks));
    }
    ladder_checks(res, ctx, lad, ctx.tol.ks_polymer_final, ref_b);
    res.tables.push_back(std::move(t));
    res.detail = {{"alpha", alpha}, {"gamma", gamma}, {"beta_hat", beta_hat}, {"A", A}, {"a", a},
                  {"replicas", reps}, {"mesh_t", Mt}, {"mesh_x", Mx}, {"ks_band_99", ks_band_99(reps, reps)}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 10. Truncation bound
// ============================================================================

CriterionResult truncation_bound(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(10, "truncation bound (polymer)");
    const double alpha = get<double>(p, "alpha", 1.5);
    const double gamma = get<double>(p, "gamma", 1.4);
    const double beta_hat = get<double>(p, "beta_hat", 0.5);
    const auto N = get<std::size_t>(p, "N", 512);
    const auto As = get<std::vector<double>>(p, "A", {2.0, 4.0, 8.0});
    const auto reps = get<std::size_t>(p, "replicas", 500);
    const auto walks = get<std::size_t>(p, "walks", 20'000);
    const double budget = get<double>(p, "defect_budget", 1e-3);
    const StableWalk walk{alpha};
    const auto law = TailLaw::one_sided(gamma);
    const double Amax = *std::max_element(As.begin(), As.end());
    const auto params = PolymerParams::from_continuum(walk, N, beta_hat, Amax, law);
    const long long Lfree = free_window_size(walk, N, Amax, budget);
    const PolymerDP free_dp(walk, N, Lfree);
    std::vector<PolymerDP> hard;
    for (double A : As) {
        PolymerParams q = params;
        q.A = A;
        hard.emplace_back(walk, N, q.window(walk));
    }
    const std::uint64_t seed = sub_seed(ctx, "truncation-disorder");
    const auto rows = run_replicas(ctx, run_label("truncation", p, ctx.seed), reps, As.size(),
                                   [&](std::uint64_t r, std::span<double> out) {
                                       const auto field = sample_disorder_field(law, N, Lfree, seed, r);
                                       const double zf = free_dp.Z(field, params.beta);
                                       for (std::size_t i = 0; i < As.size(); ++i) out[i] = std::abs(zf - hard[i].Z(field, params.beta));
                                   });
    auto t = make_table("truncation", {"A", "window", "mean_abs_diff", "se", "excursion_p", "excursion_se", "margin_se"});
    const double aN = walk.a_n(static_cast<double>(N));
    for (std::size_t i = 0; i < As.size(); ++i) {
        const auto d = mean_estimate(column(rows, i));
        const auto ex = excursion_probability(walk, N, As[i] * aN, walks, sub_seed(ctx, "truncation-walks", i));
        const double se = std::hypot(d.standard_error, ex.standard_error);
        t.add({As[i], static_cast<long long>(hard[i].window()), d.mean, d.standard_error, ex.p, ex.standard_error,
               (d.mean - ex.p) / se});
        res.checks.push_back(le("A=" + fmt_short(As[i]) + " (E|dZ| - P)/SE", (d.mean - ex.p) / se,
                                ctx.tol.truncation_se_band));
    }
    res.tables.push_back(std::move(t));
    res.detail = {{"N", N}, {"free_window", Lfree}, {"free_defect", 1.0 - free_dp.homogeneous_mass()},
                  {"beta", params.beta}, {"replicas", reps}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 11. Disorder relevance
// ============================================================================

CriterionResult relevance_dichotomy(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(11, "disorder relevance dichotomy");
    const double alpha = get<double>(p, "alpha", 0.7);
    const double gamma = get<double>(p, "gamma", 1.5);
    const auto N = get<std::size_t>(p, "N", 8192);
    const auto reps = get<std::size_t>(p, "replicas", 400);
    const double weak_exp = get<double>(p, "weak_exponent", 0.25);
    const double strong_beta = get<double>(p, "strong_beta", 0.5);
    const double polymer_alpha = get<double>(p, "polymer_alpha", 1.5);
    const double polymer_gamma = get<double>(p, "polymer_gamma", 1.4);
    const auto polymer_N = get<std::size_t>(p, "polymer_N", 1024);
    const double polymer_A = get<double>(p, "polymer_A", 4.0);
    const auto polymer_reps = get<std::size_t>(p, "polymer_replicas", 200);

    auto t = make_table("relevance", {"model", "schedule", "N", "beta", "beta_hat_eff", "mean", "mean_se", "median", "P_A"});
    // P[A]: fraction of replicas with every |omega| below a V, a = beta_hat^(4/(gamma-1)).
    auto below = [](std::span<const double> omega, double level) {
        return std::all_of(omega.begin(), omega.end(), [&](double w) { return std::abs(w) < level; }) ? 1.0 : 0.0;
    };

    // Pinning, h = 0.
    const auto kernel = make_kernel(alpha, N);
    const auto law = TailLaw::one_sided(gamma);
    const double V = solve_noise_scale(law, 1.0 / static_cast<double>(N));
    const double uN = kernel.u[N];
    struct Schedule {
        std::string name;
        double beta;
    };
    const std::vector<Schedule> pin{{"weak", std::pow(static_cast<double>(N), -weak_exp) / (uN * V)},
                                    {"strong", strong_beta}};
    for (const auto& s : pin) {
        PinningParams q;
        q.N = N;
        q.beta = s.beta;
        const double bh = s.beta * uN * V;
        const double level = std::pow(bh, 4.0 / (gamma - 1.0)) * V;
        const std::uint64_t seed = sub_seed(ctx, "relevance-pinning-" + s.name);
        json lp = p;
        lp["schedule"] = s.name;
        const auto rows = run_replicas(ctx, run_label("relevance-pinning", lp, ctx.seed), reps, 2,
                                       [&](std::uint64_t r, std::span<double> out) {
                                           std::vector<double> omega(N);
                                           fill_disorder(law, derive_key(seed, r, Purpose::disorder), omega);
                                           out[0] = disordered_pinning_Z(kernel, q, omega);
                                           out[1] = below(omega, level);
                                       });
        const auto z = column(rows, 0);
        const auto m = mean_estimate(z);
        const double med = median(z);
        const double pa = mean_estimate(column(rows, 1)).mean;
        t.add({std::string("pinning"), s.name, static_cast<long long>(N), s.beta, bh, m.mean, m.standard_error, med, pa});
        if (s.name == "weak") {
            res.checks.push_back(Check{"pinning weak mean", m.mean >= ctx.tol.weak_mean_lo && m.mean <= ctx.tol.weak_mean_hi,
                                       m.mean, ctx.tol.weak_mean_hi, "band [" + fmt_short(ctx.tol.weak_mean_lo) + ", " +
                                                                         fmt_short(ctx.tol.weak_mean_hi) + "]"});
        } else {
            res.checks.push_back(le("pinning strong median", med, ctx.tol.strong_median_max));
        }
        ctx.note("criterion 11: pinning " + s.name + " done");
    }

    // Polymer, hard window; Z normalized by the homogeneous window mass.
    const StableWalk walk{polymer_alpha};
    const auto plaw = TailLaw::one_sided(polymer_gamma);
    const double aN = walk.a_n(static_cast<double>(polymer_N));
    const double VN = PolymerParams::noise_scale(walk, polymer_N, plaw);
    PolymerParams base;
    base.N = polymer_N;
    base.A = polymer_A;
    const long long L = base.window(walk);
    const PolymerDP dp(walk, polymer_N, L);
    const std::vector<Schedule> poly{{"weak", std::pow(static_cast<double>(polymer_N), -weak_exp) * aN / VN},
                                     {"strong", strong_beta}};
    for (const auto& s : poly) {
        const double bh = s.beta * VN / aN;
        const double level = std::pow(bh, 4.0 / (polymer_gamma - 1.0)) * VN;
        const std::uint64_t seed = sub_seed(ctx, "relevance-polymer-" + s.name);
        json lp = p;
        lp["schedule"] = s.name;
        const auto rows = run_replicas(ctx, run_label("relevance-polymer", lp, ctx.seed), polymer_reps, 2,
                                       [&](std::uint64_t r, std::span<double> out) {
                                           const auto field = sample_disorder_field(plaw, polymer_N, L, seed, r);
                                           out[0] = dp.Z(field, s.beta) / dp.homogeneous_mass();
                                           out[1] = below(field.values, level);
                                       });
        const auto z = column(rows, 0);
        const auto m = mean_estimate(z);
        const double med = median(z);
        const double pa = mean_estimate(column(rows, 1)).mean;
        t.add({std::string("polymer"), s.name, static_cast<long long>(polymer_N), s.beta, bh, m.mean, m.standard_error,
               med, pa});
        if (s.name == "strong") res.checks.push_back(le("polymer strong median", med, ctx.tol.strong_median_max));
        ctx.note("criterion 11: polymer " + s.name + " done");
    }
    res.tables.push_back(std::move(t));
    res.detail = {{"weak_schedule", "beta_hat_N = N^-" + fmt_short(weak_exp)}, {"strong_beta", strong_beta}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 12. Truncated moments
// ============================================================================

CriterionResult truncated_moments(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(12, "truncated-moment asymptotics");
    const double gamma = get<double>(p, "gamma", 1.5);
    const double v = get<double>(p, "v_delta", 1e-4);
    const auto samples = get<std::uint64_t>(p, "samples", 100'000'000);
    const auto exps = get<std::vector<double>>(p, "exponents", {1.2, 1.8});
    const double a = get<double>(p, "a", 1.0);
    const auto law = TailLaw::one_sided(gamma);
    auto t = make_table("truncated_moments", {"exponent", "a", "v_delta", "moment", "se", "asymptotic", "ratio", "big_jump"});
    for (std::size_t i = 0; i < exps.size(); ++i) {
        const auto e = estimate_truncated_moment(law, exps[i], a, v, samples, sub_seed(ctx, "truncated-moments", i));
        t.add({exps[i], a, v, e.moment, e.standard_error, e.asymptotic, e.ratio, static_cast<long long>(e.big_jump)});
        res.checks.push_back(le("exponent " + fmt_short(exps[i]) + " |ratio-1|", std::abs(e.ratio - 1.0),
                                ctx.tol.truncated_moment_rel_tol));
    }
    res.tables.push_back(std::move(t));
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 13. Local limit theorem
// ============================================================================

CriterionResult llt_decay(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(13, "local limit theorem");
    const double alpha = get<double>(p, "alpha", 1.5);
    const auto ns = get<std::vector<std::size_t>>(p, "n", {256, 512, 1024, 2048});
    const StableWalk walk{alpha};
    auto t = make_table("llt", {"n", "a_n", "sup_error", "argmax"});
    std::vector<double> errs;
    for (std::size_t n : ns) {
        const auto r = llt_check(walk, n);
        errs.push_back(r.sup_error);
        t.add({static_cast<long long>(n), r.a_n, r.sup_error, static_cast<long long>(r.argmax)});
    }
    double rise = -INFINITY;
    for (std::size_t i = 1; i < errs.size(); ++i) rise = std::max(rise, errs[i] - errs[i - 1]);
    res.checks.push_back(le("sup error at n=" + std::to_string(ns.back()), errs.back(), ctx.tol.llt_sup_tol));
    res.checks.push_back(le("max rise", rise, ctx.tol.llt_noise));
    res.tables.push_back(std::move(t));
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// 14. Moment-bound shape
// ============================================================================

CriterionResult moment_bound_shape(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(14, "moment-bound shape");
    const double alpha = get<double>(p, "alpha", 0.7);
    const double gamma = get<double>(p, "gamma", 1.5);
    const double pe = get<double>(p, "p", 1.2);
    const double qe = get<double>(p, "q", 1.8);
    const auto M = get<std::size_t>(p, "M", 6);
    const auto Ns = get<std::vector<std::size_t>>(p, "N", {64, 128, 256});
    const auto reps = get<std::size_t>(p, "replicas", 20'000);
    const auto law = TailLaw::one_sided(gamma);
    auto t = make_table("moment_bounds", {"N", "k", "chaos_p_norm", "ci_lo", "ci_hi", "kernel_q_norm", "ratio"});
    std::vector<std::vector<double>> ratios;
    double worst_r2 = 1.0;
    for (std::size_t N : Ns) {
        const auto kernel = make_kernel(alpha, N);
        const double V = solve_noise_scale(law, 1.0 / static_cast<double>(N));
        const auto fam = product_kernel_family(discrete_pinning_product_kernel(kernel, 0.0, N), M);
        const auto rep = empirical_moment_bound_check(fam, law, pinning_lattice(N, V), pe, qe, reps,
                                                      sub_seed(ctx, "moment-bounds", N));
        for (std::size_t k = 1; k <= M; ++k) {
            const auto& ci = rep.chaos_pnorm_ci[k - 1];
            t.add({static_cast<long long>(N), static_cast<long long>(k), rep.chaos_pnorm[k - 1], ci.lower, ci.upper,
                   rep.kernel_qnorm[k - 1], rep.ratios[k - 1]});
        }
        ratios.push_back(rep.ratios);
        worst_r2 = std::min(worst_r2, rep.log_fit.r2);
        res.checks.push_back(Check{"N=" + std::to_string(N) + " log-linear R^2", rep.log_fit.r2 >= ctx.tol.geometric_r2_min,
                                   rep.log_fit.r2, ctx.tol.geometric_r2_min, "lower bound"});
        ctx.note("criterion 14: N = " + std::to_string(N) + " done");
    }
    double spread = 1.0;
    for (std::size_t k = 0; k < M; ++k) {
        double lo = INFINITY, hi = 0.0;
        for (const auto& r : ratios) {
            lo = std::min(lo, r[k]);
            hi = std::max(hi, r[k]);
        }
        spread = std::max(spread, hi / lo);
    }
    res.checks.push_back(le("max over k of ratio max/min", spread, ctx.tol.refinement_spread_max));
    res.tables.push_back(std::move(t));
    res.detail = {{"alpha", alpha}, {"gamma", gamma}, {"p", pe}, {"q", qe}, {"M", M}, {"replicas", reps}};
    res.seconds = sw.seconds();
    return res;
}

// ============================================================================
// Extra oracles
// ============================================================================

CriterionResult continuum_paths_identity(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(0, "continuum chaos, mesh vs exact");
    const double alpha = get<double>(p, "alpha", 0.6);
    const auto clouds = get<std::size_t>(p, "clouds", 20);
    const auto mesh = get<std::size_t>(p, "mesh", 64);
    const auto fine_mesh = get<std::size_t>(p, "fine_mesh", 4096);
    const double tol = get<double>(p, "abs_tol", 1e-3);
    const auto box = DomainBox::unit(1);
    const std::uint64_t seed = sub_seed(ctx, "continuum-paths");
    auto t = make_table("continuum_paths", {"cloud", "case", "atoms", "mesh", "mesh_total", "exact_total", "diff"});

    // Symmetric marks carry no compensator, so the mesh sees only the atoms.
    const auto pin = product_kernel_family(pinning_product_kernel(alpha, 0.0), 2);
    // One-sided marks with a smooth kernel exercise the compensator cells.
    auto smooth = std::make_shared<ProductKernel>();
    smooth->origin = {0.0};
    smooth->step = [](std::span<const double> x, std::span<const double> y) { return std::exp(x[0] - y[0]); };
    smooth->terminal = [](std::span<const double> x) { return 1.0 - 0.5 * x[0]; };
    const auto sfam = product_kernel_family(smooth, 2);

    double worst_sym = 0.0, worst_comp = 0.0;
    for (std::size_t c = 0; c < clouds; ++c) {
        const auto sym = sample_cloud(box, 1.5, 0.5, 0.5, 1.2, seed, c);
        const double m = continuum_chaos(pin, sym, 0.8, mesh).total;
        const double e = continuum_chaos(pin, sym, 0.8, mesh, ContinuumPath::exact).total;
        const double rel = std::abs(m - e);
        worst_sym = std::max(worst_sym, rel);
        t.add({static_cast<long long>(c), std::string("symmetric"), static_cast<long long>(sym.size()),
               static_cast<long long>(mesh), m, e, rel});

        const auto one = sample_cloud(box, 1.5, 1.0, 0.0, 1.0, seed ^ 1, c);
        const double m2 = continuum_chaos(sfam, one, 1.0, fine_mesh).total;
        const double e2 = continuum_chaos(sfam, one, 1.0, fine_mesh, ContinuumPath::exact).total;
        const double rel2 = std::abs(m2 - e2);
        worst_comp = std::max(worst_comp, rel2);
        t.add({static_cast<long long>(c), std::string("compensated"), static_cast<long long>(one.size()),
               static_cast<long long>(fine_mesh), m2, e2, rel2});
    }
    res.checks.push_back(le("atoms only, max abs diff", worst_sym, tol));
    res.checks.push_back(le("with compensator, max abs diff", worst_comp, tol));
    res.tables.push_back(std::move(t));
    res.seconds = sw.seconds();
    return res;
}

CriterionResult noise_invariants(const RunContext& ctx, const json& p) {
    Stopwatch sw;
    auto res = make_result(0, "noise compensation and refinement");
    const double gamma = get<double>(p, "gamma", 1.5);
    const double cp = get<double>(p, "c_plus", 1.0);
    const double a = get<double>(p, "a", 0.5);
    const double a_fine = get<double>(p, "a_fine", 0.05);
    const auto reps = get<std::size_t>(p, "replicas", 20'000);
    const auto box = DomainBox::unit(1);
    const TestFunction f = [](std::span<const double> x) { return std::sin(3.0 * x[0]) + 0.5; };
    const double If = box_integral(box, f);
    const std::uint64_t seed = sub_seed(ctx, "noise-invariants");
    const auto rows = run_replicas(ctx, run_label("noise-invariants", p, ctx.seed), reps, 2,
                                   [&](std::uint64_t r, std::span<double> out) {
                                       const auto c1 = sample_cloud(box, gamma, cp, 1.0 - cp, a, seed, r);
                                       const auto c2 = refine_cloud(c1, a_fine, seed, r);
                                       out[0] = pair_with_test_function(c1, f, If);
                                       out[1] = pair_with_test_function(c2, f, If) - out[0];
                                   });
    const auto coarse = column(rows, 0), inc = column(rows, 1);
    const auto mc = mean_estimate(coarse);
    const auto mi = mean_estimate(inc);
    const auto cv = covariance_estimate(inc, coarse);
    res.checks.push_back(le("|mean pairing|/SE", std::abs(mc.mean) / mc.standard_error, ctx.tol.martingale_se_band));
    res.checks.push_back(le("|mean increment|/SE", std::abs(mi.mean) / mi.standard_error, ctx.tol.martingale_se_band));
    res.checks.push_back(le("|cov(increment, coarse)|/SE", std::abs(cv.mean) / cv.standard_error, ctx.tol.martingale_se_band));
    auto t = make_table("noise_invariants", {"quantity", "mean", "se"});
    t.add({std::string("pairing"), mc.mean, mc.standard_error});
    t.add({std::string("increment"), mi.mean, mi.standard_error});
    t.add({std::string("covariance"), cv.mean, cv.standard_error});
    res.tables.push_back(std::move(t));
    res.seconds = sw.seconds();
    return res;
}

const std::vector<CriterionInfo>& acceptance_criteria() {
    static const std::vector<CriterionInfo> list{
        {1, "exact chaos identity (pinning)", pinning_chaos_identity},
        {2, "exact chaos identity (polymer)", polymer_chaos_identity},
        {3, "renewal mass constant", renewal_constant_check},
        {4, "Mittag-Leffler limits", homogeneous_limits},
        {5, "gamma-simplex identity", simplex_identity},
        {6, "noise characteristic functional", noise_functional},
        {7, "chaos martingale and boundedness", chaos_martingale},
        {8, "intermediate disorder (pinning)", pinning_convergence},
        {9, "intermediate disorder (polymer)", polymer_convergence},
        {10, "truncation bound (polymer)", truncation_bound},
        {11, "disorder relevance dichotomy", relevance_dichotomy},
        {12, "truncated-moment asymptotics", truncated_moments},
        {13, "local limit theorem", llt_decay},
        {14, "moment-bound shape", moment_bound_shape},
    };
    return list;
}

}  // namespace levychaos
