#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "levychaos/stats.hpp"

namespace levychaos {

// ============================================================================
// Run context
// ============================================================================

struct RunContext {
    std::uint64_t seed = 20240601;
    unsigned threads = 1;
    // Per-replica results are appended here and reused on the next run.
    std::optional<std::filesystem::path> checkpoint_dir;
    AcceptanceTable tol = kAcceptance;
    std::function<void(const std::string&)> log;

    void note(const std::string& msg) const {
        if (log) log(msg);
    }
};

// Threads from the flag, then LEVYCHAOS_THREADS, then 1.
[[nodiscard]] unsigned resolve_threads(std::optional<unsigned> flag);

// Applies {"name": value} overrides to the threshold table. Unknown names throw.
void apply_tolerance_overrides(AcceptanceTable& table, const nlohmann::json& overrides);
[[nodiscard]] nlohmann::json tolerance_table_json(const AcceptanceTable& table);

// Runs fn(replica, row) for replicas 0..n-1 (row has `width` entries). With a
// checkpoint directory, completed rows are read back from <label>.csv and new
// rows appended as they finish. Output order is by replica regardless of threads.
[[nodiscard]] std::vector<std::vector<double>> run_replicas(
    const RunContext& ctx, const std::string& label, std::size_t n, std::size_t width,
    const std::function<void(std::uint64_t, std::span<double>)>& fn);

// Single-column convenience form.
[[nodiscard]] std::vector<double> run_replicas(const RunContext& ctx, const std::string& label,
                                               std::size_t n,
                                               const std::function<double(std::uint64_t)>& fn);

// ============================================================================
// Tables
// ============================================================================

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
    // RFC 4180, '.' decimal, 17 significant digits.
    void write_csv(std::ostream& os) const;
    [[nodiscard]] nlohmann::json to_json() const;
};

// ============================================================================
// Criteria
// ============================================================================

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    std::vector<Check> checks;
    std::vector<Table> tables;
    nlohmann::json detail = nlohmann::json::object();
    double seconds = 0.0;

    [[nodiscard]] bool passed() const;
    // "PASS  4  homogeneous limits ..." with the headline numbers.
    [[nodiscard]] std::string summary_line() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

// Parameters are read from `params` with the acceptance defaults for any
// missing key. Each runner is deterministic in (ctx.seed, params).
using CriterionRunner = std::function<CriterionResult(const RunContext&, const nlohmann::json&)>;

[[nodiscard]] CriterionResult pinning_chaos_identity(const RunContext& ctx, const nlohmann::json& params);   // 1
[[nodiscard]] CriterionResult polymer_chaos_identity(const RunContext& ctx, const nlohmann::json& params);   // 2
[[nodiscard]] CriterionResult renewal_constant_check(const RunContext& ctx, const nlohmann::json& params);   // 3
[[nodiscard]] CriterionResult homogeneous_limits(const RunContext& ctx, const nlohmann::json& params);       // 4
[[nodiscard]] CriterionResult simplex_identity(const RunContext& ctx, const nlohmann::json& params);         // 5
[[nodiscard]] CriterionResult noise_functional(const RunContext& ctx, const nlohmann::json& params);         // 6
[[nodiscard]] CriterionResult chaos_martingale(const RunContext& ctx, const nlohmann::json& params);         // 7
[[nodiscard]] CriterionResult pinning_convergence(const RunContext& ctx, const nlohmann::json& params);      // 8
[[nodiscard]] CriterionResult polymer_convergence(const RunContext& ctx, const nlohmann::json& params);      // 9
[[nodiscard]] CriterionResult truncation_bound(const RunContext& ctx, const nlohmann::json& params);        // 10
[[nodiscard]] CriterionResult relevance_dichotomy(const RunContext& ctx, const nlohmann::json& params);     // 11
[[nodiscard]] CriterionResult truncated_moments(const RunContext& ctx, const nlohmann::json& params);       // 12
[[nodiscard]] CriterionResult llt_decay(const RunContext& ctx, const nlohmann::json& params);               // 13
[[nodiscard]] CriterionResult moment_bound_shape(const RunContext& ctx, const nlohmann::json& params);      // 14

// Exact small-instance agreement of the truncated continuum chaos computed
// on a mesh and by exact integration (order <= 2).
[[nodiscard]] CriterionResult continuum_paths_identity(const RunContext& ctx, const nlohmann::json& params);

// Small-jump refinement invariants of the noise: compensation and martingale increments.
[[nodiscard]] CriterionResult noise_invariants(const RunContext& ctx, const nlohmann::json& params);

struct CriterionInfo {
    int id;
    const char* name;
    CriterionRunner run;
};

// The fourteen acceptance criteria in order.
[[nodiscard]] const std::vector<CriterionInfo>& acceptance_criteria();

}  // namespace levychaos
