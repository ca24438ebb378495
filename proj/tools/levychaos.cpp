// levychaos: experiment runner over the acceptance criteria and related sweeps.
#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "levychaos/errors.hpp"
#include "levychaos/experiments.hpp"
#include "levychaos/polymer.hpp"
#include "levychaos/renewal_pinning.hpp"

using namespace levychaos;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

struct Step {
    CriterionRunner run;
    int id;  // criterion number, 0 for the extra oracles
};

struct Subcommand {
    const char* name;
    const char* help;
    const char* model;  // default model for the gate check
    std::vector<Step> steps;
};

std::vector<Subcommand> subcommands() {
    const auto& c = acceptance_criteria();
    auto crit = [&](int id) { return Step{c[static_cast<std::size_t>(id - 1)].run, id}; };
    return {
        {"noise-check", "Characteristic functional, compensation and refinement invariants", "noise",
         {crit(6), Step{noise_invariants, 0}}},
        {"chaos-martingale", "Continuum chaos across coupled truncation levels", "chaos", {crit(7)}},
        {"pinning-converge", "Pinning KS ladder against the continuum proxy, homogeneous limits", "pinning",
         {crit(3), crit(4), crit(8)}},
        {"polymer-converge", "Polymer KS ladder, local limit theorem and truncation bound", "polymer",
         {crit(13), crit(9), crit(10)}},
        {"relevance-scan", "Weak and strong disorder schedules", "pinning", {crit(11)}},
        {"moment-bounds", "Chaos moment-bound shape and truncated-moment ratios", "pinning", {crit(14), crit(12)}},
        {"llt-check", "Local limit theorem for the lattice walk", "polymer", {crit(13)}},
        {"oracle-suite", "Exact small-instance identities", "chaos",
         {crit(1), crit(2), crit(5), Step{continuum_paths_identity, 0}}},
    };
}

struct Config {
    std::string model;
    json parameters = json::object();
    std::map<std::string, json> per_step;  // "8" or a table name -> overrides
    json tolerances = json::object();
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot read config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParameterError("config must be a JSON object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        throw ParameterError("config needs an integer schema_version");
    }
    if (j["schema_version"].get<int>() != kSchemaVersion) {
        throw ParameterError("unsupported schema_version " + j["schema_version"].dump() + " (expected " +
                             std::to_string(kSchemaVersion) + ")");
    }
    static const std::vector<std::string> known{"schema_version", "model", "parameters", "criteria",
                                                "tolerances", "seed", "output"};
    for (const auto& [k, v] : j.items()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ParameterError("unknown config key '" + k + "'");
    }
    Config c;
    if (j.contains("model")) {
        c.model = j["model"].get<std::string>();
        if (c.model != "pinning" && c.model != "polymer" && c.model != "noise" && c.model != "chaos") {
            throw ParameterError("model must be one of pinning, polymer, noise, chaos");
        }
    }
    if (j.contains("parameters")) {
        if (!j["parameters"].is_object()) throw ParameterError("parameters must be an object");
        c.parameters = j["parameters"];
    }
    if (j.contains("criteria")) {
        for (const auto& [k, v] : j["criteria"].items()) c.per_step[k] = v;
    }
    if (j.contains("tolerances")) c.tolerances = j["tolerances"];
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output")) c.out = j["output"].get<std::string>();
    return c;
}

template <class T>
T param(const json& p, const char* key, T fallback) {
    return p.contains(key) ? p.at(key).get<T>() : fallback;
}

// Harris criterion for heavy-tailed disorder: below it the continuum limit is not defined.
void check_gates(const std::string& model, const json& p, bool force) {
    try {
        if (model == "pinning") {
            check_pinning_gate(param(p, "alpha", 0.7), param(p, "gamma", 1.5), force);
        } else if (model == "polymer") {
            check_polymer_gate(param(p, "alpha", 1.5), param<std::size_t>(p, "d", 1), param(p, "gamma", 1.4), force);
        }
    } catch (const GateError& e) {
        std::string why = e.what();
        why.erase(0, why.find(": ") + 2);
        throw GateError("Harris criterion for heavy-tailed disorder not met, no intermediate-disorder limit (" + why +
                        "); rerun relevance-scan with --force to study this regime");
    }
}

std::string utc_timestamp() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int run(const Subcommand& sc, const std::optional<std::string>& config_path, std::optional<std::uint64_t> seed_flag,
        std::optional<unsigned> threads_flag, std::optional<std::string> out_flag, bool force) {
    Config cfg;
    if (config_path) cfg = load_config(*config_path);
    const std::string model = cfg.model.empty() ? sc.model : cfg.model;
    if (force && std::string(sc.name) != "relevance-scan") {
        throw GateError("--force only applies to relevance-scan");
    }
    check_gates(model, cfg.parameters, force);

    RunContext ctx;
    if (seed_flag) {
        ctx.seed = *seed_flag;
    } else if (cfg.seed) {
        ctx.seed = *cfg.seed;
    }
    ctx.threads = resolve_threads(threads_flag);
    apply_tolerance_overrides(ctx.tol, cfg.tolerances);
    ctx.log = [](const std::string& m) { std::cerr << "  .. " << m << std::endl; };
    const fs::path out = out_flag ? fs::path(*out_flag) : cfg.out ? fs::path(*cfg.out) : fs::path("levychaos-out") / sc.name;
    fs::create_directories(out);
    ctx.checkpoint_dir = out / "checkpoints";

    json results = json::array();
    bool all_passed = true;
    for (const auto& step : sc.steps) {
        json p = cfg.parameters;
        if (force) p["force"] = true;
        if (step.id > 0) {
            const auto it = cfg.per_step.find(std::to_string(step.id));
            if (it != cfg.per_step.end()) p.update(it->second);
        }
        auto r = step.run(ctx, p);
        std::cout << r.summary_line() << std::endl;
        all_passed = all_passed && r.passed();
        for (const auto& t : r.tables) {
            std::ofstream os(out / (t.name + ".csv"), std::ios::binary);
            t.write_csv(os);
            if (!os) throw ParameterError("cannot write " + (out / (t.name + ".csv")).string());
        }
        results.push_back(r.to_json());
    }
    json verdict{{"generated", utc_timestamp()},
                 {"subcommand", sc.name},
                 {"model", model},
                 {"seed", ctx.seed},
                 {"threads", ctx.threads},
                 {"schema_version", kSchemaVersion},
                 {"parameters", cfg.parameters},
                 {"tolerances", tolerance_table_json(ctx.tol)},
                 {"passed", all_passed},
                 {"criteria", results}};
    std::ofstream(out / "verdict.json") << verdict.dump(2) << "\n";
    std::cout << (all_passed ? "PASS" : "FAIL") << " " << sc.name << " -> " << out.string() << std::endl;
    return all_passed ? 0 : static_cast<int>(ExitCode::tolerance_failure);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heavy-tailed disorder: chaos expansions, pinning and polymer experiments"};
    app.require_subcommand(1);
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
    bool force = false;
    const auto commands = subcommands();
    std::vector<std::pair<CLI::App*, const Subcommand*>> apps;
    for (const auto& sc : commands) {
        auto* sub = app.add_subcommand(sc.name, sc.help);
        sub->add_option("--config", config, "JSON config (schema_version 1)")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Base seed");
        sub->add_option("--threads", threads, "Worker threads (fallback LEVYCHAOS_THREADS, then 1)");
        sub->add_option("--out", out, "Output directory");
        sub->add_flag("--force", force, "Run relevance-scan outside the intermediate-disorder gate");
        apps.emplace_back(sub, &sc);
    }
    CLI11_PARSE(app, argc, argv);
    for (const auto& [sub, sc] : apps) {
        if (!sub->parsed()) continue;
        try {
            return run(*sc, config, seed, threads, out, force);
        } catch (const Error& e) {
            std::cerr << e.what() << std::endl;
            return static_cast<int>(e.code());
        } catch (const json::exception& e) {
            std::cerr << "parameter error: " << e.what() << std::endl;
            return static_cast<int>(ExitCode::tolerance_failure);
        }
    }
    return 1;
}
