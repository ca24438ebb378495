// Acceptance suite: one PASS/FAIL line per criterion.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "levychaos/errors.hpp"
#include "levychaos/experiments.hpp"

using namespace levychaos;
using nlohmann::json;

int main(int argc, char** argv) {
    CLI::App app{"levychaos acceptance suite"};
    std::vector<int> only;
    std::vector<int> known;
    std::vector<std::string> sets;
    std::uint64_t seed = RunContext{}.seed;
    std::optional<unsigned> threads;
    std::string json_out;
    bool verbose = false;
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    app.add_option("--allow-known-failures", known,
                   "Criteria whose failure is documented; they still print FAIL but do not fail the run")
        ->delimiter(',');
    app.add_option("--set", sets, "Override a parameter, ID.key=JSON (e.g. 8.replicas=500)");
    app.add_option("--seed", seed, "Base seed");
    app.add_option("--threads", threads, "Worker threads (default LEVYCHAOS_THREADS or 1)");
    app.add_option("--json", json_out, "Write all results as JSON");
    app.add_flag("-v,--verbose", verbose, "Progress notes on stderr");
    CLI11_PARSE(app, argc, argv);

    std::map<int, json> params;
    for (const auto& s : sets) {
        const auto dot = s.find('.');
        const auto eq = s.find('=');
        if (dot == std::string::npos || eq == std::string::npos || eq < dot) {
            std::cerr << "bad --set '" << s << "'\n";
            return 1;
        }
        try {
            params[std::stoi(s.substr(0, dot))][s.substr(dot + 1, eq - dot - 1)] = json::parse(s.substr(eq + 1));
        } catch (const std::exception& e) {
            std::cerr << "bad --set '" << s << "': " << e.what() << "\n";
            return 1;
        }
    }

    RunContext ctx;
    ctx.seed = seed;
    try {
        ctx.threads = resolve_threads(threads);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return static_cast<int>(e.code());
    }
    if (verbose) ctx.log = [](const std::string& m) { std::cerr << "  .. " << m << std::endl; };

    const std::set<int> chosen(only.begin(), only.end());
    const std::set<int> allowed(known.begin(), known.end());
    json all = json::array();
    int hard_failures = 0, passes = 0, ran = 0;
    for (const auto& c : acceptance_criteria()) {
        if (!chosen.empty() && !chosen.count(c.id)) continue;
        ++ran;
        CriterionResult r;
        try {
            r = c.run(ctx, params.count(c.id) ? params[c.id] : json::object());
        } catch (const Error& e) {
            r.id = c.id;
            r.name = c.name;
            r.checks.push_back(Check{std::string("error: ") + e.what(), false, 0.0, 0.0, {}});
        }
        std::string line = r.summary_line();
        if (!r.passed() && allowed.count(c.id)) line += " [known failure, see notes]";
        std::cout << line << std::endl;
        all.push_back(r.to_json());
        if (r.passed()) {
            ++passes;
        } else if (!allowed.count(c.id)) {
            ++hard_failures;
        }
    }
    std::cout << passes << "/" << ran << " criteria passed";
    if (ran - passes - hard_failures > 0) std::cout << ", " << (ran - passes - hard_failures) << " known failures";
    std::cout << std::endl;
    if (!json_out.empty()) {
        std::ofstream os(json_out);
        os << json{{"seed", seed}, {"tolerances", tolerance_table_json(ctx.tol)}, {"criteria", all}}.dump(2) << "\n";
    }
    return hard_failures == 0 ? 0 : 2;
}
