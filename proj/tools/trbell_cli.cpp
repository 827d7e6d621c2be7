// trbell: run time-reversal Bell test experiments and emit JSON or CSV summaries.
//
//   trbell --protocol modified --theta 0 --eta 1 --trials 10000000 --seed 42
//   trbell --protocol oracle --steps 33 --format csv --out sweep.csv
//   trbell --config run.json --seed 7        (flags win over the config file)
//
// Exit status is 0 on success. On failure a JSON error object is printed to stdout and the
// status is 2 for usage errors and 1 otherwise.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trbell/ch_optimizer.hpp"
#include "trbell/error.hpp"
#include "trbell/harness.hpp"

namespace {

int fail(std::string_view kind, std::string_view message, int status) {
    std::cout << trbell::error_object(kind, message);
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-reversal Bell test simulator"};

    std::string protocol, format = "json", out, config_path, bell_state;
    double theta = 0.0, eta = 1.0, p = 0.0, target = 0.0, chi = 0.0;
    std::uint64_t trials = 0, seed = 0, budget = 0;
    int steps = 0;
    unsigned workers = 0;
    bool timing = false;

    auto* o_protocol = app.add_option("--protocol", protocol,
                                      "forward | reversed | modified | attack | thresholds | optimize-ch | oracle");
    auto* o_theta = app.add_option("--theta", theta, "Settings rotation in radians");
    auto* o_eta = app.add_option("--eta", eta, "Detection efficiency in [0, 1]");
    auto* o_trials = app.add_option("--trials", trials, "Number of Monte Carlo trials");
    auto* o_seed = app.add_option("--seed", seed, "Master seed (64-bit unsigned)");
    auto* o_p = app.add_option("--p", p, "White-noise weight for optimize-ch");
    app.add_option("--format", format, "json | csv");
    auto* o_out = app.add_option("--out", out, "Output file (default stdout)");
    app.add_option("--config", config_path, "JSON config file; flags override its keys");
    auto* o_bell = app.add_option("--bell-state", bell_state, "reversed: force Charlie's state (phi+, phi-, psi+, psi-)");
    auto* o_target = app.add_option("--target", target, "attack: post-selected S to fake (default 2 sqrt2)");
    auto* o_steps = app.add_option("--steps", steps, "oracle: number of theta points over [0, pi/2]");
    auto* o_chi = app.add_option("--chi", chi, "optimize-ch: fix the state angle");
    auto* o_budget = app.add_option("--budget", budget, "optimize-ch: maximum objective evaluations");
    app.add_option("--workers", workers, "Worker threads (0 = all cores); never changes the output");
    app.add_flag("--timing", timing, "Print wall-clock time to stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    trbell::RunSummary summary;
    trbell::Format fmt;
    try {
        trbell::RunConfig config;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw trbell::InvalidArgument("config: cannot open '" + config_path + "'");
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw trbell::InvalidArgument(std::string("config: ") + e.what());
            }
            config = trbell::config_from_json(j);
        }
        if (*o_protocol) config.protocol = trbell::parse_protocol(protocol);
        if (*o_theta) config.theta = theta;
        if (*o_eta) config.eta = eta;
        if (*o_trials) config.trials = trials;
        if (*o_seed) config.seed = seed;
        if (*o_p) config.p = p;
        if (*o_out) config.output = out;
        if (*o_bell) config.bell_state = trbell::bell_outcome_from_string(bell_state);
        if (*o_target) config.target = target;
        if (*o_steps) config.sweep_steps = steps;
        if (*o_chi) config.fixed_state_angle = chi;
        if (*o_budget) config.budget = budget;
        if (config_path.empty() && !*o_protocol) throw trbell::InvalidArgument("protocol: --protocol is required");
        fmt = trbell::parse_format(format);
        config.validate();

        summary = trbell::run(config, workers);
    } catch (const trbell::InvalidArgument& e) {
        return fail("usage", e.what(), 2);
    } catch (const trbell::InsufficientData& e) {
        return fail("insufficient_data", e.what(), 1);
    } catch (const trbell::Infeasible& e) {
        return fail("infeasible", e.what(), 1);
    } catch (const trbell::BudgetExhausted& e) {
        return fail("budget_exhausted", e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }

    const std::string text = trbell::emit(summary, fmt);
    if (summary.config.output.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(summary.config.output, std::ios::binary);
        f << text;
        if (!f) return fail("io", "cannot write '" + summary.config.output + "'", 1);
    }
    if (timing) std::fprintf(stderr, "elapsed %.3f s\n", summary.wall_seconds);
    return 0;
}
