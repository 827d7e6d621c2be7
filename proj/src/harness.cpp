#include "trbell/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "trbell/ch_optimizer.hpp"
#include "trbell/error.hpp"
#include "trbell/lhv.hpp"
#include "trbell/protocols.hpp"

#ifndef TRBELL_VERSION
#define TRBELL_VERSION "0.0.0"
#endif

namespace trbell {

using nlohmann::ordered_json;

std::string library_version() { return TRBELL_VERSION; }

std::string_view to_string(Protocol protocol) {
    switch (protocol) {
        case Protocol::Forward: return "forward";
        case Protocol::Reversed: return "reversed";
        case Protocol::Modified: return "modified";
        case Protocol::Attack: return "attack";
        case Protocol::Thresholds: return "thresholds";
        case Protocol::OptimizeCh: return "optimize-ch";
        case Protocol::Oracle: return "oracle";
    }
    return "thresholds";
}

Protocol parse_protocol(std::string_view name) {
    for (Protocol p : {Protocol::Forward, Protocol::Reversed, Protocol::Modified, Protocol::Attack,
                       Protocol::Thresholds, Protocol::OptimizeCh, Protocol::Oracle})
        if (to_string(p) == name) return p;
    throw InvalidArgument("protocol: unknown protocol '" + std::string(name) + "'");
}

Format parse_format(std::string_view name) {
    if (name == "json") return Format::Json;
    if (name == "csv") return Format::Csv;
    throw InvalidArgument("format: unknown format '" + std::string(name) + "'");
}

void RunConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) { throw InvalidArgument(field + ": " + why); };
    if (!std::isfinite(theta)) fail("theta", "must be finite");
    if (!(eta >= 0.0 && eta <= 1.0)) fail("eta", "must lie in [0, 1]");
    if (trials < 1) fail("trials", "must be >= 1");
    if (!(p >= 0.0 && p <= 1.0)) fail("p", "must lie in [0, 1]");
    if (protocol == Protocol::OptimizeCh && p > 0.05) fail("p", "optimize-ch supports p in [0, 0.05]");
    if (protocol == Protocol::Attack && !(eta > 0.0)) fail("eta", "attack needs eta > 0");
    if (!std::isfinite(target) || std::abs(target) > 4.0) fail("target", "must satisfy |target| <= 4");
    if (sweep_steps < 2) fail("steps", "must be >= 2");
    if (fixed_state_angle && !std::isfinite(*fixed_state_angle)) fail("chi", "must be finite");
    if (budget < 1) fail("budget", "must be >= 1");
    if (bell_state == BellOutcome::Inconclusive) fail("bell_state", "must name a Bell state");
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
    if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
    auto number = [&](const std::string& key) {
        const auto& v = j.at(key);
        if (!v.is_number()) throw InvalidArgument(key + ": expected a number");
        return v.get<double>();
    };
    auto count = [&](const std::string& key) {
        const auto& v = j.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw InvalidArgument(key + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    };
    auto text = [&](const std::string& key) {
        const auto& v = j.at(key);
        if (!v.is_string()) throw InvalidArgument(key + ": expected a string");
        return v.get<std::string>();
    };
    for (const auto& [key, value] : j.items()) {
        if (key == "protocol") c.protocol = parse_protocol(text(key));
        else if (key == "theta") c.theta = number(key);
        else if (key == "eta") c.eta = number(key);
        else if (key == "trials") c.trials = count(key);
        else if (key == "seed") c.seed = count(key);
        else if (key == "p") c.p = number(key);
        else if (key == "output" || key == "out") c.output = text(key);
        else if (key == "bell_state") c.bell_state = value.is_null() ? std::nullopt : std::optional(bell_outcome_from_string(text(key)));
        else if (key == "target") c.target = number(key);
        else if (key == "steps") c.sweep_steps = static_cast<int>(count(key));
        else if (key == "chi") c.fixed_state_angle = value.is_null() ? std::nullopt : std::optional(number(key));
        else if (key == "budget") c.budget = count(key);
        else throw InvalidArgument(key + ": unknown configuration key");
    }
    return c;
}

ordered_json config_to_json(const RunConfig& c) {
    ordered_json j;
    j["protocol"] = std::string(to_string(c.protocol));
    j["theta"] = c.theta;
    j["eta"] = c.eta;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["p"] = c.p;
    j["bell_state"] = c.bell_state ? ordered_json(std::string(to_string(*c.bell_state))) : ordered_json(nullptr);
    j["target"] = c.target;
    j["steps"] = c.sweep_steps;
    j["chi"] = c.fixed_state_angle ? ordered_json(*c.fixed_state_angle) : ordered_json(nullptr);
    j["budget"] = c.budget;
    return j;
}

namespace {

constexpr double kTwoSqrt2 = 2.0 * std::numbers::sqrt2;

ordered_json estimate_json(const CHSHEstimate& e) {
    ordered_json j;
    for (int i = 1; i <= 2; ++i)
        for (int k = 1; k <= 2; ++k) {
            const std::string key = "E" + std::to_string(i) + std::to_string(k);
            j[key] = e.correlator(i, k);
            j[key + "_stderr"] = e.stderrs[i - 1][k - 1];
            j["N" + std::to_string(i) + std::to_string(k)] = e.count(i, k);
        }
    j["S"] = e.s;
    j["S_stderr"] = e.stderr_s;
    return j;
}

ordered_json table_json(const CorrelatorTable& t) {
    ordered_json j;
    for (int i = 1; i <= 2; ++i)
        for (int k = 1; k <= 2; ++k) j["E" + std::to_string(i) + std::to_string(k)] = t.correlator(i, k);
    j["S"] = t.s;
    return j;
}

// Fraction with its binomial standard error.
ordered_json fraction_json(std::int64_t hits, std::int64_t total) {
    const double f = static_cast<double>(hits) / static_cast<double>(total);
    return {{"value", f}, {"stderr", std::sqrt(f * (1.0 - f) / static_cast<double>(total))}, {"count", hits}};
}

ordered_json run_thresholds() {
    ordered_json j;
    j["chsh_threshold"] = chsh_detection_threshold();
    j["unfair_sampling_threshold"] = unfair_sampling_threshold();
    j["chsh_threshold_bisection"] = solve_threshold(detection_loophole_score);
    j["unfair_sampling_threshold_bisection"] = solve_threshold(unfair_sampling_score);
    return j;
}

ordered_json run_forward(const RunConfig& c, unsigned workers) {
    const ForwardBatch b = run_forward_batch(c.theta, DetectorModel(c.eta), c.trials, c.seed, workers);
    const ForwardOracle o = exact_forward_correlators(c.theta);
    ordered_json j;
    j["trials"] = b.trials;
    j["psi_plus"] = fraction_json(b.psi_plus, b.trials);
    j["psi_minus"] = fraction_json(b.psi_minus, b.trials);
    j["inconclusive"] = fraction_json(b.inconclusive, b.trials);
    j["psi_minus_estimate"] = estimate_json(b.psi_minus_tally.estimate());
    ordered_json oj = table_json(o.psi_minus);
    oj["psi_minus_prob"] = o.psi_minus_prob;
    oj["inconclusive_prob_eta1"] = o.inconclusive_prob;
    j["oracle"] = oj;
    return j;
}

ordered_json run_reversed(const RunConfig& c, unsigned workers) {
    const ReversedBatch b = run_reversed_batch(c.bell_state, c.theta, DetectorModel(c.eta), c.trials, c.seed, workers);
    ordered_json j;
    j["trials"] = b.trials;
    j["both_registered"] = fraction_json(b.both_registered, b.trials);
    ordered_json by_state = ordered_json::object();
    for (BellOutcome s : {BellOutcome::PhiPlus, BellOutcome::PhiMinus, BellOutcome::PsiPlus, BellOutcome::PsiMinus}) {
        if (c.bell_state && *c.bell_state != s) continue;
        const ordered_json exact = {{"S", chsh_value(bell_state(s), ChshSettings::rotated(c.theta))}};
        by_state[std::string(to_string(s))] = {{"estimate", estimate_json(b.by_state[static_cast<int>(s)].estimate())},
                                               {"exact", exact}};
    }
    j["by_state"] = by_state;
    j["unconditioned"] = estimate_json(b.unconditioned.estimate());
    return j;
}

ordered_json run_modified(const RunConfig& c, unsigned workers) {
    const ModifiedBatch b = run_modified_batch(c.theta, DetectorModel(c.eta), c.trials, c.seed, workers);
    const ModifiedOracle o = exact_modified_correlators(c.theta);
    const CHSHEstimate e = b.tally.estimate();
    ordered_json j;
    j["trials"] = b.trials;
    j["accepted"] = fraction_json(b.accepted, b.trials);
    j["estimate"] = estimate_json(e);
    ordered_json oj = table_json(o.table);
    oj["accept_prob_eta1"] = o.mean_accept_prob;
    j["oracle"] = oj;
    j["deviation_in_stderr"] = (e.s - o.table.s) / e.stderr_s;
    return j;
}

ordered_json run_attack(const RunConfig& c, unsigned workers) {
    const double target = c.target == 0.0 ? kTwoSqrt2 : c.target;
    const AttackReport r = unfair_sampling_attack(c.eta, target, c.trials, c.seed, workers);
    ordered_json j;
    j["target_S"] = target;
    j["bound_S"] = unfair_sampling_bound(c.eta);
    j["trials"] = r.trials;
    j["accept_rate"] = fraction_json(r.accepted, r.trials);
    j["post_selected"] = estimate_json(r.post_selected);
    j["overall"] = estimate_json(r.overall);
    return j;
}

ordered_json run_optimize(const RunConfig& c) {
    EfficiencySearchOptions opt;
    opt.noise = c.p;
    opt.fixed_state_angle = c.fixed_state_angle;
    opt.budget = c.budget;
    opt.seed = c.seed;
    const EfficiencySearchResult r = min_efficiency_search(opt);
    ordered_json j;
    j["eta_min"] = r.eta_min;
    j["tolerance"] = opt.tolerance;
    j["argmax"] = {{"chi", r.argmax.state_angle}, {"p", r.argmax.noise}, {"a1", r.argmax.a1},
                   {"a2", r.argmax.a2},           {"b1", r.argmax.b1},   {"b2", r.argmax.b2}};
    j["s_ch_above_eta_min"] = r.s_ch_above;
    j["evaluations"] = r.evaluations;
    return j;
}

std::pair<ordered_json, CsvTable> run_oracle(const RunConfig& c) {
    CsvTable table;
    table.header = {"theta", "E11", "E12", "E21", "E22", "S", "acceptProb"};
    ordered_json sweep = ordered_json::array();
    double max_dev = 0.0;
    for (int k = 0; k < c.sweep_steps; ++k) {
        const double theta = k * (std::numbers::pi / 2) / (c.sweep_steps - 1);
        const ModifiedOracle o = exact_modified_correlators(theta);
        const auto& t = o.table;
        table.rows.push_back({theta, t.correlator(1, 1), t.correlator(1, 2), t.correlator(2, 1), t.correlator(2, 2),
                              t.s, o.mean_accept_prob});
        ordered_json row = {{"theta", theta}};
        row.update(table_json(t));
        row["acceptProb"] = o.mean_accept_prob;
        sweep.push_back(row);
        max_dev = std::max(max_dev, std::abs(t.s + kTwoSqrt2));
    }
    ordered_json j;
    j["sweep"] = sweep;
    j["max_abs_deviation_from_minus_2sqrt2"] = max_dev;
    j["minus_2sqrt2_for_all_theta"] = max_dev <= 1e-12;
    return {j, table};
}

}  // namespace

RunSummary run(const RunConfig& config, unsigned workers) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    RunSummary s;
    s.config = config;
    s.version = library_version();
    switch (config.protocol) {
        case Protocol::Thresholds: s.results = run_thresholds(); break;
        case Protocol::Forward: s.results = run_forward(config, workers); break;
        case Protocol::Reversed: s.results = run_reversed(config, workers); break;
        case Protocol::Modified: s.results = run_modified(config, workers); break;
        case Protocol::Attack: s.results = run_attack(config, workers); break;
        case Protocol::OptimizeCh: s.results = run_optimize(config); break;
        case Protocol::Oracle: {
            auto [j, table] = run_oracle(config);
            s.results = std::move(j);
            s.table = std::move(table);
            break;
        }
    }
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

std::string format_double(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void write_json(const ordered_json& j, std::string& out) {
    switch (j.type()) {
        case ordered_json::value_t::object: {
            out += '{';
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out += ',';
                first = false;
                out += ordered_json(k).dump();
                out += ':';
                write_json(v, out);
            }
            out += '}';
            break;
        }
        case ordered_json::value_t::array: {
            out += '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ',';
                write_json(j[i], out);
            }
            out += ']';
            break;
        }
        case ordered_json::value_t::number_float: out += format_double(j.get<double>()); break;
        default: out += j.dump(); break;
    }
}

std::string csv_field(const ordered_json& v) {
    std::string s;
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) s = v.get<std::string>();
    else s = v.dump();
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    return quoted + '"';
}

void flatten(const ordered_json& j, const std::string& prefix, CsvTable& t) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, t);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), t);
    } else {
        t.rows.push_back({prefix, j});
    }
}

}  // namespace

std::string dump_json(const ordered_json& j) {
    std::string out;
    write_json(j, out);
    return out;
}

std::string emit(const RunSummary& summary, Format format) {
    if (format == Format::Json) {
        ordered_json j;
        j["version"] = summary.version;
        j["config"] = config_to_json(summary.config);
        for (const auto& [k, v] : summary.results.items()) j[k] = v;
        return dump_json(j) + "\n";
    }

    CsvTable flat;
    const CsvTable* table = nullptr;
    if (summary.table) {
        table = &*summary.table;
    } else {
        flat.header = {"key", "value"};
        flatten(config_to_json(summary.config), "config", flat);
        flatten(summary.results, "", flat);
        table = &flat;
    }
    std::string out;
    auto line = [&](const auto& fields, auto to_text) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += to_text(fields[i]);
        }
        out += "\r\n";
    };
    line(table->header, [](const std::string& s) { return csv_field(ordered_json(s)); });
    for (const auto& row : table->rows) line(row, [](const ordered_json& v) { return csv_field(v); });
    return out;
}

std::string error_object(std::string_view kind, std::string_view message) {
    ordered_json j;
    j["error"] = {{"kind", std::string(kind)}, {"message", std::string(message)}};
    return dump_json(j) + "\n";
}

}  // namespace trbell
