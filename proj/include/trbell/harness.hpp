#pragma once

// Seeded experiment orchestration and result emission.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trbell/quantum_core.hpp"

namespace trbell {

enum class Protocol { Forward, Reversed, Modified, Attack, Thresholds, OptimizeCh, Oracle };
enum class Format { Json, Csv };

std::string_view to_string(Protocol protocol);
// Throws InvalidArgument naming the unknown protocol.
Protocol parse_protocol(std::string_view name);
Format parse_format(std::string_view name);

struct RunConfig {
    Protocol protocol = Protocol::Thresholds;
    double theta = 0.0;
    double eta = 1.0;
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 1;
    double p = 0.0;             // optimize-ch noise
    std::string output;         // empty: stdout

    std::optional<BellOutcome> bell_state;  // reversed: force Charlie's state
    double target = 0.0;                    // attack: post-selected S to fake; 0 selects 2 sqrt2
    int sweep_steps = 33;                   // oracle: theta points over [0, pi/2]
    std::optional<double> fixed_state_angle;  // optimize-ch: restrict chi
    std::uint64_t budget = 20'000'000;        // optimize-ch: objective evaluations

    // Throws InvalidArgument naming the offending field.
    void validate() const;
};

// Reads the RunConfig keys present in `j` on top of `base`. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::ordered_json config_to_json(const RunConfig& config);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<nlohmann::ordered_json>> rows;
};

struct RunSummary {
    RunConfig config;
    nlohmann::ordered_json results;  // protocol-specific; every MC estimate carries a standard error
    std::optional<CsvTable> table;   // sweep output, when the protocol produces one
    double wall_seconds = 0.0;       // not emitted, so output stays reproducible
    std::string version;
};

// Dispatches to the protocol; `workers` only affects speed, never the numbers.
RunSummary run(const RunConfig& config, unsigned workers = 0);

// JSON: one object, floats at 17 significant digits. CSV: the sweep table when present,
// otherwise key,value rows of the flattened results; RFC 4180 quoting.
std::string emit(const RunSummary& summary, Format format);

std::string format_double(double v);
std::string dump_json(const nlohmann::ordered_json& j);
std::string error_object(std::string_view kind, std::string_view message);

std::string library_version();

}  // namespace trbell
