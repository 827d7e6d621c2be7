#pragma once

// CH inequality for noisy non-maximally entangled states and the search for the smallest
// detection efficiency at which it can be violated.
//
// Detection model: P(a) = eta Tr(rho (P+(a) x I)), P(a, b) = eta^2 Tr(rho (P+(a) x P+(b))),
// where P+(phi) projects on the +1 eigenstate of the x-z plane observable at angle phi.
// No-click events do not enter any probability.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "trbell/quantum_core.hpp"

namespace trbell {

struct EberhardConfig {
    double state_angle = 0.0;  // chi in cos(chi)|00> + sin(chi)|11>
    double noise = 0.0;        // white-noise weight p
    double a1 = 0.0;
    double a2 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double efficiency = 1.0;

    // Throws InvalidArgument unless noise and efficiency lie in [0, 1] and all fields are finite.
    void validate() const;
};

struct CHResult {
    double p_a1 = 0.0;
    double p_b1 = 0.0;
    std::array<std::array<double, 2>, 2> coincidences{};  // [i - 1][j - 1] = P(a_i, b_j)
    double s_ch = 0.0;
};

// (1 - p)|Phi_chi><Phi_chi| + p I/4. Throws InvalidArgument for p outside [0, 1].
DensityMatrix4 eberhard_state(double state_angle, double noise);

// P(a1,b1) + P(a2,b1) + P(a1,b2) - P(a2,b2) - P(a1) - P(b1), evaluated on the density matrix.
CHResult ch_value(const EberhardConfig& config);

struct EfficiencySearchOptions {
    double noise = 0.0;
    std::optional<double> fixed_state_angle;  // restrict chi, e.g. pi/4 for maximal entanglement
    std::uint64_t budget = 20'000'000;        // maximum objective evaluations
    double tolerance = 1e-3;                  // on eta
    std::uint64_t seed = 1;
};

struct EfficiencySearchResult {
    double eta_min = 1.0;
    EberhardConfig argmax;     // best configuration found at eta_min
    double s_ch_above = 0.0;   // S_CH of argmax at eta_min (1 + 1e-3)
    std::uint64_t evaluations = 0;
};

class BudgetExhausted : public std::runtime_error {
public:
    BudgetExhausted(const std::string& what, EfficiencySearchResult best)
        : std::runtime_error(what), best_(best) {}
    const EfficiencySearchResult& best_so_far() const { return best_; }

private:
    EfficiencySearchResult best_;
};

struct ViolationSearch {
    EberhardConfig config;
    double s_ch = 0.0;
    std::uint64_t evaluations = 0;
};

// Maximizes S_CH at fixed eta over (chi, a1, a2, b1, b2): a coarse grid (17 state angles,
// 9 points per measurement angle) followed by Nelder-Mead refinement of the best grid points
// and a few seeded random starts. Throws BudgetExhausted if `budget` evaluations do not suffice.
ViolationSearch maximize_ch(double eta, const EfficiencySearchOptions& options, std::uint64_t budget);

// Bisection on eta in [1/2, 1] for the smallest efficiency with max S_CH > 0.
// Throws InvalidArgument if noise lies outside [0, 0.05] or no violation exists at eta = 1,
// and BudgetExhausted (with the best bracket so far) when the budget runs out.
EfficiencySearchResult min_efficiency_search(const EfficiencySearchOptions& options);

}  // namespace trbell
