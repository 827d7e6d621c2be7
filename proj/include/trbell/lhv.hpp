#pragma once

// Local hidden-variable adversaries and detection-efficiency thresholds.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "trbell/chsh_estimate.hpp"

namespace trbell {

// Predetermined outcomes for both settings on both sides.
struct DeterministicStrategy {
    std::array<int, 2> a{1, 1};  // a(A1), a(A2)
    std::array<int, 2> b{1, 1};  // b(B1), b(B2)

    double chsh() const { return a[0] * b[0] + a[0] * b[1] + a[1] * b[0] - a[1] * b[1]; }
};

// All 16 strategies, ordered by the bit pattern (a1, a2, b1, b2) with bit set <-> -1.
std::vector<DeterministicStrategy> all_deterministic_strategies();

struct DeterministicEnumeration {
    double max_s = 0.0;
    double min_s = 0.0;
    std::vector<DeterministicStrategy> argmax;
    std::size_t extremal_count = 0;  // strategies with |S| = 2
};

DeterministicEnumeration enumerate_deterministic();

class ExpectationProfile {
public:
    // Throws InvalidArgument unless every component lies in [-1, 1].
    ExpectationProfile(double a1, double a2, double b1, double b2);

    double a1() const { return v_[0]; }
    double a2() const { return v_[1]; }
    double b1() const { return v_[2]; }
    double b2() const { return v_[3]; }

private:
    std::array<double, 4> v_;
};

// <A1><B1> + <A1><B2> + <A2><B1> - <A2><B2>.
double factorized_chsh(const ExpectationProfile& profile);

// Left-hand sides of the two efficiency conditions; both throw InvalidArgument outside (0, 1].
// Detection loophole:  2 sqrt2 eta^2 / (eta^2 + 2 eta (1 - eta))
double detection_loophole_score(double eta);
// Unfair sampling:     2 sqrt2 eta^2 / (eta^2 + 4 (1 - eta^2))
double unfair_sampling_score(double eta);

// eta at which detection_loophole_score = 2, i.e. 2 / (1 + sqrt2).
double chsh_detection_threshold();
// eta at which unfair_sampling_score = 2, i.e. sqrt(4 / (3 + sqrt2)).
double unfair_sampling_threshold();

// Bisection for the crossing of an increasing score through `level` on [lo, hi].
double solve_threshold(const std::function<double(double)>& score, double level = 2.0, double lo = 1e-6,
                       double hi = 1.0, double tol = 1e-14);

// ---- unfair sampling ----

struct LocalResponse {
    std::array<bool, 2> detect{true, true};
    std::array<int, 2> outcome{1, 1};
};

// One hidden-variable value. Alice's response is a function of her own setting only, and Bob's
// of his; neither can see the remote setting.
struct HiddenVariable {
    LocalResponse alice;
    LocalResponse bob;
    double weight = 0.0;
};

class UnfairSamplingStrategy {
public:
    // Throws InvalidArgument unless weights are non-negative and sum to 1 and outcomes are +-1.
    explicit UnfairSamplingStrategy(std::vector<HiddenVariable> values);

    const std::vector<HiddenVariable>& values() const { return values_; }
    // Index of the hidden variable selected by a uniform draw u in [0, 1).
    std::size_t select(double u) const;
    // Probability that each side registers a photon, per local setting [side][setting - 1].
    std::array<std::array<double, 2>, 2> detection_marginals() const;

private:
    std::vector<HiddenVariable> values_;
    std::vector<double> cumulative_;
};

// Largest post-selected |S| that the construction below reaches while each side registers with
// probability eta: 4 for eta <= 3/4 and 2 / (2 eta - 1) above.
double unfair_sampling_bound(double eta);

// Local strategy whose double-detection correlators give S = target_s with per-side detection
// probability eta at either setting. Mixes deterministic always-detect strategies with ones that
// let one side click on a single setting only. Throws Infeasible (carrying the bound) when
// |target_s| exceeds unfair_sampling_bound(eta).
UnfairSamplingStrategy build_unfair_sampling_strategy(double eta, double target_s);

struct AttackReport {
    CHSHEstimate post_selected;  // over trials where both sides clicked
    CHSHEstimate overall;        // every trial; a missing click contributes 0
    std::int64_t trials = 0;
    std::int64_t accepted = 0;
    double accept_rate = 0.0;
};

// Simulates `strategy` with uniformly random settings on both sides.
AttackReport simulate_strategy(const UnfairSamplingStrategy& strategy, std::uint64_t trials, std::uint64_t seed,
                               unsigned workers = 0);

AttackReport unfair_sampling_attack(double eta, double target_s, std::uint64_t trials, std::uint64_t seed,
                                    unsigned workers = 0);

}  // namespace trbell
