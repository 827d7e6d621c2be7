#include "trbell/lhv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <sstream>

#include "trbell/error.hpp"
#include "trbell/parallel.hpp"
#include "trbell/random.hpp"

namespace trbell {

std::vector<DeterministicStrategy> all_deterministic_strategies() {
    std::vector<DeterministicStrategy> out;
    out.reserve(16);
    for (unsigned bits = 0; bits < 16; ++bits) {
        auto v = [&](unsigned k) { return (bits >> (3 - k)) & 1u ? -1 : 1; };
        out.push_back({{v(0), v(1)}, {v(2), v(3)}});
    }
    return out;
}

DeterministicEnumeration enumerate_deterministic() {
    DeterministicEnumeration e;
    const auto all = all_deterministic_strategies();
    e.max_s = -std::numeric_limits<double>::infinity();
    e.min_s = std::numeric_limits<double>::infinity();
    for (const auto& s : all) {
        e.max_s = std::max(e.max_s, s.chsh());
        e.min_s = std::min(e.min_s, s.chsh());
    }
    for (const auto& s : all) {
        if (s.chsh() == e.max_s) e.argmax.push_back(s);
        if (std::abs(s.chsh()) == 2.0) ++e.extremal_count;
    }
    return e;
}

ExpectationProfile::ExpectationProfile(double a1, double a2, double b1, double b2) : v_{a1, a2, b1, b2} {
    for (double x : v_)
        if (!(x >= -1.0 && x <= 1.0)) throw InvalidArgument("expectation values must lie in [-1, 1]");
}

double factorized_chsh(const ExpectationProfile& p) {
    return p.a1() * p.b1() + p.a1() * p.b2() + p.a2() * p.b1() - p.a2() * p.b2();
}

namespace {

void check_efficiency(double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("efficiency must lie in (0, 1]");
}

}  // namespace

double detection_loophole_score(double eta) {
    check_efficiency(eta);
    return 2.0 * std::numbers::sqrt2 * eta * eta / (eta * eta + 2.0 * eta * (1.0 - eta));
}

double unfair_sampling_score(double eta) {
    check_efficiency(eta);
    return 2.0 * std::numbers::sqrt2 * eta * eta / (eta * eta + 4.0 * (1.0 - eta * eta));
}

double chsh_detection_threshold() { return 2.0 / (1.0 + std::numbers::sqrt2); }

double unfair_sampling_threshold() { return std::sqrt(4.0 / (3.0 + std::numbers::sqrt2)); }

double solve_threshold(const std::function<double(double)>& score, double level, double lo, double hi, double tol) {
    if (!(score(lo) < level && score(hi) > level)) throw InvalidArgument("threshold is not bracketed");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (score(mid) > level ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

UnfairSamplingStrategy::UnfairSamplingStrategy(std::vector<HiddenVariable> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgument("strategy needs at least one hidden-variable value");
    double total = 0.0;
    for (const auto& hv : values_) {
        if (!(hv.weight >= 0.0)) throw InvalidArgument("hidden-variable weights must be non-negative");
        for (const auto* side : {&hv.alice, &hv.bob})
            for (int o : side->outcome)
                if (o != 1 && o != -1) throw InvalidArgument("outcomes must be +1 or -1");
        total += hv.weight;
        cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("hidden-variable weights must sum to 1");
}

std::size_t UnfairSamplingStrategy::select(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u * cumulative_.back());
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), values_.size() - 1);
}

std::array<std::array<double, 2>, 2> UnfairSamplingStrategy::detection_marginals() const {
    std::array<std::array<double, 2>, 2> m{};
    for (const auto& hv : values_)
        for (int s = 0; s < 2; ++s) {
            if (hv.alice.detect[s]) m[0][s] += hv.weight;
            if (hv.bob.detect[s]) m[1][s] += hv.weight;
        }
    return m;
}

namespace {

// Weight of strategies in which both sides always click.
double always_detect_weight(double eta) { return std::max(0.0, 4.0 * eta - 3.0); }

}  // namespace

double unfair_sampling_bound(double eta) {
    check_efficiency(eta);
    return 4.0 / (1.0 + always_detect_weight(eta));
}

UnfairSamplingStrategy build_unfair_sampling_strategy(double eta, double target_s) {
    check_efficiency(eta);
    const double bound = unfair_sampling_bound(eta);
    if (!std::isfinite(target_s) || std::abs(target_s) > bound + 1e-12) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "no local strategy reaches post-selected S = " << target_s << " at eta = " << eta
            << "; bound is " << bound;
        throw Infeasible(msg.str(), bound);
    }

    // w: both sides always click. sel: one side clicks on a single setting only (each such
    // value scores +-1 on every pair it registers). none: nobody clicks.
    const double w = always_detect_weight(eta);
    const double none = eta < 0.75 ? 1.0 - 4.0 * eta / 3.0 : 0.0;
    const double sel = 1.0 - w - none;
    // Scale in [-1, 1]; the post-selected S is 4 c / (1 + w) and the overall S is 2 c.
    const double c = std::clamp(target_s * (1.0 + w) / 4.0, -1.0, 1.0);

    std::vector<HiddenVariable> values;
    auto push = [&](LocalResponse a, LocalResponse b, double weight) {
        if (weight > 0.0) values.push_back({a, b, weight});
    };
    const LocalResponse both_plus{{true, true}, {1, 1}};

    push(both_plus, both_plus, w * (1.0 + c) / 2.0);
    push(both_plus, {{true, true}, {-1, -1}}, w * (1.0 - c) / 2.0);

    for (int sign : {1, -1}) {
        const double weight = sel * (1.0 + sign * c) / 2.0 / 4.0;
        // Alice clicks only on A1: a1 b1 = a1 b2 = +sign.
        push({{true, false}, {1, 1}}, {{true, true}, {sign, sign}}, weight);
        // Alice clicks only on A2: a2 b1 = +sign, a2 b2 = -sign.
        push({{false, true}, {1, 1}}, {{true, true}, {sign, -sign}}, weight);
        // Bob clicks only on B1: a1 b1 = a2 b1 = +sign.
        push({{true, true}, {1, 1}}, {{true, false}, {sign, sign}}, weight);
        // Bob clicks only on B2: a1 b2 = +sign, a2 b2 = -sign.
        push({{true, true}, {1, -1}}, {{false, true}, {sign, sign}}, weight);
    }
    push({{false, false}, {1, 1}}, {{false, false}, {1, 1}}, none);

    // Renormalize away rounding so the weights sum to exactly one.
    double total = 0.0;
    for (const auto& hv : values) total += hv.weight;
    for (auto& hv : values) hv.weight /= total;
    return UnfairSamplingStrategy(std::move(values));
}

namespace {

struct AttackTally {
    std::int64_t trials = 0;
    std::int64_t accepted = 0;
    CorrelationTally post_selected;
    CorrelationTally overall;

    void merge(const AttackTally& o) {
        trials += o.trials;
        accepted += o.accepted;
        post_selected.merge(o.post_selected);
        overall.merge(o.overall);
    }
};

}  // namespace

AttackReport simulate_strategy(const UnfairSamplingStrategy& strategy, std::uint64_t trials, std::uint64_t seed,
                               unsigned workers) {
    if (trials == 0) throw InvalidArgument("trials must be >= 1");
    const auto& values = strategy.values();
    const AttackTally t = parallel_tally<AttackTally>(trials, workers, [&](std::uint64_t first, std::uint64_t last) {
        AttackTally tally;
        for (std::uint64_t k = first; k < last; ++k) {
            RandomStream rng = trial_stream(seed, StreamTag::Attack, k);
            const HiddenVariable& hv = values[strategy.select(rng.uniform())];
            const int sa = rng.below(2);
            const int sb = rng.below(2);
            // Each side consults only its own setting.
            const bool click_a = hv.alice.detect[sa];
            const bool click_b = hv.bob.detect[sb];
            const int product = hv.alice.outcome[sa] * hv.bob.outcome[sb];
            ++tally.trials;
            if (click_a && click_b) {
                ++tally.accepted;
                tally.post_selected.add(sa + 1, sb + 1, product);
                tally.overall.add(sa + 1, sb + 1, product);
            } else {
                tally.overall.add(sa + 1, sb + 1, 0);
            }
        }
        return tally;
    });

    AttackReport r;
    r.trials = t.trials;
    r.accepted = t.accepted;
    r.accept_rate = static_cast<double>(t.accepted) / static_cast<double>(t.trials);
    r.post_selected = t.post_selected.estimate();
    r.overall = t.overall.estimate();
    return r;
}

AttackReport unfair_sampling_attack(double eta, double target_s, std::uint64_t trials, std::uint64_t seed,
                                    unsigned workers) {
    if (std::abs(target_s) > 4.0) throw InvalidArgument("|targetS| must not exceed 4");
    return simulate_strategy(build_unfair_sampling_strategy(eta, target_s), trials, seed, workers);
}

}  // namespace trbell
