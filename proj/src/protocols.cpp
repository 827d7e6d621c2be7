#include "trbell/protocols.hpp"

#include <cmath>
#include <numbers>

#include "trbell/error.hpp"
#include "trbell/parallel.hpp"

namespace trbell {

CHSHEstimate CorrelationTally::estimate() const {
    CHSHEstimate est;
    double var_s = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const Cell& c = cells_[i][j];
            if (c.count == 0) throw InsufficientData(i + 1, j + 1);
            const double n = static_cast<double>(c.count);
            const double mean = static_cast<double>(c.sum) / n;
            const double second = static_cast<double>(c.sum_sq) / n;
            const double var = std::max(0.0, second - mean * mean) / n;
            est.counts[i][j] = c.count;
            est.correlators[i][j] = mean;
            est.stderrs[i][j] = std::sqrt(var);
            var_s += var;
        }
    }
    const auto& e = est.correlators;
    est.s = e[0][0] + e[0][1] + e[1][0] - e[1][1];
    est.stderr_s = std::sqrt(var_s);
    return est;
}

PrepChoice PrepChoice::sample(Side side, RandomStream& rng) {
    const int basis = 1 + rng.below(2);
    return {side, basis, rng.sign()};
}

double setting_angle(Side side, int basis_index, double theta) {
    using std::numbers::pi;
    if (basis_index != 1 && basis_index != 2) throw InvalidArgument("basis index must be 1 or 2");
    if (side == Side::Alice) return basis_index == 1 ? theta : theta + pi / 2;
    return basis_index == 1 ? theta + pi / 4 : theta - pi / 4;
}

QubitState prepare_state(const PrepChoice& choice, double theta) {
    if (choice.bit != 1 && choice.bit != -1) throw InvalidArgument("preparation bit must be +1 or -1");
    return observable_eigenstate(Observable(setting_angle(choice.side, choice.basis_index, theta)), choice.bit);
}

DetectorModel::DetectorModel(double efficiency) : eta_(efficiency) {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw InvalidArgument("detection efficiency must lie in [0, 1]");
}

namespace {

// The eight states a side can prepare for a fixed theta, indexed [basis - 1][bit == +1].
class PreparationTable {
public:
    explicit PreparationTable(double theta)
        : states_{{{prepare_state({Side::Alice, 1, -1}, theta), prepare_state({Side::Alice, 1, 1}, theta)},
                   {prepare_state({Side::Alice, 2, -1}, theta), prepare_state({Side::Alice, 2, 1}, theta)},
                   {prepare_state({Side::Bob, 1, -1}, theta), prepare_state({Side::Bob, 1, 1}, theta)},
                   {prepare_state({Side::Bob, 2, -1}, theta), prepare_state({Side::Bob, 2, 1}, theta)}}} {}

    const QubitState& operator[](const PrepChoice& c) const {
        const int row = (c.side == Side::Alice ? 0 : 2) + c.basis_index - 1;
        return states_[row][c.bit == 1 ? 1 : 0];
    }

private:
    std::array<std::array<QubitState, 2>, 4> states_;
};

ModifiedTrialRecord modified_from(const PrepChoice& pa, const PrepChoice& pb, const QubitState& a,
                                  const QubitState& b, const DetectorModel& detector, RandomStream& rng) {
    ModifiedTrialRecord r{pa, pb, measure_modified(a, b, detector, rng), false};
    r.accepted = accept(r.events);
    return r;
}

ReversedTrialRecord reversed_from(BellOutcome state, const ChshSettings& settings, const DetectorModel& detector,
                                  RandomStream& rng) {
    const int sa = 1 + rng.below(2);
    const int sb = 1 + rng.below(2);
    const TwoQubitState psi = bell_state(state);
    const Observable& oa = settings.alice(sa);
    const Observable& ob = settings.bob(sb);

    // Joint Born probabilities over (outcome_a, outcome_b), outcome index 0 <-> +1.
    std::array<double, 4> p{};
    for (int x = 0; x < 2; ++x) {
        const QubitState ea = observable_eigenstate(oa, x == 0 ? 1 : -1);
        for (int y = 0; y < 2; ++y) {
            const QubitState eb = observable_eigenstate(ob, y == 0 ? 1 : -1);
            const TwoQubitState e = tensor(ea, eb);
            Complex amp = 0.0;
            for (std::size_t k = 0; k < 4; ++k) amp += std::conj(e[k]) * psi[k];
            p[2 * x + y] = std::norm(amp);
        }
    }
    const double u = rng.uniform();
    int pick = 3;
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        acc += p[k];
        if (u < acc) {
            pick = k;
            break;
        }
    }
    ReversedTrialRecord r{state, sa, sb, {}, {}};
    r.outcome_a = {detector.registers(rng), pick / 2};
    r.outcome_b = {detector.registers(rng), pick % 2};
    return r;
}

constexpr std::array<BellOutcome, 4> kBellStates = {BellOutcome::PhiPlus, BellOutcome::PhiMinus,
                                                     BellOutcome::PsiPlus, BellOutcome::PsiMinus};

}  // namespace

BellOutcome measure_forward(const QubitState& a, const QubitState& b, const DetectorModel& detector,
                            RandomStream& rng) {
    const bool reg_a = detector.registers(rng);
    const bool reg_b = detector.registers(rng);
    const BellOutcome outcome = partial_bsm(tensor(a, b), rng);
    return reg_a && reg_b ? outcome : BellOutcome::Inconclusive;
}

ForwardTrialRecord run_forward_trial(const PrepChoice& prep_a, const PrepChoice& prep_b, double theta,
                                     const DetectorModel& detector, RandomStream& rng) {
    return {prep_a, prep_b, measure_forward(prepare_state(prep_a, theta), prepare_state(prep_b, theta), detector, rng)};
}

ForwardTrialRecord run_forward_trial(double theta, const DetectorModel& detector, RandomStream& rng) {
    const PrepChoice pa = PrepChoice::sample(Side::Alice, rng);
    const PrepChoice pb = PrepChoice::sample(Side::Bob, rng);
    return run_forward_trial(pa, pb, theta, detector, rng);
}

ReversedTrialRecord run_reversed_trial(std::optional<BellOutcome> forced_state, double theta,
                                       const DetectorModel& detector, RandomStream& rng) {
    if (forced_state == BellOutcome::Inconclusive) throw InvalidArgument("Charlie must prepare a Bell state");
    const BellOutcome state = forced_state ? *forced_state : kBellStates[rng.below(4)];
    return reversed_from(state, ChshSettings::rotated(theta), detector, rng);
}

bool accept(const ModifiedEvents& e) {
    for (const auto& ev : e)
        if (!ev.registered) return false;
    return e[0].port != e[1].port && e[2].port != e[3].port;
}

bool accept(const ModifiedTrialRecord& record) { return accept(record.events); }

ModifiedEvents measure_modified(const QubitState& a, const QubitState& b, const DetectorModel& detector,
                                RandomStream& rng) {
    ModifiedEvents ev;
    ev[0].port = pbs_measure(a, MeasBasis::Rectilinear, rng).port;
    ev[1].port = pbs_measure(b, MeasBasis::Rectilinear, rng).port;
    ev[2].port = pbs_measure(a, MeasBasis::Diagonal, rng).port;
    ev[3].port = pbs_measure(b, MeasBasis::Diagonal, rng).port;
    for (auto& e : ev) e.registered = detector.registers(rng);
    return ev;
}

ModifiedTrialRecord run_modified_trial(const PrepChoice& prep_a, const PrepChoice& prep_b, double theta,
                                       const DetectorModel& detector, RandomStream& rng) {
    return modified_from(prep_a, prep_b, prepare_state(prep_a, theta), prepare_state(prep_b, theta), detector, rng);
}

ModifiedTrialRecord run_modified_trial(double theta, const DetectorModel& detector, RandomStream& rng) {
    const PrepChoice pa = PrepChoice::sample(Side::Alice, rng);
    const PrepChoice pb = PrepChoice::sample(Side::Bob, rng);
    return run_modified_trial(pa, pb, theta, detector, rng);
}

CHSHEstimate chsh_from_accepted(std::span<const ModifiedTrialRecord> records) {
    CorrelationTally tally;
    for (const auto& r : records)
        if (r.accepted) tally.add(r.prep_a.basis_index, r.prep_b.basis_index, r.prep_a.bit * r.prep_b.bit);
    return tally.estimate();
}

namespace {

double re(Complex z) { return z.real(); }

}  // namespace

double anti_corr_prob_rect(const QubitState& a, const QubitState& b) {
    const double ga = re(a.a0()), da = re(a.a1()), gb = re(b.a0()), db = re(b.a1());
    return ga * ga * db * db + da * da * gb * gb;
}

double anti_corr_prob_diag(const QubitState& a, const QubitState& b) {
    const double ga = re(a.a0()), da = re(a.a1()), gb = re(b.a0()), db = re(b.a1());
    const double x = ga * gb - da * db;
    const double y = ga * db - da * gb;
    return (x * x + y * y) / 2.0;
}

double paper_success_probability(const QubitState& a, const QubitState& b) {
    const double ga = re(a.a0()), da = re(a.a1()), gb = re(b.a0()), db = re(b.a1());
    const double d = ga * ga * db * db - da * da * gb * gb;
    return d * d / 4.0;
}

double success_probability_oracle(const QubitState& a, const QubitState& b) {
    return anti_corr_prob_rect(a, b) * anti_corr_prob_diag(a, b);
}

namespace {

// Weighted correlator enumeration over the 16 (basis, bit) combinations.
template <typename WeightFn>
CorrelatorTable enumerate_weighted(double theta, WeightFn weight, double& mean_weight) {
    CorrelatorTable t;
    mean_weight = 0.0;
    for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
            double num = 0.0, den = 0.0;
            for (int x : {1, -1}) {
                for (int y : {1, -1}) {
                    const double w = weight(prepare_state({Side::Alice, i, x}, theta),
                                            prepare_state({Side::Bob, j, y}, theta));
                    num += x * y * w;
                    den += w;
                }
            }
            t.correlators[i - 1][j - 1] = num / den;
            mean_weight += den / 16.0;
        }
    }
    const auto& e = t.correlators;
    t.s = e[0][0] + e[0][1] + e[1][0] - e[1][1];
    return t;
}

}  // namespace

ModifiedOracle exact_modified_correlators(double theta) {
    ModifiedOracle o;
    o.table = enumerate_weighted(theta, success_probability_oracle, o.mean_accept_prob);
    return o;
}

ForwardOracle exact_forward_correlators(double theta) {
    ForwardOracle o;
    o.psi_minus = enumerate_weighted(
        theta, [](const QubitState& a, const QubitState& b) {
            return bs_transform(tensor(a, b)).probability(BellOutcome::PsiMinus);
        },
        o.psi_minus_prob);
    double conclusive = 0.0;
    enumerate_weighted(
        theta, [](const QubitState& a, const QubitState& b) {
            const BellAmplitudes amps = bs_transform(tensor(a, b));
            return amps.probability(BellOutcome::PsiPlus) + amps.probability(BellOutcome::PsiMinus);
        },
        conclusive);
    o.inconclusive_prob = 1.0 - conclusive;
    return o;
}

void ForwardBatch::merge(const ForwardBatch& o) {
    trials += o.trials;
    psi_plus += o.psi_plus;
    psi_minus += o.psi_minus;
    inconclusive += o.inconclusive;
    psi_minus_tally.merge(o.psi_minus_tally);
}

void ReversedBatch::merge(const ReversedBatch& o) {
    trials += o.trials;
    both_registered += o.both_registered;
    for (std::size_t k = 0; k < by_state.size(); ++k) by_state[k].merge(o.by_state[k]);
    unconditioned.merge(o.unconditioned);
}

void ModifiedBatch::merge(const ModifiedBatch& o) {
    trials += o.trials;
    accepted += o.accepted;
    tally.merge(o.tally);
}

ForwardBatch run_forward_batch(double theta, const DetectorModel& detector, std::uint64_t trials,
                               std::uint64_t seed, unsigned workers) {
    const PreparationTable table(theta);
    return parallel_tally<ForwardBatch>(trials, workers, [&](std::uint64_t first, std::uint64_t last) {
        ForwardBatch b;
        for (std::uint64_t k = first; k < last; ++k) {
            RandomStream rng = trial_stream(seed, StreamTag::Forward, k);
            const PrepChoice pa = PrepChoice::sample(Side::Alice, rng);
            const PrepChoice pb = PrepChoice::sample(Side::Bob, rng);
            const BellOutcome out = measure_forward(table[pa], table[pb], detector, rng);
            ++b.trials;
            switch (out) {
                case BellOutcome::PsiPlus: ++b.psi_plus; break;
                case BellOutcome::PsiMinus:
                    ++b.psi_minus;
                    b.psi_minus_tally.add(pa.basis_index, pb.basis_index, pa.bit * pb.bit);
                    break;
                default: ++b.inconclusive; break;
            }
        }
        return b;
    });
}

ReversedBatch run_reversed_batch(std::optional<BellOutcome> forced_state, double theta,
                                 const DetectorModel& detector, std::uint64_t trials, std::uint64_t seed,
                                 unsigned workers) {
    if (forced_state == BellOutcome::Inconclusive) throw InvalidArgument("Charlie must prepare a Bell state");
    const ChshSettings settings = ChshSettings::rotated(theta);
    return parallel_tally<ReversedBatch>(trials, workers, [&](std::uint64_t first, std::uint64_t last) {
        ReversedBatch b;
        for (std::uint64_t k = first; k < last; ++k) {
            RandomStream rng = trial_stream(seed, StreamTag::Reversed, k);
            const BellOutcome state = forced_state ? *forced_state : kBellStates[rng.below(4)];
            const ReversedTrialRecord r = reversed_from(state, settings, detector, rng);
            ++b.trials;
            if (!r.both_registered()) continue;
            ++b.both_registered;
            const int v = r.value_a() * r.value_b();
            b.by_state[static_cast<std::size_t>(r.state)].add(r.setting_a, r.setting_b, v);
            b.unconditioned.add(r.setting_a, r.setting_b, v);
        }
        return b;
    });
}

ModifiedBatch run_modified_batch(double theta, const DetectorModel& detector, std::uint64_t trials,
                                 std::uint64_t seed, unsigned workers) {
    const PreparationTable table(theta);
    return parallel_tally<ModifiedBatch>(trials, workers, [&](std::uint64_t first, std::uint64_t last) {
        ModifiedBatch b;
        for (std::uint64_t k = first; k < last; ++k) {
            RandomStream rng = trial_stream(seed, StreamTag::Modified, k);
            const PrepChoice pa = PrepChoice::sample(Side::Alice, rng);
            const PrepChoice pb = PrepChoice::sample(Side::Bob, rng);
            ++b.trials;
            if (!accept(measure_modified(table[pa], table[pb], detector, rng))) continue;
            ++b.accepted;
            b.tally.add(pa.basis_index, pb.basis_index, pa.bit * pb.bit);
        }
        return b;
    });
}

namespace {

struct Count {
    std::int64_t n = 0;
    void merge(const Count& o) { n += o.n; }
};

}  // namespace

std::int64_t count_accepted(const QubitState& state_a, const QubitState& state_b, const DetectorModel& detector,
                            std::uint64_t trials, std::uint64_t seed, std::uint64_t stream, unsigned workers) {
    const std::uint64_t sub_seed = mix64(seed ^ mix64(stream + 1));
    return parallel_tally<Count>(trials, workers, [&](std::uint64_t first, std::uint64_t last) {
               Count c;
               for (std::uint64_t k = first; k < last; ++k) {
                   RandomStream rng = trial_stream(sub_seed, StreamTag::Audit, k);
                   if (accept(measure_modified(state_a, state_b, detector, rng))) ++c.n;
               }
               return c;
           }).n;
}

}  // namespace trbell
