#pragma once

// Trial runners for the three time-reversal Bell test variants.
//
//  forward   Alice and Bob prepare eigenstates of their randomly chosen observables with random
//            bits; Charlie's partial Bell measurement post-selects Psi-.
//  reversed  Charlie prepares a Bell state; Alice and Bob measure it with random settings.
//  modified  Each side prepares two identical copies of its state (the preparer knows the state,
//            so this is not cloning) and measures one copy in the rectilinear and one in the
//            diagonal basis with a local PBS. A run is kept when both pairs of clicks are
//            anti-correlated.
//
// Detection loss is an independent Bernoulli(eta) per photon; a lost photon in the modified
// protocol rejects the run.

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "trbell/chsh_estimate.hpp"
#include "trbell/quantum_core.hpp"
#include "trbell/random.hpp"

namespace trbell {

enum class Side : std::uint8_t { Alice, Bob };

struct PrepChoice {
    Side side;
    int basis_index;  // 1 or 2
    int bit;          // -1 or +1

    static PrepChoice sample(Side side, RandomStream& rng);
};

// Observable angle for a preparation basis under the settings rotation theta.
double setting_angle(Side side, int basis_index, double theta);

QubitState prepare_state(const PrepChoice& choice, double theta);

class DetectorModel {
public:
    explicit DetectorModel(double efficiency);
    double efficiency() const noexcept { return eta_; }
    bool registers(RandomStream& rng) const { return rng.bernoulli(eta_); }

private:
    double eta_;
};

struct DetectionEvent {
    bool registered = false;
    int port = 0;  // meaningful only when registered
};

// ---- forward protocol ----

struct ForwardTrialRecord {
    PrepChoice prep_a;
    PrepChoice prep_b;
    BellOutcome outcome;
};

// Both photons must register before Charlie's partial Bell measurement can report Psi+ or Psi-.
BellOutcome measure_forward(const QubitState& state_a, const QubitState& state_b, const DetectorModel& detector,
                            RandomStream& rng);

ForwardTrialRecord run_forward_trial(double theta, const DetectorModel& detector, RandomStream& rng);
ForwardTrialRecord run_forward_trial(const PrepChoice& prep_a, const PrepChoice& prep_b, double theta,
                                     const DetectorModel& detector, RandomStream& rng);

// ---- reversed protocol ----

struct ReversedTrialRecord {
    BellOutcome state;
    int setting_a;
    int setting_b;
    DetectionEvent outcome_a;  // port 0 <-> outcome +1
    DetectionEvent outcome_b;

    bool both_registered() const { return outcome_a.registered && outcome_b.registered; }
    int value_a() const { return outcome_a.port == 0 ? 1 : -1; }
    int value_b() const { return outcome_b.port == 0 ? 1 : -1; }
};

// Charlie's state is uniform over the four Bell states unless forced.
ReversedTrialRecord run_reversed_trial(std::optional<BellOutcome> forced_state, double theta,
                                       const DetectorModel& detector, RandomStream& rng);

// ---- modified protocol ----

// Events in order PD1_A, PD1_B (rectilinear), PD2_A, PD2_B (diagonal).
using ModifiedEvents = std::array<DetectionEvent, 4>;

struct ModifiedTrialRecord {
    PrepChoice prep_a;
    PrepChoice prep_b;
    ModifiedEvents events;
    bool accepted;
};

// All four registered and both the rectilinear and the diagonal ports anti-correlated.
bool accept(const ModifiedEvents& events);
bool accept(const ModifiedTrialRecord& record);

// Measures two copies of each given state; used with arbitrary (non-setting) states by the audit.
ModifiedEvents measure_modified(const QubitState& state_a, const QubitState& state_b,
                                const DetectorModel& detector, RandomStream& rng);

ModifiedTrialRecord run_modified_trial(double theta, const DetectorModel& detector, RandomStream& rng);
ModifiedTrialRecord run_modified_trial(const PrepChoice& prep_a, const PrepChoice& prep_b, double theta,
                                       const DetectorModel& detector, RandomStream& rng);

// Correlators of bit_a * bit_b over accepted records. Throws InsufficientData for an empty pair.
CHSHEstimate chsh_from_accepted(std::span<const ModifiedTrialRecord> records);

// ---- closed-form probabilities ----

// Rectilinear anti-correlation: ga^2 db^2 + da^2 gb^2.
double anti_corr_prob_rect(const QubitState& a, const QubitState& b);
// Diagonal anti-correlation: ((ga gb - da db)^2 + (ga db - da gb)^2) / 2.
double anti_corr_prob_diag(const QubitState& a, const QubitState& b);
// The printed closed form (ga^2 db^2 - da^2 gb^2)^2 / 4, kept verbatim for comparison.
double paper_success_probability(const QubitState& a, const QubitState& b);
// Acceptance probability at eta = 1: rectilinear and diagonal factors are independent.
double success_probability_oracle(const QubitState& a, const QubitState& b);

// ---- exact enumeration oracles ----

struct CorrelatorTable {
    std::array<std::array<double, 2>, 2> correlators{};
    double s = 0.0;

    double correlator(int i, int j) const { return correlators[i - 1][j - 1]; }
};

struct ModifiedOracle {
    CorrelatorTable table;
    double mean_accept_prob = 0.0;
};

// Enumerates the 16 equiprobable (basis, bit) combinations of both sides at eta = 1 and returns
// the acceptance-weighted correlators.
ModifiedOracle exact_modified_correlators(double theta);

struct ForwardOracle {
    CorrelatorTable psi_minus;       // conditioned on Charlie reporting Psi-
    double psi_minus_prob = 0.0;     // mean over preparations
    double inconclusive_prob = 0.0;  // mean over preparations, eta = 1
};

ForwardOracle exact_forward_correlators(double theta);

// ---- batches ----
// Trial k of a batch draws from trial_stream(seed, tag, k); results do not depend on `workers`.

struct ForwardBatch {
    std::int64_t trials = 0;
    std::int64_t psi_plus = 0;
    std::int64_t psi_minus = 0;
    std::int64_t inconclusive = 0;
    CorrelationTally psi_minus_tally;  // bit products given Psi-

    void merge(const ForwardBatch& o);
};

struct ReversedBatch {
    std::int64_t trials = 0;
    std::int64_t both_registered = 0;
    std::array<CorrelationTally, 4> by_state;  // indexed by BellOutcome (PhiPlus..PsiMinus)
    CorrelationTally unconditioned;            // ignoring Charlie's label

    void merge(const ReversedBatch& o);
};

struct ModifiedBatch {
    std::int64_t trials = 0;
    std::int64_t accepted = 0;
    CorrelationTally tally;

    void merge(const ModifiedBatch& o);
};

ForwardBatch run_forward_batch(double theta, const DetectorModel& detector, std::uint64_t trials,
                               std::uint64_t seed, unsigned workers = 0);
ReversedBatch run_reversed_batch(std::optional<BellOutcome> forced_state, double theta,
                                 const DetectorModel& detector, std::uint64_t trials, std::uint64_t seed,
                                 unsigned workers = 0);
ModifiedBatch run_modified_batch(double theta, const DetectorModel& detector, std::uint64_t trials,
                                 std::uint64_t seed, unsigned workers = 0);

// Number of accepted runs for fixed states; `stream` separates independent audits under one seed.
std::int64_t count_accepted(const QubitState& state_a, const QubitState& state_b, const DetectorModel& detector,
                            std::uint64_t trials, std::uint64_t seed, std::uint64_t stream, unsigned workers = 0);

}  // namespace trbell
