#include "trbell/protocols.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "trbell/error.hpp"

using namespace trbell;
using std::numbers::pi;
using std::numbers::sqrt2;

namespace {

constexpr double kSigma = 3.0;

oracle::V2 as_vector(const QubitState& s) { return {s.a0(), s.a1()}; }

QubitState random_real_state(std::mt19937_64& gen) {
    const double t = std::uniform_real_distribution<double>(0.0, 2.0 * pi)(gen);
    return QubitState::from_amplitudes(std::cos(t), std::sin(t));
}

void expect_state(const QubitState& s, double a0, double a1) {
    EXPECT_NEAR(s.a0().real(), a0, kExactTol);
    EXPECT_NEAR(s.a1().real(), a1, kExactTol);
    EXPECT_NEAR(s.a0().imag(), 0.0, kExactTol);
    EXPECT_NEAR(s.a1().imag(), 0.0, kExactTol);
}

ModifiedEvents events(std::array<int, 4> ports, std::array<bool, 4> registered = {true, true, true, true}) {
    ModifiedEvents e;
    for (std::size_t k = 0; k < 4; ++k) e[k] = {registered[k], ports[k]};
    return e;
}

}  // namespace

TEST(Preparation, SettingAngles) {
    EXPECT_DOUBLE_EQ(setting_angle(Side::Alice, 1, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(setting_angle(Side::Alice, 2, 0.0), pi / 2);
    EXPECT_DOUBLE_EQ(setting_angle(Side::Bob, 1, 0.0), pi / 4);
    EXPECT_DOUBLE_EQ(setting_angle(Side::Bob, 2, 0.0), -pi / 4);
    EXPECT_DOUBLE_EQ(setting_angle(Side::Alice, 1, 0.3), 0.3);
    EXPECT_THROW(setting_angle(Side::Alice, 3, 0.0), InvalidArgument);
}

TEST(Preparation, Examples) {
    expect_state(prepare_state({Side::Alice, 1, 1}, 0.0), 1.0, 0.0);
    expect_state(prepare_state({Side::Alice, 1, -1}, 0.0), 0.0, 1.0);
    expect_state(prepare_state({Side::Alice, 2, 1}, 0.0), 1.0 / sqrt2, 1.0 / sqrt2);
    expect_state(prepare_state({Side::Bob, 1, 1}, 0.0), std::cos(pi / 8), std::sin(pi / 8));
    expect_state(prepare_state({Side::Bob, 1, -1}, 0.0), -std::sin(pi / 8), std::cos(pi / 8));
    EXPECT_THROW(prepare_state({Side::Bob, 1, 0}, 0.0), InvalidArgument);
}

TEST(Preparation, EigenstatesMatchDiagonalization) {
    for (double theta : {0.0, pi / 16, pi / 8, 0.7}) {
        for (Side side : {Side::Alice, Side::Bob}) {
            for (int basis : {1, 2}) {
                for (int bit : {1, -1}) {
                    const QubitState s = prepare_state({side, basis, bit}, theta);
                    const oracle::V2 ref =
                        oracle::diagonalized_eigenvector(oracle::angle(side == Side::Alice, basis, theta), bit);
                    EXPECT_NEAR(std::abs(ref.dot(as_vector(s))), 1.0, kExactTol);
                }
            }
        }
    }
}

TEST(Preparation, SamplingIsUniform) {
    RandomStream rng(7);
    std::array<int, 4> counts{};
    const int n = 400000;
    for (int k = 0; k < n; ++k) {
        const PrepChoice c = PrepChoice::sample(Side::Alice, rng);
        ++counts[2 * (c.basis_index - 1) + (c.bit == 1 ? 1 : 0)];
    }
    for (int c : counts) EXPECT_LT(oracle::sigmas(c / double(n), 0.25, std::sqrt(0.25 * 0.75 / n)), 4.0);
}

TEST(Detector, RejectsOutOfRange) {
    EXPECT_THROW(DetectorModel(-0.1), InvalidArgument);
    EXPECT_THROW(DetectorModel(1.1), InvalidArgument);
    EXPECT_THROW(DetectorModel(std::nan("")), InvalidArgument);
    EXPECT_NO_THROW(DetectorModel(0.0));
    EXPECT_NO_THROW(DetectorModel(1.0));
}

TEST(Forward, ZeroOneSplitsBetweenPsiStates) {
    RandomStream rng(11);
    const DetectorModel ideal(1.0);
    int plus = 0, minus = 0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const BellOutcome out = measure_forward(QubitState::zero(), QubitState::one(), ideal, rng);
        ASSERT_NE(out, BellOutcome::Inconclusive);
        (out == BellOutcome::PsiPlus ? plus : minus)++;
    }
    EXPECT_LT(oracle::sigmas(minus / double(n), 0.5, std::sqrt(0.25 / n)), 4.0);
}

TEST(Forward, EqualStatesAreNeverPsiMinus) {
    RandomStream rng(12);
    const DetectorModel ideal(1.0);
    for (int k = 0; k < 10000; ++k)
        ASSERT_NE(measure_forward(QubitState::plus(), QubitState::plus(), ideal, rng), BellOutcome::PsiMinus);
}

TEST(Forward, ZeroEfficiencyIsAlwaysInconclusive) {
    RandomStream rng(13);
    const DetectorModel blind(0.0);
    for (int k = 0; k < 10000; ++k)
        ASSERT_EQ(run_forward_trial(0.0, blind, rng).outcome, BellOutcome::Inconclusive);
}

TEST(Forward, ExactCorrelatorsMatchOracle) {
    for (int k = 0; k <= 32; ++k) {
        const double theta = k * pi / 32;
        const ForwardOracle lib = exact_forward_correlators(theta);
        const oracle::Correlators ref = oracle::forward_psi_minus(theta);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(lib.psi_minus.correlators[i][j], ref.e[i][j], kExactTol);
        EXPECT_NEAR(lib.psi_minus.s, -2.0 * sqrt2, kExactTol) << "theta=" << theta;
        EXPECT_NEAR(lib.psi_minus_prob, ref.mean_weight, kExactTol);
    }
}

TEST(Forward, SampledCorrelatorsMatchOracle) {
    const double theta = pi / 8;
    const ForwardBatch b = run_forward_batch(theta, DetectorModel(1.0), 1000000, 3);
    const CHSHEstimate est = b.psi_minus_tally.estimate();
    const oracle::Correlators ref = oracle::forward_psi_minus(theta);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            EXPECT_LT(oracle::sigmas(est.correlators[i][j], ref.e[i][j], est.stderrs[i][j]), kSigma);
    EXPECT_LT(oracle::sigmas(est.s, -2.0 * sqrt2, est.stderr_s), kSigma);

    const ForwardOracle lib = exact_forward_correlators(theta);
    const double n = static_cast<double>(b.trials);
    const double inc = b.inconclusive / n;
    EXPECT_LT(oracle::sigmas(inc, lib.inconclusive_prob, std::sqrt(inc * (1 - inc) / n)), kSigma);
    const double pm = b.psi_minus / n;
    EXPECT_LT(oracle::sigmas(pm, lib.psi_minus_prob, std::sqrt(pm * (1 - pm) / n)), kSigma);
}

TEST(Forward, InconclusiveFractionIsOneMinusMeanAntiCorrelation) {
    // The partial measurement is conclusive exactly when the rectilinear bits differ.
    const double theta = 0.0;
    double mean = 0.0;
    for (int ba : {1, 2})
        for (int xa : {1, -1})
            for (int bb : {1, 2})
                for (int xb : {1, -1})
                    mean += anti_corr_prob_rect(prepare_state({Side::Alice, ba, xa}, theta),
                                                prepare_state({Side::Bob, bb, xb}, theta)) / 16.0;
    EXPECT_NEAR(exact_forward_correlators(theta).inconclusive_prob, 1.0 - mean, kExactTol);
}

TEST(Reversed, ForcedStatesReachTsirelson) {
    const DetectorModel ideal(1.0);
    const ReversedBatch phi = run_reversed_batch(BellOutcome::PhiPlus, 0.0, ideal, 1000000, 5);
    const CHSHEstimate ep = phi.by_state[static_cast<int>(BellOutcome::PhiPlus)].estimate();
    EXPECT_LT(oracle::sigmas(ep.s, 2.0 * sqrt2, ep.stderr_s), kSigma);

    const ReversedBatch psi = run_reversed_batch(BellOutcome::PsiMinus, 0.0, ideal, 1000000, 5);
    const CHSHEstimate em = psi.by_state[static_cast<int>(BellOutcome::PsiMinus)].estimate();
    EXPECT_LT(oracle::sigmas(em.s, -2.0 * sqrt2, em.stderr_s), kSigma);
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 2; ++j) {
            const double ref = oracle::expectation(oracle::singlet() * oracle::singlet().adjoint(),
                                                   oracle::angle(true, i, 0.0), oracle::angle(false, j, 0.0));
            EXPECT_LT(oracle::sigmas(em.correlator(i, j), ref, em.stderrs[i - 1][j - 1]), kSigma);
        }
}

TEST(Reversed, UniformMixtureHasNoCorrelation) {
    const ReversedBatch b = run_reversed_batch(std::nullopt, 0.0, DetectorModel(1.0), 1000000, 6);
    const CHSHEstimate e = b.unconditioned.estimate();
    EXPECT_LT(oracle::sigmas(e.s, 0.0, e.stderr_s), kSigma);
    for (int k = 0; k < 4; ++k) EXPECT_GT(b.by_state[k].total(), 240000);
}

TEST(Reversed, LossyDetectorsDropEvents) {
    const ReversedBatch b = run_reversed_batch(BellOutcome::PhiPlus, 0.0, DetectorModel(0.5), 400000, 7);
    const double f = b.both_registered / double(b.trials);
    EXPECT_LT(oracle::sigmas(f, 0.25, std::sqrt(0.25 * 0.75 / b.trials)), 4.0);
    EXPECT_THROW(run_reversed_batch(BellOutcome::Inconclusive, 0.0, DetectorModel(1.0), 10, 7), InvalidArgument);
}

TEST(Modified, IdealDetectorsRegisterEverything) {
    RandomStream rng(21);
    const DetectorModel ideal(1.0);
    for (int k = 0; k < 10000; ++k) {
        const ModifiedTrialRecord r = run_modified_trial(0.0, ideal, rng);
        for (const auto& e : r.events) ASSERT_TRUE(e.registered);
    }
}

TEST(Modified, ZeroOneRectilinearPortsAreFixed) {
    RandomStream rng(22);
    const DetectorModel ideal(1.0);
    int diag_anti = 0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const ModifiedEvents e = measure_modified(QubitState::zero(), QubitState::one(), ideal, rng);
        ASSERT_EQ(e[0].port, 0);
        ASSERT_EQ(e[1].port, 1);
        if (e[2].port != e[3].port) ++diag_anti;
    }
    EXPECT_LT(oracle::sigmas(diag_anti / double(n), 0.5, std::sqrt(0.25 / n)), 4.0);
}

TEST(Modified, AcceptRule) {
    EXPECT_TRUE(accept(events({0, 1, 0, 1})));
    EXPECT_TRUE(accept(events({1, 0, 0, 1})));
    EXPECT_TRUE(accept(events({1, 0, 1, 0})));
    EXPECT_FALSE(accept(events({0, 0, 0, 1})));
    EXPECT_FALSE(accept(events({0, 1, 1, 1})));
    EXPECT_FALSE(accept(events({1, 1, 0, 0})));
    EXPECT_FALSE(accept(events({0, 1, 0, 1}, {true, true, true, false})));
    EXPECT_FALSE(accept(events({0, 1, 0, 1}, {false, true, true, true})));
}

TEST(Modified, ChshFromAcceptedRecords) {
    std::vector<ModifiedTrialRecord> records;
    const ModifiedEvents ok = events({0, 1, 0, 1});
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 2; ++j)
            for (int bit : {1, -1}) records.push_back({{Side::Alice, i, bit}, {Side::Bob, j, bit}, ok, true});
    // A rejected record must not contribute.
    records.push_back({{Side::Alice, 2, 1}, {Side::Bob, 2, -1}, events({0, 0, 0, 0}), false});
    const CHSHEstimate e = chsh_from_accepted(records);
    EXPECT_DOUBLE_EQ(e.s, 2.0);
    EXPECT_EQ(e.count(2, 2), 2);
    EXPECT_DOUBLE_EQ(e.stderr_s, 0.0);
}

TEST(Modified, EmptySettingPairIsInsufficientData) {
    std::vector<ModifiedTrialRecord> records;
    const ModifiedEvents ok = events({0, 1, 0, 1});
    records.push_back({{Side::Alice, 1, 1}, {Side::Bob, 1, 1}, ok, true});
    records.push_back({{Side::Alice, 2, 1}, {Side::Bob, 1, 1}, ok, true});
    records.push_back({{Side::Alice, 2, 1}, {Side::Bob, 2, 1}, ok, true});
    try {
        chsh_from_accepted(records);
        FAIL() << "expected InsufficientData";
    } catch (const InsufficientData& e) {
        EXPECT_EQ(e.setting_a(), 1);
        EXPECT_EQ(e.setting_b(), 2);
        EXPECT_NE(std::string(e.what()).find("(A1, B2)"), std::string::npos);
    }
    EXPECT_THROW(chsh_from_accepted({}), InsufficientData);
}

TEST(SuccessProbability, ClosedFormExamples) {
    const QubitState z = QubitState::zero(), o = QubitState::one();
    const QubitState p = QubitState::plus(), m = QubitState::minus();
    EXPECT_NEAR(anti_corr_prob_rect(z, o), 1.0, kExactTol);
    EXPECT_NEAR(anti_corr_prob_diag(z, o), 0.5, kExactTol);
    EXPECT_NEAR(success_probability_oracle(z, o), 0.5, kExactTol);
    EXPECT_NEAR(paper_success_probability(z, o), 0.25, kExactTol);
    EXPECT_NEAR(success_probability_oracle(p, m), 0.5, kExactTol);
    EXPECT_NEAR(success_probability_oracle(z, z), 0.0, kExactTol);
    EXPECT_NEAR(success_probability_oracle(p, p), 0.0, kExactTol);
}

TEST(SuccessProbability, OracleMatchesPortEnumeration) {
    std::mt19937_64 gen(31);
    for (int k = 0; k < 1000; ++k) {
        const QubitState a = random_real_state(gen), b = random_real_state(gen);
        EXPECT_NEAR(success_probability_oracle(a, b), oracle::modified_acceptance(as_vector(a), as_vector(b)),
                    kExactTol);
    }
}

TEST(SuccessProbability, SampledAcceptanceMatchesOracle) {
    std::mt19937_64 gen(32);
    const DetectorModel ideal(1.0);
    const std::uint64_t n = 1000000;
    for (int k = 0; k < 20; ++k) {
        const QubitState a = random_real_state(gen), b = random_real_state(gen);
        const double p = success_probability_oracle(a, b);
        const double f = count_accepted(a, b, ideal, n, 33, k) / double(n);
        const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
        EXPECT_LT(oracle::sigmas(f, p, se), 4.0) << "pair " << k << " p=" << p;
    }
}

TEST(ModifiedOracle, MatchesIndependentEnumeration) {
    for (int k = 0; k <= 32; ++k) {
        const double theta = k * pi / 32;
        const ModifiedOracle lib = exact_modified_correlators(theta);
        const oracle::Correlators ref = oracle::modified(theta);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(lib.table.correlators[i][j], ref.e[i][j], kExactTol);
        EXPECT_NEAR(lib.table.s, ref.s, kExactTol);
        EXPECT_NEAR(lib.mean_accept_prob, ref.mean_weight, kExactTol);
    }
}

TEST(ModifiedOracle, FrozenValues) {
    const ModifiedOracle at0 = exact_modified_correlators(0.0);
    EXPECT_NEAR(at0.table.s, -2.0 * sqrt2, kExactTol);
    EXPECT_NEAR(at0.table.correlator(1, 1), -1.0 / sqrt2, kExactTol);
    EXPECT_NEAR(at0.mean_accept_prob, 0.25, kExactTol);
    EXPECT_NEAR(exact_modified_correlators(pi / 16).table.s, -2.850698204468602, 1e-12);
    EXPECT_NEAR(exact_modified_correlators(pi / 8).table.s, -2.873322793392955, 1e-12);
    EXPECT_NEAR(exact_modified_correlators(pi / 4).table.s, -2.0 * sqrt2, kExactTol);
    EXPECT_NEAR(exact_modified_correlators(pi / 2).table.s, -2.0 * sqrt2, kExactTol);
}

class ModifiedSampling : public ::testing::TestWithParam<double> {};

TEST_P(ModifiedSampling, ConditionalCorrelatorsMatchOracle) {
    const double theta = GetParam();
    const ModifiedBatch b = run_modified_batch(theta, DetectorModel(1.0), 1000000, 41);
    const CHSHEstimate est = b.tally.estimate();
    const ModifiedOracle ref = exact_modified_correlators(theta);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            EXPECT_LT(oracle::sigmas(est.correlators[i][j], ref.table.correlators[i][j], est.stderrs[i][j]), kSigma);
    EXPECT_LT(oracle::sigmas(est.s, ref.table.s, est.stderr_s), kSigma);
    const double f = b.accepted / double(b.trials);
    EXPECT_LT(oracle::sigmas(f, ref.mean_accept_prob, std::sqrt(f * (1 - f) / b.trials)), kSigma);
}

INSTANTIATE_TEST_SUITE_P(Thetas, ModifiedSampling, ::testing::Values(0.0, pi / 16, pi / 8, pi / 4));

TEST(Modified, CorrelatorsDoNotDependOnEfficiency) {
    const CHSHEstimate ideal = run_modified_batch(0.0, DetectorModel(1.0), 1000000, 51).tally.estimate();
    const ModifiedBatch lossy_b = run_modified_batch(0.0, DetectorModel(0.5), 4000000, 52);
    const CHSHEstimate lossy = lossy_b.tally.estimate();
    const double se = std::hypot(ideal.stderr_s, lossy.stderr_s);
    EXPECT_LT(oracle::sigmas(ideal.s, lossy.s, se), kSigma);
    const double f = lossy_b.accepted / double(lossy_b.trials);
    const double expected = 0.25 * std::pow(0.5, 4);
    EXPECT_LT(oracle::sigmas(f, expected, std::sqrt(expected * (1 - expected) / lossy_b.trials)), kSigma);
}

TEST(Batches, IndependentOfWorkerCount) {
    const DetectorModel det(0.9);
    const ModifiedBatch m1 = run_modified_batch(0.1, det, 300000, 61, 1);
    const ModifiedBatch m4 = run_modified_batch(0.1, det, 300000, 61, 4);
    EXPECT_EQ(m1.accepted, m4.accepted);
    EXPECT_EQ(m1.tally, m4.tally);

    const ForwardBatch f1 = run_forward_batch(0.1, det, 300000, 61, 1);
    const ForwardBatch f3 = run_forward_batch(0.1, det, 300000, 61, 3);
    EXPECT_EQ(f1.psi_minus, f3.psi_minus);
    EXPECT_EQ(f1.psi_minus_tally, f3.psi_minus_tally);

    const ReversedBatch r1 = run_reversed_batch(std::nullopt, 0.1, det, 300000, 61, 1);
    const ReversedBatch r2 = run_reversed_batch(std::nullopt, 0.1, det, 300000, 61, 2);
    EXPECT_EQ(r1.unconditioned, r2.unconditioned);

    EXPECT_EQ(count_accepted(QubitState::zero(), QubitState::one(), det, 200000, 9, 2, 1),
              count_accepted(QubitState::zero(), QubitState::one(), det, 200000, 9, 2, 4));
}

TEST(Batches, SeedsChangeResults) {
    const DetectorModel det(1.0);
    EXPECT_NE(run_modified_batch(0.0, det, 100000, 1).tally, run_modified_batch(0.0, det, 100000, 2).tally);
}
