#pragma once

// Exact two-qubit state algebra.
//
// Basis order for two-qubit objects is |00>, |01>, |10>, |11> with Alice's qubit first.
// Observables live in the x-z plane of the Bloch sphere: O(phi) = sin(phi) sx + cos(phi) sz.

#include <array>
#include <complex>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>

#include "trbell/random.hpp"

namespace trbell {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

inline constexpr double kExactTol = 1e-12;
inline constexpr double kChainTol = 1e-9;
inline constexpr double kPsdTol = 1e-10;

class QubitState {
public:
    // Throws InvalidArgument unless finite and normalized within kExactTol.
    static QubitState from_amplitudes(Complex a0, Complex a1);

    static QubitState zero() { return QubitState(1.0, 0.0); }
    static QubitState one() { return QubitState(0.0, 1.0); }
    static QubitState plus();
    static QubitState minus();

    Complex a0() const noexcept { return a0_; }
    Complex a1() const noexcept { return a1_; }

private:
    QubitState(Complex a0, Complex a1) : a0_(a0), a1_(a1) {}
    Complex a0_;
    Complex a1_;
};

class DensityMatrix4;

class TwoQubitState {
public:
    static TwoQubitState from_amplitudes(const std::array<Complex, 4>& amps);

    const std::array<Complex, 4>& amplitudes() const noexcept { return amps_; }
    Complex operator[](std::size_t i) const { return amps_[i]; }

    DensityMatrix4 density() const;
    Eigen::Vector4cd vector() const;

private:
    explicit TwoQubitState(const std::array<Complex, 4>& amps) : amps_(amps) {}
    std::array<Complex, 4> amps_;
};

class DensityMatrix4 {
public:
    // Throws InvalidArgument unless Hermitian, unit trace and PSD (eigenvalues >= -kPsdTol).
    static DensityMatrix4 from_matrix(const Matrix4& m);

    const Matrix4& matrix() const noexcept { return m_; }

private:
    friend class TwoQubitState;
    explicit DensityMatrix4(const Matrix4& m) : m_(m) {}
    Matrix4 m_;
};

class Observable {
public:
    explicit Observable(double angle);

    // Normalized to [0, 2pi).
    double angle() const noexcept { return angle_; }
    Matrix2 matrix() const;

private:
    double angle_;
};

enum class BellOutcome : std::uint8_t { PhiPlus, PhiMinus, PsiPlus, PsiMinus, Inconclusive };
enum class MeasBasis : std::uint8_t { Rectilinear, Diagonal };

std::string_view to_string(BellOutcome outcome);
// Accepts "phi+", "phi-", "psi+", "psi-" (and the enum spellings); throws InvalidArgument otherwise.
BellOutcome bell_outcome_from_string(std::string_view name);

// Throws InvalidArgument for Inconclusive.
TwoQubitState bell_state(BellOutcome kind);

TwoQubitState tensor(const QubitState& a, const QubitState& b);

// Real eigenvector of O(phi); the +1 eigenstate is (cos(phi/2), sin(phi/2)) and the
// -1 eigenstate is (-sin(phi/2), cos(phi/2)).
QubitState observable_eigenstate(const Observable& obs, int eigenvalue);

// Tr(rho (O_a x O_b)).
double expectation_pair(const TwoQubitState& state, const Observable& oa, const Observable& ob);
double expectation_pair(const DensityMatrix4& state, const Observable& oa, const Observable& ob);

// Alice measures A1 or A2, Bob B1 or B2.
struct ChshSettings {
    Observable a1;
    Observable a2;
    Observable b1;
    Observable b2;

    // A at theta and theta + pi/2, B at theta + pi/4 and theta - pi/4.
    static ChshSettings rotated(double theta);

    const Observable& alice(int index) const { return index == 1 ? a1 : a2; }
    const Observable& bob(int index) const { return index == 1 ? b1 : b2; }
};

// E(A1,B1) + E(A1,B2) + E(A2,B1) - E(A2,B2).
double chsh_value(const TwoQubitState& state, const ChshSettings& settings);
double chsh_value(const DensityMatrix4& state, const ChshSettings& settings);

// Amplitudes after the beam splitter, projected on the Bell basis. The anti-correlated part maps
// as |01> -> (i Psi+ + Psi-)/sqrt2 and |10> -> (i Psi+ - Psi-)/sqrt2; the correlated part is
// decomposed on Phi+/Phi- as (a00 +- a11)/sqrt2.
struct BellAmplitudes {
    Complex phi_plus;
    Complex phi_minus;
    Complex psi_plus;
    Complex psi_minus;

    Complex operator[](BellOutcome outcome) const;
    double probability(BellOutcome outcome) const { return std::norm((*this)[outcome]); }
};

BellAmplitudes bs_transform(const TwoQubitState& state);

// Linear-optics partial Bell measurement: reports Psi+ or Psi- with their Born probabilities,
// Inconclusive otherwise.
BellOutcome partial_bsm(const TwoQubitState& state, RandomStream& rng);

struct PbsResult {
    int port;  // 0 = |0> or |+>, 1 = |1> or |->
    double probability;
};

PbsResult pbs_measure(const QubitState& state, MeasBasis basis, RandomStream& rng);
// Probability that pbs_measure reports port 0.
double pbs_port0_probability(const QubitState& state, MeasBasis basis);

}  // namespace trbell
