#include "trbell/quantum_core.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "trbell/error.hpp"

namespace trbell {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

Matrix4 kron(const Matrix2& a, const Matrix2& b) {
    Matrix4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

}  // namespace

QubitState QubitState::from_amplitudes(Complex a0, Complex a1) {
    if (!finite(a0) || !finite(a1)) throw InvalidArgument("qubit amplitudes must be finite");
    const double norm = std::norm(a0) + std::norm(a1);
    if (std::abs(norm - 1.0) > kExactTol)
        throw InvalidArgument("qubit state not normalized: |a0|^2 + |a1|^2 = " + std::to_string(norm));
    return QubitState(a0, a1);
}

QubitState QubitState::plus() { return QubitState(kInvSqrt2, kInvSqrt2); }
QubitState QubitState::minus() { return QubitState(kInvSqrt2, -kInvSqrt2); }

TwoQubitState TwoQubitState::from_amplitudes(const std::array<Complex, 4>& amps) {
    double norm = 0.0;
    for (const auto& a : amps) {
        if (!finite(a)) throw InvalidArgument("two-qubit amplitudes must be finite");
        norm += std::norm(a);
    }
    if (std::abs(norm - 1.0) > kExactTol)
        throw InvalidArgument("two-qubit state not normalized: sum |a|^2 = " + std::to_string(norm));
    return TwoQubitState(amps);
}

Eigen::Vector4cd TwoQubitState::vector() const { return {amps_[0], amps_[1], amps_[2], amps_[3]}; }

DensityMatrix4 TwoQubitState::density() const {
    const Eigen::Vector4cd v = vector();
    return DensityMatrix4(v * v.adjoint());
}

DensityMatrix4 DensityMatrix4::from_matrix(const Matrix4& m) {
    if (!m.allFinite()) throw InvalidArgument("density matrix entries must be finite");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kExactTol) throw InvalidArgument("density matrix not Hermitian");
    const Complex tr = m.trace();
    if (std::abs(tr.real() - 1.0) > kExactTol || std::abs(tr.imag()) > kExactTol)
        throw InvalidArgument("density matrix trace != 1");
    Eigen::SelfAdjointEigenSolver<Matrix4> solver(m, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -kPsdTol) throw InvalidArgument("density matrix not positive semidefinite");
    return DensityMatrix4(m);
}

Observable::Observable(double angle) {
    if (!std::isfinite(angle)) throw InvalidArgument("observable angle must be finite");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double a = std::fmod(angle, two_pi);
    if (a < 0.0) a += two_pi;
    if (a >= two_pi) a = 0.0;
    angle_ = a;
}

Matrix2 Observable::matrix() const {
    const double c = std::cos(angle_);
    const double s = std::sin(angle_);
    Matrix2 m;
    m << c, s, s, -c;
    return m;
}

std::string_view to_string(BellOutcome outcome) {
    switch (outcome) {
        case BellOutcome::PhiPlus: return "phi+";
        case BellOutcome::PhiMinus: return "phi-";
        case BellOutcome::PsiPlus: return "psi+";
        case BellOutcome::PsiMinus: return "psi-";
        case BellOutcome::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

BellOutcome bell_outcome_from_string(std::string_view name) {
    if (name == "phi+" || name == "PhiPlus") return BellOutcome::PhiPlus;
    if (name == "phi-" || name == "PhiMinus") return BellOutcome::PhiMinus;
    if (name == "psi+" || name == "PsiPlus") return BellOutcome::PsiPlus;
    if (name == "psi-" || name == "PsiMinus") return BellOutcome::PsiMinus;
    throw InvalidArgument("unknown Bell state '" + std::string(name) + "'");
}

TwoQubitState bell_state(BellOutcome kind) {
    const double r = kInvSqrt2;
    switch (kind) {
        case BellOutcome::PhiPlus: return TwoQubitState::from_amplitudes({r, 0.0, 0.0, r});
        case BellOutcome::PhiMinus: return TwoQubitState::from_amplitudes({r, 0.0, 0.0, -r});
        case BellOutcome::PsiPlus: return TwoQubitState::from_amplitudes({0.0, r, r, 0.0});
        case BellOutcome::PsiMinus: return TwoQubitState::from_amplitudes({0.0, r, -r, 0.0});
        case BellOutcome::Inconclusive: break;
    }
    throw InvalidArgument("bell_state: Inconclusive is not a Bell state");
}

TwoQubitState tensor(const QubitState& a, const QubitState& b) {
    return TwoQubitState::from_amplitudes({a.a0() * b.a0(), a.a0() * b.a1(), a.a1() * b.a0(), a.a1() * b.a1()});
}

QubitState observable_eigenstate(const Observable& obs, int eigenvalue) {
    const double half = 0.5 * obs.angle();
    if (eigenvalue == 1) return QubitState::from_amplitudes(std::cos(half), std::sin(half));
    if (eigenvalue == -1) return QubitState::from_amplitudes(-std::sin(half), std::cos(half));
    throw InvalidArgument("eigenvalue must be +1 or -1");
}

double expectation_pair(const TwoQubitState& state, const Observable& oa, const Observable& ob) {
    const Eigen::Vector4cd v = state.vector();
    return (v.adjoint() * kron(oa.matrix(), ob.matrix()) * v)(0, 0).real();
}

double expectation_pair(const DensityMatrix4& state, const Observable& oa, const Observable& ob) {
    return (state.matrix() * kron(oa.matrix(), ob.matrix())).trace().real();
}

ChshSettings ChshSettings::rotated(double theta) {
    using std::numbers::pi;
    return {Observable(theta), Observable(theta + pi / 2), Observable(theta + pi / 4), Observable(theta - pi / 4)};
}

namespace {

template <typename State>
double chsh_of(const State& state, const ChshSettings& s) {
    return expectation_pair(state, s.a1, s.b1) + expectation_pair(state, s.a1, s.b2) +
           expectation_pair(state, s.a2, s.b1) - expectation_pair(state, s.a2, s.b2);
}

}  // namespace

double chsh_value(const TwoQubitState& state, const ChshSettings& settings) { return chsh_of(state, settings); }
double chsh_value(const DensityMatrix4& state, const ChshSettings& settings) { return chsh_of(state, settings); }

Complex BellAmplitudes::operator[](BellOutcome outcome) const {
    switch (outcome) {
        case BellOutcome::PhiPlus: return phi_plus;
        case BellOutcome::PhiMinus: return phi_minus;
        case BellOutcome::PsiPlus: return psi_plus;
        case BellOutcome::PsiMinus: return psi_minus;
        case BellOutcome::Inconclusive: break;
    }
    throw InvalidArgument("Inconclusive has no amplitude");
}

BellAmplitudes bs_transform(const TwoQubitState& state) {
    const Complex i(0.0, 1.0);
    const Complex a00 = state[0], a01 = state[1], a10 = state[2], a11 = state[3];
    return {
        (a00 + a11) * kInvSqrt2,
        (a00 - a11) * kInvSqrt2,
        i * (a10 + a01) * kInvSqrt2,
        (a10 - a01) * kInvSqrt2,
    };
}

BellOutcome partial_bsm(const TwoQubitState& state, RandomStream& rng) {
    const BellAmplitudes amps = bs_transform(state);
    const double p_plus = amps.probability(BellOutcome::PsiPlus);
    const double p_minus = amps.probability(BellOutcome::PsiMinus);
    const double u = rng.uniform();
    if (u < p_plus) return BellOutcome::PsiPlus;
    if (u < p_plus + p_minus) return BellOutcome::PsiMinus;
    return BellOutcome::Inconclusive;
}

double pbs_port0_probability(const QubitState& state, MeasBasis basis) {
    if (basis == MeasBasis::Rectilinear) return std::norm(state.a0());
    return 0.5 * std::norm(state.a0() + state.a1());
}

PbsResult pbs_measure(const QubitState& state, MeasBasis basis, RandomStream& rng) {
    const double p0 = pbs_port0_probability(state, basis);
    if (rng.uniform() < p0) return {0, p0};
    return {1, 1.0 - p0};
}

}  // namespace trbell
