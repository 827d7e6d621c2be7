#pragma once

// Test-only reference computations. Everything here is built from explicit Pauli matrices and
// projectors with Eigen, independently of the library's closed forms.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace trbell::oracle {

using C = std::complex<double>;
using M2 = Eigen::Matrix2cd;
using M4 = Eigen::Matrix4cd;
using V2 = Eigen::Vector2cd;
using V4 = Eigen::Vector4cd;

inline M2 sigma_x() {
    M2 m;
    m << 0, 1, 1, 0;
    return m;
}

inline M2 sigma_z() {
    M2 m;
    m << 1, 0, 0, -1;
    return m;
}

inline M2 observable(double phi) { return std::sin(phi) * sigma_x() + std::cos(phi) * sigma_z(); }

inline M4 kron(const M2& a, const M2& b) {
    M4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
    return out;
}

inline V4 kron(const V2& a, const V2& b) { return V4(a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1)); }

// Eigenvector of observable(phi) for `eigenvalue`, from a numerical diagonalization, with the
// sign fixed so that the first nonzero real component is positive.
inline V2 diagonalized_eigenvector(double phi, int eigenvalue) {
    Eigen::SelfAdjointEigenSolver<M2> solver(observable(phi));
    const int idx = eigenvalue > 0 ? 1 : 0;  // eigenvalues sorted ascending: -1, +1
    V2 v = solver.eigenvectors().col(idx);
    // remove global phase
    const int ref = std::abs(v(0)) > 1e-9 ? 0 : 1;
    v *= std::abs(v(ref)) / v(ref);
    return v;
}

// Setting angle under rotation theta: Alice theta, theta + pi/2; Bob theta + pi/4, theta - pi/4.
inline double angle(bool alice, int index, double theta) {
    using std::numbers::pi;
    if (alice) return index == 1 ? theta : theta + pi / 2;
    return index == 1 ? theta + pi / 4 : theta - pi / 4;
}

// Probability that a PBS in the rectilinear (diagonal) basis sends `v` to port 0.
inline double port0(const V2& v, bool diagonal) {
    V2 e = diagonal ? V2(1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2) : V2(1.0, 0.0);
    return std::norm(e.dot(v));
}

// Acceptance probability of the modified protocol at eta = 1 by enumerating all 16 port patterns.
inline double modified_acceptance(const V2& a, const V2& b) {
    double total = 0.0;
    for (int ra = 0; ra < 2; ++ra)
        for (int rb = 0; rb < 2; ++rb)
            for (int da = 0; da < 2; ++da)
                for (int db = 0; db < 2; ++db) {
                    if (ra == rb || da == db) continue;
                    auto p = [](double p0, int port) { return port == 0 ? p0 : 1.0 - p0; };
                    total += p(port0(a, false), ra) * p(port0(b, false), rb) * p(port0(a, true), da) *
                             p(port0(b, true), db);
                }
    return total;
}

struct Correlators {
    std::array<std::array<double, 2>, 2> e{};
    double s = 0.0;
    double mean_weight = 0.0;
};

// Weighted conditional correlators over the 16 (basis, bit) preparation combinations.
template <typename Weight>
Correlators enumerate(double theta, Weight weight) {
    Correlators out;
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 2; ++j) {
            double num = 0.0, den = 0.0;
            for (int x : {1, -1})
                for (int y : {1, -1}) {
                    const double w = weight(diagonalized_eigenvector(angle(true, i, theta), x),
                                            diagonalized_eigenvector(angle(false, j, theta), y));
                    num += x * y * w;
                    den += w;
                }
            out.e[i - 1][j - 1] = num / den;
            out.mean_weight += den / 16.0;
        }
    out.s = out.e[0][0] + out.e[0][1] + out.e[1][0] - out.e[1][1];
    return out;
}

inline Correlators modified(double theta) { return enumerate(theta, modified_acceptance); }

inline V4 singlet() { return V4(0.0, 1.0 / std::numbers::sqrt2, -1.0 / std::numbers::sqrt2, 0.0); }

// Psi- post-selection of the forward protocol: weight |<Psi-|a b>|^2.
inline Correlators forward_psi_minus(double theta) {
    return enumerate(theta, [](const V2& a, const V2& b) { return std::norm(singlet().dot(kron(a, b))); });
}

inline double expectation(const M4& rho, double phi_a, double phi_b) {
    return (rho * kron(observable(phi_a), observable(phi_b))).trace().real();
}

// Number of standard errors separating an estimate from a reference value.
inline double sigmas(double estimate, double reference, double stderr) { return std::abs(estimate - reference) / stderr; }

}  // namespace trbell::oracle
