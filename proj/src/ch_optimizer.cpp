#include "trbell/ch_optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <numbers>
#include <sstream>
#include <vector>

#include "trbell/error.hpp"
#include "trbell/random.hpp"

namespace trbell {

void EberhardConfig::validate() const {
    for (double v : {state_angle, noise, a1, a2, b1, b2, efficiency})
        if (!std::isfinite(v)) throw InvalidArgument("CH configuration fields must be finite");
    if (!(noise >= 0.0 && noise <= 1.0)) throw InvalidArgument("noise p must lie in [0, 1]");
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw InvalidArgument("efficiency must lie in [0, 1]");
}

DensityMatrix4 eberhard_state(double state_angle, double noise) {
    if (!(noise >= 0.0 && noise <= 1.0)) throw InvalidArgument("noise p must lie in [0, 1]");
    Eigen::Vector4cd phi(std::cos(state_angle), 0.0, 0.0, std::sin(state_angle));
    const Matrix4 rho = (1.0 - noise) * (phi * phi.adjoint()) + noise * Matrix4::Identity() / 4.0;
    return DensityMatrix4::from_matrix(rho);
}

namespace {

Matrix2 plus_projector(double angle) {
    const QubitState e = observable_eigenstate(Observable(angle), 1);
    Eigen::Vector2cd v(e.a0(), e.a1());
    return v * v.adjoint();
}

Matrix4 kron(const Matrix2& a, const Matrix2& b) {
    Matrix4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

}  // namespace

CHResult ch_value(const EberhardConfig& config) {
    config.validate();
    const Matrix4 rho = eberhard_state(config.state_angle, config.noise).matrix();
    const double eta = config.efficiency;
    const std::array<Matrix2, 2> pa = {plus_projector(config.a1), plus_projector(config.a2)};
    const std::array<Matrix2, 2> pb = {plus_projector(config.b1), plus_projector(config.b2)};
    const Matrix2 id = Matrix2::Identity();

    CHResult r;
    r.p_a1 = eta * (rho * kron(pa[0], id)).trace().real();
    r.p_b1 = eta * (rho * kron(id, pb[0])).trace().real();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.coincidences[i][j] = eta * eta * (rho * kron(pa[i], pb[j])).trace().real();
    const auto& c = r.coincidences;
    r.s_ch = c[0][0] + c[1][0] + c[0][1] - c[1][1] - r.p_a1 - r.p_b1;
    return r;
}

namespace {

constexpr double kViolation = 1e-12;

// Closed form of ch_value for the real state cos(chi)|00> + sin(chi)|11> mixed with white noise.
// Parameters are (chi, a1, a2, b1, b2).
struct Objective {
    double eta;
    double noise;
    std::uint64_t* evaluations;

    double operator()(const std::array<double, 5>& x) const {
        ++*evaluations;
        const double cx = std::cos(x[0]), sx = std::sin(x[0]);
        std::array<double, 4> c{}, s{};
        for (int k = 0; k < 4; ++k) {
            c[k] = std::cos(0.5 * x[k + 1]);
            s[k] = std::sin(0.5 * x[k + 1]);
        }
        auto coin = [&](int a, int b) {
            const double amp = cx * c[a] * c[b] + sx * s[a] * s[b];
            return (1.0 - noise) * amp * amp + noise / 4.0;
        };
        auto single = [&](int k) { return (1.0 - noise) * (cx * cx * c[k] * c[k] + sx * sx * s[k] * s[k]) + noise / 2.0; };
        // indices: a1 = 0, a2 = 1, b1 = 2, b2 = 3
        const double coincidences = coin(0, 2) + coin(1, 2) + coin(0, 3) - coin(1, 3);
        return eta * eta * coincidences - eta * (single(0) + single(2));
    }
};

// Nelder-Mead maximization over the coordinates listed in `free`.
struct Simplex {
    std::array<double, 5> point;
    double value;
};

Simplex nelder_mead(const Objective& f, std::array<double, 5> start, const std::vector<int>& free, double step,
                    std::uint64_t max_evals) {
    const std::size_t n = free.size();
    std::vector<std::array<double, 5>> pts(n + 1, start);
    for (std::size_t k = 0; k < n; ++k) pts[k + 1][free[k]] += step;
    std::vector<double> val(n + 1);
    for (std::size_t k = 0; k <= n; ++k) val[k] = f(pts[k]);
    std::uint64_t used = n + 1;

    std::vector<std::size_t> order(n + 1);
    auto blend = [&](const std::array<double, 5>& centroid, const std::array<double, 5>& p, double t) {
        std::array<double, 5> out = centroid;
        for (int d : free) out[d] = centroid[d] + t * (p[d] - centroid[d]);
        return out;
    };

    while (used < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] > val[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

        double size = 0.0;
        for (std::size_t k = 0; k <= n; ++k)
            for (int d : free) size = std::max(size, std::abs(pts[k][d] - pts[best][d]));
        if (size < 1e-10 || val[best] - val[worst] < 1e-16) break;

        std::array<double, 5> centroid = start;
        for (int d : free) {
            double sum = 0.0;
            for (std::size_t k = 0; k <= n; ++k)
                if (k != worst) sum += pts[k][d];
            centroid[d] = sum / static_cast<double>(n);
        }

        const auto reflected = blend(centroid, pts[worst], -1.0);
        const double fr = f(reflected);
        ++used;
        if (fr > val[best]) {
            const auto expanded = blend(centroid, pts[worst], -2.0);
            const double fe = f(expanded);
            ++used;
            if (fe > fr) {
                pts[worst] = expanded;
                val[worst] = fe;
            } else {
                pts[worst] = reflected;
                val[worst] = fr;
            }
            continue;
        }
        if (fr > val[second]) {
            pts[worst] = reflected;
            val[worst] = fr;
            continue;
        }
        const bool outside = fr > val[worst];
        const auto contracted = blend(centroid, outside ? reflected : pts[worst], 0.5);
        const double fc = f(contracted);
        ++used;
        if (fc > std::max(fr, val[worst])) {
            pts[worst] = contracted;
            val[worst] = fc;
            continue;
        }
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == best) continue;
            for (int d : free) pts[k][d] = pts[best][d] + 0.5 * (pts[k][d] - pts[best][d]);
            val[k] = f(pts[k]);
            ++used;
        }
    }
    const std::size_t best = static_cast<std::size_t>(std::max_element(val.begin(), val.end()) - val.begin());
    return {pts[best], val[best]};
}

EberhardConfig to_config(const std::array<double, 5>& x, double noise, double eta) {
    return {x[0], noise, x[1], x[2], x[3], x[4], eta};
}

constexpr int kStateGrid = 17;
constexpr int kAngleGrid = 9;
constexpr std::size_t kRefineTop = 8;
constexpr int kRandomStarts = 4;
constexpr std::uint64_t kLocalEvals = 3000;

}  // namespace

ViolationSearch maximize_ch(double eta, const EfficiencySearchOptions& options, std::uint64_t budget) {
    using std::numbers::pi;
    if (!(options.noise >= 0.0 && options.noise <= 1.0)) throw InvalidArgument("noise p must lie in [0, 1]");
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("efficiency must lie in [0, 1]");

    std::uint64_t evals = 0;
    const Objective f{eta, options.noise, &evals};

    std::vector<double> chis;
    if (options.fixed_state_angle) {
        chis.push_back(*options.fixed_state_angle);
    } else {
        for (int k = 0; k < kStateGrid; ++k) chis.push_back(k * (pi / 2) / (kStateGrid - 1));
    }
    std::array<double, kAngleGrid> angles{};
    for (int k = 0; k < kAngleGrid; ++k) angles[k] = k * 2.0 * pi / kAngleGrid;

    std::vector<Simplex> top;
    auto offer = [&](const Simplex& s) {
        if (top.size() < kRefineTop) {
            top.push_back(s);
        } else {
            auto worst = std::min_element(top.begin(), top.end(), [](auto& a, auto& b) { return a.value < b.value; });
            if (s.value > worst->value) *worst = s;
        }
    };
    for (double chi : chis)
        for (double a1 : angles)
            for (double a2 : angles)
                for (double b1 : angles)
                    for (double b2 : angles) {
                        const std::array<double, 5> x{chi, a1, a2, b1, b2};
                        offer({x, f(x)});
                    }
    std::sort(top.begin(), top.end(), [](auto& a, auto& b) { return a.value > b.value; });

    std::vector<int> free = {1, 2, 3, 4};
    if (!options.fixed_state_angle) free.insert(free.begin(), 0);

    RandomStream rng = trial_stream(options.seed, StreamTag::Optimizer, std::bit_cast<std::uint64_t>(eta));
    std::vector<std::array<double, 5>> starts;
    for (const auto& s : top) starts.push_back(s.point);
    for (int k = 0; k < kRandomStarts; ++k) {
        std::array<double, 5> x{};
        x[0] = options.fixed_state_angle ? *options.fixed_state_angle : rng.uniform() * pi / 2;
        for (int d = 1; d < 5; ++d) x[d] = rng.uniform() * 2.0 * pi;
        starts.push_back(x);
    }

    Simplex best = top.front();
    for (const auto& x : starts) {
        if (evals + kLocalEvals > budget) break;
        const Simplex s = nelder_mead(f, x, free, 0.3, kLocalEvals);
        if (s.value > best.value) best = s;
    }

    ViolationSearch out{to_config(best.point, options.noise, eta), best.value, evals};
    if (evals > budget) {
        std::ostringstream msg;
        msg << "evaluation budget of " << budget << " exhausted while maximizing S_CH at eta = " << eta;
        throw BudgetExhausted(msg.str(), {eta, out.config, out.s_ch, evals});
    }
    return out;
}

EfficiencySearchResult min_efficiency_search(const EfficiencySearchOptions& options) {
    if (!(options.noise >= 0.0 && options.noise <= 0.05)) throw InvalidArgument("noise p must lie in [0, 0.05]");
    if (!(options.tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");

    std::uint64_t used = 0;
    EfficiencySearchResult result;

    auto search_at = [&](double eta) {
        if (used >= options.budget) {
            std::ostringstream msg;
            msg << "evaluation budget of " << options.budget << " exhausted; eta_min in (" << eta << ", "
                << result.eta_min << "]";
            result.evaluations = used;
            throw BudgetExhausted(msg.str(), result);
        }
        try {
            ViolationSearch v = maximize_ch(eta, options, options.budget - used);
            used += v.evaluations;
            return v;
        } catch (const BudgetExhausted&) {
            result.evaluations = options.budget;
            throw BudgetExhausted("evaluation budget of " + std::to_string(options.budget) +
                                      " exhausted during bisection",
                                  result);
        }
    };

    double lo = 0.5, hi = 1.0;
    const ViolationSearch top = search_at(hi);
    if (top.s_ch <= kViolation) throw InvalidArgument("no CH violation at eta = 1 for this noise level");
    result.eta_min = hi;
    result.argmax = top.config;

    while (hi - lo > options.tolerance) {
        const double mid = 0.5 * (lo + hi);
        const ViolationSearch v = search_at(mid);
        if (v.s_ch > kViolation) {
            hi = mid;
            result.eta_min = hi;
            result.argmax = v.config;
        } else {
            lo = mid;
        }
    }

    EberhardConfig above = result.argmax;
    above.efficiency = std::min(1.0, result.eta_min * (1.0 + 1e-3));
    result.s_ch_above = ch_value(above).s_ch;
    result.evaluations = used;
    return result;
}

}  // namespace trbell
