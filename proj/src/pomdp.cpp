#include "spomdp/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spomdp/random.hpp"

namespace spomdp {

namespace {

constexpr double kStochTol = 1e-9;
constexpr double kAssumptionFloor = 1e-8;

std::string fmt_index(const char* name, std::size_t a) { return std::string(name) + "=" + std::to_string(a); }

bool strongly_connected(const Matrix& p) {
    const std::size_t n = p.rows();
    if (n == 0) return false;
    auto reach = [&](bool forward) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v) {
                const double w = forward ? p(u, v) : p(v, u);
                if (w > 0.0 && !seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    };
    return reach(true) && reach(false);
}

double stationary_residual(const Matrix& p, std::span<const double> w) {
    double res = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < p.rows(); ++i) s += w[i] * p(i, j);
        res = std::max(res, std::abs(s - w[j]));
    }
    return res;
}

}  // namespace

double PomdpModel::mean_reward(std::size_t x, std::size_t a) const {
    double s = 0.0;
    for (std::size_t r = 0; r < dims.R; ++r) s += reward_values[r] * Gamma(x, a, r);
    return s;
}

MemorylessPolicy MemorylessPolicy::uniform(std::size_t Y, std::size_t A) {
    return MemorylessPolicy{Matrix(Y, A, 1.0 / static_cast<double>(A)), 1.0 / static_cast<double>(A)};
}

MemorylessPolicy MemorylessPolicy::from_matrix(Matrix pi, double pi_min) {
    if (!(pi_min > 0.0)) throw Error(ErrorKind::PolicyFloorViolated, "pi_min must be positive");
    if (!pi.all_finite()) throw Error(ErrorKind::NonFinite, "policy matrix");
    for (std::size_t y = 0; y < pi.rows(); ++y) {
        double s = 0.0;
        for (std::size_t a = 0; a < pi.cols(); ++a) {
            if (pi(y, a) < pi_min - 1e-12) {
                throw Error(ErrorKind::PolicyFloorViolated,
                            "policy entry below pi_min at " + fmt_index("y", y) + ", " + fmt_index("a", a));
            }
            s += pi(y, a);
        }
        if (std::abs(s - 1.0) > kStochTol) {
            throw Error(ErrorKind::InvalidModel, "policy row " + std::to_string(y) + " does not sum to 1");
        }
    }
    return MemorylessPolicy{std::move(pi), pi_min};
}

double MemorylessPolicy::min_prob(std::size_t action) const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < pi.rows(); ++y) m = std::min(m, pi(y, action));
    return m;
}

// ---------------------------------------------------------------------------
// Validation

double observation_conditioning(const PomdpModel& m) {
    const SvdResult d = svd(m.O);
    return d.S.size() < m.dims.X ? 0.0 : d.S[m.dims.X - 1];
}

double transition_conditioning(const PomdpModel& m) {
    const std::size_t X = m.dims.X;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m.dims.A; ++a) {
        Matrix slice(X, X);
        for (std::size_t i = 0; i < X; ++i)
            for (std::size_t j = 0; j < X; ++j) slice(i, j) = m.T(i, j, a);
        worst = std::min(worst, std::abs(determinant(slice)));
    }
    return worst;
}

std::vector<Violation> validate_model(const PomdpModel& m, bool check_assumptions) {
    std::vector<Violation> out;
    const auto [X, Y, A, R] = m.dims;
    auto add = [&](std::string s) { out.push_back(Violation{std::move(s)}); };

    if (X == 0 || Y == 0 || A == 0 || R == 0) {
        add("all dimensions must be positive");
        return out;
    }
    if (m.T.dims() != std::array<std::size_t, 3>{X, X, A}) add("T must be X x X x A");
    if (m.O.rows() != Y || m.O.cols() != X) add("O must be Y x X");
    if (m.Gamma.dims() != std::array<std::size_t, 3>{X, A, R}) add("Gamma must be X x A x R");
    if (m.reward_values.size() != R) add("reward_values must have R entries");
    if (!out.empty()) return out;

    if (!m.T.all_finite() || !m.O.all_finite() || !m.Gamma.all_finite()) add("non-finite entries");

    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) {
            double s = 0.0;
            bool neg = false;
            for (std::size_t x2 = 0; x2 < X; ++x2) {
                s += m.T(x, x2, a);
                neg |= m.T(x, x2, a) < 0.0;
            }
            if (neg || std::abs(s - 1.0) > kStochTol)
                add("T(" + fmt_index("x", x) + ", :, " + fmt_index("a", a) + ") is not a distribution");
        }
    for (std::size_t x = 0; x < X; ++x) {
        double s = 0.0;
        bool neg = false;
        for (std::size_t y = 0; y < Y; ++y) {
            s += m.O(y, x);
            neg |= m.O(y, x) < 0.0;
        }
        if (neg || std::abs(s - 1.0) > kStochTol) add("O(:, " + fmt_index("x", x) + ") is not a distribution");
    }
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) {
            double s = 0.0;
            bool neg = false;
            for (std::size_t r = 0; r < R; ++r) {
                s += m.Gamma(x, a, r);
                neg |= m.Gamma(x, a, r) < 0.0;
            }
            if (neg || std::abs(s - 1.0) > kStochTol)
                add("Gamma(" + fmt_index("x", x) + ", " + fmt_index("a", a) + ", :) is not a distribution");
        }
    for (std::size_t r = 0; r < R; ++r) {
        if (!std::isfinite(m.reward_values[r]) || m.reward_values[r] < 0.0) add("reward values must be finite and >= 0");
        if (r > 0 && !(m.reward_values[r] > m.reward_values[r - 1])) add("reward values must be strictly increasing");
    }
    if (std::abs(m.reward_values.back() - m.r_max) > 1e-12) add("largest reward value must equal r_max");

    if (check_assumptions && out.empty()) {
        const double sigma = observation_conditioning(m);
        if (sigma < kAssumptionFloor) {
            std::ostringstream os;
            os << "observation matrix is not full column rank (sigma_X(O) = " << sigma << ")";
            add(os.str());
        }
        const double det = transition_conditioning(m);
        if (det < kAssumptionFloor) {
            std::ostringstream os;
            os << "a transition matrix T(:, :, a) is singular (min |det| = " << det << ")";
            add(os.str());
        }
    }
    return out;
}

void require_valid(const PomdpModel& m, bool check_assumptions) {
    const auto v = validate_model(m, check_assumptions);
    if (v.empty()) return;
    std::string msg = "model rejected:";
    for (const auto& x : v) msg += " [" + x.what + "]";
    throw Error(ErrorKind::InvalidModel, msg);
}

void require_compatible(const PomdpModel& m, const MemorylessPolicy& p) {
    if (p.observations() != m.dims.Y || p.actions() != m.dims.A)
        throw Error(ErrorKind::DimensionMismatch, "policy must be Y x A");
}

// ---------------------------------------------------------------------------
// Induced chain

Vector stationary_distribution(const Matrix& transition, double tol, std::size_t max_iters) {
    const std::size_t n = transition.rows();
    if (n == 0 || transition.cols() != n) throw Error(ErrorKind::DimensionMismatch, "stationary_distribution");
    if (!strongly_connected(transition)) throw Error(ErrorKind::NotErgodic, "induced chain is reducible");
    if (n == 1) return Vector{1.0};

    // The lazy chain (P + I) / 2 has the same stationary law and is aperiodic.
    Vector w(n, 1.0 / static_cast<double>(n)), next(n);
    constexpr std::size_t kPowerBudget = 10'000;
    std::size_t it = 0;
    auto power_steps = [&](std::size_t budget) {
        for (std::size_t k = 0; k < budget && it < max_iters; ++k, ++it) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += w[i] * transition(i, j);
                next[j] = 0.5 * (s + w[j]);
            }
            w.swap(next);
            if (it % 8 == 7 && stationary_residual(transition, w) <= 0.25 * tol) return true;
        }
        return stationary_residual(transition, w) <= tol;
    };
    if (power_steps(kPowerBudget)) return w;

    // Slow mixing: solve w (I - P) = 0 with sum(w) = 1 replacing one equation.
    Matrix a(n, n);
    Vector b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(j, i) = (i == j ? 1.0 : 0.0) - transition(i, j);
    for (std::size_t i = 0; i < n; ++i) a(n - 1, i) = 1.0;
    b[n - 1] = 1.0;
    try {
        Vector s = solve(a, b);
        if (std::all_of(s.begin(), s.end(), [](double x) { return x > -1e-12; })) {
            for (double& x : s) x = std::max(x, 0.0);
            double tot = 0.0;
            for (double x : s) tot += x;
            for (double& x : s) x /= tot;
            if (stationary_residual(transition, s) <= tol) return s;
        }
    } catch (const Error&) {
    }
    if (power_steps(max_iters)) return w;
    throw Error(ErrorKind::NotErgodic, "stationary distribution did not converge");
}

ChainAnalysis induced_chain(const PomdpModel& m, const MemorylessPolicy& p) {
    require_compatible(m, p);
    const auto [X, Y, A, R] = m.dims;
    ChainAnalysis c;
    c.action_given_state = Matrix(X, A);
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) {
            double s = 0.0;
            for (std::size_t y = 0; y < Y; ++y) s += m.O(y, x) * p.pi(y, a);
            c.action_given_state(x, a) = s;
        }
    c.transition = Matrix(X, X);
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) {
            const double pa = c.action_given_state(x, a);
            for (std::size_t x2 = 0; x2 < X; ++x2) c.transition(x, x2) += pa * m.T(x, x2, a);
        }
    c.stationary = stationary_distribution(c.transition);

    c.action_marginal.assign(A, 0.0);
    c.stationary_by_action = Matrix(A, X);
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t x = 0; x < X; ++x) {
            const double joint = c.stationary[x] * c.action_given_state(x, a);
            c.stationary_by_action(a, x) = joint;
            c.action_marginal[a] += joint;
        }
        for (std::size_t x = 0; x < X; ++x) {
            c.stationary_by_action(a, x) =
                c.action_marginal[a] > 0.0 ? c.stationary_by_action(a, x) / c.action_marginal[a] : 0.0;
        }
    }
    c.eta = 0.0;
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) c.eta += c.stationary[x] * c.action_given_state(x, a) * m.mean_reward(x, a);
    return c;
}

// ---------------------------------------------------------------------------
// Simulation

Environment::Environment(const PomdpModel& m, std::uint64_t seed) : m_(&m), rng_(seed) {
    const auto [X, Y, A, R] = m.dims;
    if (X == 0 || A == 0) throw Error(ErrorKind::DimensionMismatch, "Environment: empty model");
    obs_.resize(X);
    rew_.resize(X * A);
    next_.resize(X * A);
    for (std::size_t x = 0; x < X; ++x) obs_[x] = m.O.column(x);
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) {
            rew_[x * A + a].resize(R);
            next_[x * A + a].resize(X);
            for (std::size_t r = 0; r < R; ++r) rew_[x * A + a][r] = m.Gamma(x, a, r);
            for (std::size_t x2 = 0; x2 < X; ++x2) next_[x * A + a][x2] = m.T(x, x2, a);
        }
    x_ = static_cast<std::uint32_t>(rng_.index(X));
    y_ = static_cast<std::uint32_t>(rng_.categorical(obs_[x_]));
}

std::uint32_t Environment::act(std::size_t a) {
    const std::size_t A = m_->dims.A;
    if (a >= A) throw Error(ErrorKind::DimensionMismatch, "Environment::act: action out of range");
    const std::size_t k = x_ * A + a;
    const auto r = static_cast<std::uint32_t>(rng_.categorical(rew_[k]));
    x_ = static_cast<std::uint32_t>(rng_.categorical(next_[k]));
    y_ = static_cast<std::uint32_t>(rng_.categorical(obs_[x_]));
    return r;
}

Trajectory simulate(const PomdpModel& m, const MemorylessPolicy& p, std::size_t n, std::uint64_t seed) {
    require_compatible(m, p);
    const auto [X, Y, A, R] = m.dims;
    Rng rng(seed);
    Trajectory tr;
    tr.seed = seed;
    tr.steps.reserve(n);
    tr.states.reserve(n);

    // Column/row views flattened once so the hot loop does no allocation.
    std::vector<Vector> obs(X), act(Y), rew(X * A), next(X * A);
    for (std::size_t x = 0; x < X; ++x) obs[x] = m.O.column(x);
    for (std::size_t y = 0; y < Y; ++y) act[y] = p.pi.row(y);
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) {
            rew[x * A + a].resize(R);
            next[x * A + a].resize(X);
            for (std::size_t r = 0; r < R; ++r) rew[x * A + a][r] = m.Gamma(x, a, r);
            for (std::size_t x2 = 0; x2 < X; ++x2) next[x * A + a][x2] = m.T(x, x2, a);
        }

    std::size_t x = rng.index(X);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t y = rng.categorical(obs[x]);
        const std::size_t a = rng.categorical(act[y]);
        const std::size_t r = rng.categorical(rew[x * A + a]);
        tr.states.push_back(static_cast<std::uint32_t>(x));
        tr.steps.push_back(Step{static_cast<std::uint32_t>(y), static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(r)});
        x = rng.categorical(next[x * A + a]);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Exact views and moments

ExactViews exact_views(const PomdpModel& m, const MemorylessPolicy& p, std::size_t l, bool augmented) {
    const auto [X, Y, A, R] = m.dims;
    if (l >= A) throw Error(ErrorKind::DimensionMismatch, "exact_views: action out of range");
    const ChainAnalysis c = induced_chain(m, p);
    const Vector& w = c.stationary;

    ExactViews v;
    v.omega = c.stationary_by_action.row(l);

    // V1: P(y1, r1, a1 | x2 = i), reversing one step of the stationary chain.
    v.V1 = Matrix(A * Y * R, X);
    for (std::size_t i = 0; i < X; ++i)
        for (std::size_t k = 0; k < A; ++k)
            for (std::size_t n = 0; n < Y; ++n)
                for (std::size_t r = 0; r < R; ++r) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < X; ++j) s += w[j] * m.O(n, j) * m.Gamma(j, k, r) * m.T(j, i, k);
                    v.V1(view1_index(m.dims, k, n, r), i) = s * p.pi(n, k) / w[i];
                }

    // V2: P(y2, r2 | x2 = i, a2 = l).
    v.V2 = Matrix(Y * R, X);
    for (std::size_t i = 0; i < X; ++i) {
        const double pl = c.action_given_state(i, l);
        for (std::size_t n = 0; n < Y; ++n)
            for (std::size_t r = 0; r < R; ++r)
                v.V2(view2_index(m.dims, n, r), i) = m.O(n, i) * p.pi(n, l) * m.Gamma(i, l, r) / pl;
    }

    if (!augmented) {
        // V3: P(y3 | x2 = i, a2 = l) = sum_j O(y3, j) T(i, j, l).
        v.V3 = Matrix(Y, X);
        for (std::size_t i = 0; i < X; ++i)
            for (std::size_t n = 0; n < Y; ++n) {
                double s = 0.0;
                for (std::size_t j = 0; j < X; ++j) s += m.O(n, j) * m.T(i, j, l);
                v.V3(n, i) = s;
            }
    } else {
        v.V3 = Matrix(A * Y * R, X);
        for (std::size_t i = 0; i < X; ++i)
            for (std::size_t k = 0; k < A; ++k)
                for (std::size_t n = 0; n < Y; ++n)
                    for (std::size_t r = 0; r < R; ++r) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < X; ++j) s += m.Gamma(j, k, r) * m.O(n, j) * m.T(i, j, l);
                        v.V3(view1_index(m.dims, k, n, r), i) = p.pi(n, k) * s;
                    }
    }
    return v;
}

namespace {

Matrix weighted_cross(const Matrix& a, const Vector& w, const Matrix& b) {
    Matrix out(a.rows(), b.rows());
    for (std::size_t s = 0; s < a.rows(); ++s)
        for (std::size_t t = 0; t < b.rows(); ++t) {
            double acc = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) acc += a(s, i) * w[i] * b(t, i);
            out(s, t) = acc;
        }
    return out;
}

Tensor3 weighted_triple(const Matrix& a, const Vector& w, const Matrix& b, const Matrix& c) {
    Tensor3 out(a.rows(), b.rows(), c.rows());
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t s = 0; s < a.rows(); ++s) {
            const double as = w[i] * a(s, i);
            if (as == 0.0) continue;
            for (std::size_t t = 0; t < b.rows(); ++t) {
                const double ast = as * b(t, i);
                if (ast == 0.0) continue;
                for (std::size_t u = 0; u < c.rows(); ++u) out(s, t, u) += ast * c(u, i);
            }
        }
    return out;
}

}  // namespace

ExactMoments exact_moments(const PomdpModel& m, const MemorylessPolicy& p, std::size_t l, bool augmented) {
    const ExactViews v = exact_views(m, p, l, augmented);
    ExactMoments out;
    out.K12 = weighted_cross(v.V1, v.omega, v.V2);
    out.K13 = weighted_cross(v.V1, v.omega, v.V3);
    out.K23 = weighted_cross(v.V2, v.omega, v.V3);
    out.M2 = weighted_cross(v.V3, v.omega, v.V3);
    out.M3 = weighted_triple(v.V3, v.omega, v.V3, v.V3);
    out.P123 = weighted_triple(v.V1, v.omega, v.V2, v.V3);
    return out;
}

// ---------------------------------------------------------------------------
// Policy grids and diameter

std::vector<MemorylessPolicy> policy_grid(std::size_t Y, std::size_t A, int resolution, double pi_min) {
    if (resolution < 2) throw Error(ErrorKind::GridTooCoarse, "policy grid needs at least 2 points per simplex edge");
    if (pi_min < 0.0 || pi_min * static_cast<double>(A) > 1.0 + 1e-12)
        throw Error(ErrorKind::ConfigError, "policy floor must lie in [0, 1/A]");
    const int steps = resolution - 1;

    // Every composition of `steps` into A nonnegative parts is one simplex row.
    std::vector<Vector> rows;
    std::vector<int> parts(A, 0);
    auto emit = [&](auto&& self, std::size_t pos, int left) -> void {
        if (pos + 1 == A) {
            parts[pos] = left;
            Vector row(A);
            for (std::size_t a = 0; a < A; ++a)
                row[a] = pi_min + (1.0 - static_cast<double>(A) * pi_min) * parts[a] / static_cast<double>(steps);
            rows.push_back(std::move(row));
            return;
        }
        for (int k = left; k >= 0; --k) {
            parts[pos] = k;
            self(self, pos + 1, left - k);
        }
    };
    emit(emit, 0, steps);

    double total = 1.0;
    for (std::size_t y = 0; y < Y; ++y) total *= static_cast<double>(rows.size());
    if (total > 2e6) throw Error(ErrorKind::ConfigError, "policy grid too large; lower the resolution");

    std::vector<MemorylessPolicy> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<std::size_t> idx(Y, 0);
    while (true) {
        MemorylessPolicy p{Matrix(Y, A), pi_min};
        for (std::size_t y = 0; y < Y; ++y)
            for (std::size_t a = 0; a < A; ++a) p.pi(y, a) = rows[idx[y]][a];
        out.push_back(std::move(p));
        std::size_t y = 0;
        while (y < Y && ++idx[y] == rows.size()) idx[y++] = 0;
        if (y == Y) break;
    }
    return out;
}

double diameter(const PomdpModel& m, int resolution, double pi_min) {
    const auto [X, Y, A, R] = m.dims;
    if (X * A > 8) throw Error(ErrorKind::ConfigError, "diameter is a brute-force diagnostic for X*A <= 8");
    const auto grid = policy_grid(Y, A, resolution, pi_min);
    const std::size_t S = X * A;
    const double inf = std::numeric_limits<double>::infinity();
    Matrix best(S, S, inf);

    for (const auto& p : grid) {
        Matrix act(X, A);
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t y = 0; y < Y; ++y) act(x, a) += m.O(y, x) * p.pi(y, a);
        Matrix P(S, S);
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t x2 = 0; x2 < X; ++x2)
                    for (std::size_t a2 = 0; a2 < A; ++a2) P(x * A + a, x2 * A + a2) = m.T(x, x2, a) * act(x2, a2);

        for (std::size_t target = 0; target < S; ++target) {
            best(target, target) = 1.0;
            if (S == 1) continue;
            // h(s) = 1 + sum_{s' != target} P(s, s') h(s') over non-target s.
            std::vector<std::size_t> others;
            for (std::size_t s = 0; s < S; ++s)
                if (s != target) others.push_back(s);
            Matrix sys(others.size(), others.size());
            for (std::size_t i = 0; i < others.size(); ++i)
                for (std::size_t j = 0; j < others.size(); ++j)
                    sys(i, j) = (i == j ? 1.0 : 0.0) - P(others[i], others[j]);
            Vector h;
            try {
                h = solve(sys, Vector(others.size(), 1.0), 1e-12);
            } catch (const Error&) {
                continue;  // target unreachable from some state under this policy
            }
            for (std::size_t i = 0; i < others.size(); ++i) {
                if (!std::isfinite(h[i]) || h[i] < 0.0) continue;
                best(others[i], target) = std::min(best(others[i], target), 1.0 + h[i]);
            }
        }
    }
    double d = 0.0;
    for (double v : best.data()) d = std::max(d, v);
    return d;
}

}  // namespace spomdp
