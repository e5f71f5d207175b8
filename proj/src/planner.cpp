#include "spomdp/planner.hpp"

#include <cmath>
#include <limits>

#include "spomdp/random.hpp"

namespace spomdp {

void PlannerConfig::validate(std::size_t A) const {
    if (n_model_samples < 1 || am_iters < 1 || am_restarts < 1 || grid_resolution < 1)
        throw Error(ErrorKind::ConfigError, "planner counts must be positive");
    if (!(policy_floor > 0.0) || policy_floor * static_cast<double>(A) > 1.0 + 1e-12)
        throw Error(ErrorKind::ConfigError, "policy_floor must lie in (0, 1/A]");
}

Vector poisson_bias(const ChainAnalysis& c, const Vector& reward_pi) {
    const std::size_t X = c.transition.rows();
    // (I - P + 1 omega^T) h = rbar_pi - eta 1 has a unique solution with omega^T h = 0.
    Matrix a(X, X);
    Vector b(X);
    for (std::size_t i = 0; i < X; ++i) {
        for (std::size_t j = 0; j < X; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - c.transition(i, j) + c.stationary[j];
        b[i] = reward_pi[i] - c.eta;
    }
    return solve(a, b);
}

namespace {

struct Evaluated {
    ChainAnalysis chain;
    bool ok = false;
};

Evaluated evaluate(const PomdpModel& m, const MemorylessPolicy& p) {
    Evaluated e;
    try {
        e.chain = induced_chain(m, p);
        e.ok = std::isfinite(e.chain.eta);
    } catch (const Error& err) {
        if (err.kind() != ErrorKind::NotErgodic && err.kind() != ErrorKind::RankDeficient) throw;
    }
    return e;
}

Matrix values_from_chain(const PomdpModel& m, const ChainAnalysis& c) {
    const auto [X, Y, A, R] = m.dims;
    Vector reward_pi(X, 0.0);
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) reward_pi[x] += c.action_given_state(x, a) * m.mean_reward(x, a);
    const Vector h = poisson_bias(c, reward_pi);

    Matrix Q(X, A);
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t a = 0; a < A; ++a) {
            double v = m.mean_reward(x, a);
            for (std::size_t x2 = 0; x2 < X; ++x2) v += m.T(x, x2, a) * h[x2];
            Q(x, a) = v;
        }

    Matrix q(Y, A);
    for (std::size_t y = 0; y < Y; ++y) {
        Vector belief(X);
        double total = 0.0;
        for (std::size_t x = 0; x < X; ++x) total += belief[x] = c.stationary[x] * m.O(y, x);
        for (std::size_t x = 0; x < X; ++x) belief[x] = total > 0.0 ? belief[x] / total : c.stationary[x];
        for (std::size_t a = 0; a < A; ++a) {
            double v = 0.0;
            for (std::size_t x = 0; x < X; ++x) v += belief[x] * Q(x, a);
            q(y, a) = v;
        }
    }
    return q;
}

MemorylessPolicy floored_greedy(const Matrix& q, double floor) {
    const std::size_t Y = q.rows(), A = q.cols();
    Matrix pi(Y, A, floor);
    for (std::size_t y = 0; y < Y; ++y) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < A; ++a)
            if (q(y, a) > q(y, best)) best = a;
        pi(y, best) = 1.0 - static_cast<double>(A - 1) * floor;
    }
    return MemorylessPolicy{std::move(pi), floor};
}

MemorylessPolicy random_floored(Rng& rng, std::size_t Y, std::size_t A, double floor) {
    Matrix pi(Y, A);
    const double free = 1.0 - static_cast<double>(A) * floor;
    for (std::size_t y = 0; y < Y; ++y) {
        const Vector d = rng.dirichlet_flat(A);
        for (std::size_t a = 0; a < A; ++a) pi(y, a) = floor + free * d[a];
    }
    return MemorylessPolicy{std::move(pi), floor};
}

MemorylessPolicy mix(const MemorylessPolicy& from, const MemorylessPolicy& to, double beta) {
    return MemorylessPolicy{(1.0 - beta) * from.pi + beta * to.pi, std::min(from.pi_min, to.pi_min)};
}

}  // namespace

Matrix observation_action_values(const PomdpModel& m, const MemorylessPolicy& p) {
    return values_from_chain(m, induced_chain(m, p));
}

PlanResult plan_memoryless(const PomdpModel& m, const PlannerConfig& cfg, std::uint64_t seed) {
    const auto [X, Y, A, R] = m.dims;
    cfg.validate(A);
    const double floor = A == 1 ? 1.0 : cfg.policy_floor;
    Rng rng(seed);

    PlanResult best{MemorylessPolicy{}, -std::numeric_limits<double>::infinity()};
    for (int restart = 0; restart < cfg.am_restarts; ++restart) {
        MemorylessPolicy cur = restart == 0 ? MemorylessPolicy{Matrix(Y, A, 1.0 / static_cast<double>(A)), floor}
                                            : random_floored(rng, Y, A, floor);
        Evaluated ev = evaluate(m, cur);
        if (!ev.ok) {
            if (restart == 0) throw Error(ErrorKind::NotErgodic, "plan_memoryless: uniform policy chain is not ergodic");
            continue;
        }
        for (int it = 0; it < cfg.am_iters; ++it) {
            const MemorylessPolicy target = floored_greedy(values_from_chain(m, ev.chain), floor);
            // Exact line search on a halving grid of step sizes.
            MemorylessPolicy step_best;
            Evaluated step_eval;
            double step_eta = ev.chain.eta;
            for (double beta = 1.0; beta >= 1.0 / 64.0; beta *= 0.5) {
                MemorylessPolicy cand = mix(cur, target, beta);
                Evaluated ce = evaluate(m, cand);
                if (ce.ok && ce.chain.eta > step_eta + 1e-13) {
                    step_eta = ce.chain.eta;
                    step_best = std::move(cand);
                    step_eval = std::move(ce);
                }
            }
            if (!step_eval.ok) break;
            cur = std::move(step_best);
            ev = std::move(step_eval);
        }
        if (ev.chain.eta > best.eta) best = PlanResult{cur, ev.chain.eta};
    }
    return best;
}

PlanResult plan_grid(const PomdpModel& m, int resolution, double floor) {
    const std::vector<MemorylessPolicy> grid = policy_grid(m.dims.Y, m.dims.A, resolution, floor);
    PlanResult best{MemorylessPolicy{}, -std::numeric_limits<double>::infinity()};
    for (const MemorylessPolicy& p : grid) {
        const Evaluated ev = evaluate(m, p);
        if (ev.ok && ev.chain.eta > best.eta) best = PlanResult{p, ev.chain.eta};
    }
    if (!std::isfinite(best.eta)) throw Error(ErrorKind::NotErgodic, "plan_grid: no grid policy gives an ergodic chain");
    return best;
}

OptimalReward optimal_average_reward(const PomdpModel& m, const PlannerConfig& cfg, std::uint64_t seed) {
    const double floor = m.dims.A == 1 ? 1.0 : cfg.policy_floor;
    const PlanResult grid = plan_grid(m, cfg.grid_resolution, floor);
    PlannerConfig thorough = cfg;
    thorough.am_restarts = std::max(cfg.am_restarts, 16);
    thorough.am_iters = std::max(cfg.am_iters, 200);
    const PlanResult planned = plan_memoryless(m, thorough, seed);
    OptimalReward out;
    out.eta_grid = grid.eta;
    out.eta_planner = planned.eta;
    out.eta_plus = std::max(grid.eta, planned.eta);
    out.policy = planned.eta > grid.eta ? planned.policy : grid.policy;
    return out;
}

}  // namespace spomdp
