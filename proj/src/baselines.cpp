#include "spomdp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spomdp/planner.hpp"
#include "spomdp/random.hpp"

namespace spomdp {

namespace {

ExperimentLog start_log(const char* agent, const PomdpModel& truth, std::size_t horizon, std::uint64_t seed,
                        const BaselineReference& ref) {
    require_valid(truth);
    if (horizon == 0) throw Error(ErrorKind::ConfigError, "horizon must be positive");
    ExperimentLog log;
    log.agent = agent;
    log.seed = seed;
    log.horizon = horizon;
    if (ref.eta_plus) {
        log.eta_plus = *ref.eta_plus;
    } else {
        PlannerConfig pc;
        pc.policy_floor = std::min(ref.policy_floor, 1.0 / static_cast<double>(truth.dims.A));
        pc.grid_resolution = ref.grid_resolution;
        log.eta_plus = optimal_average_reward(truth, pc, derive_seed(seed, 0)).eta_plus;
    }
    log.rewards.reserve(horizon);
    return log;
}

EpisodeRecord single_episode(std::size_t A, std::size_t length, MemorylessPolicy policy) {
    EpisodeRecord rec;
    rec.length = length;
    rec.N.assign(A, 0);
    rec.v.assign(A, 0);
    rec.policy = std::move(policy);
    return rec;
}

std::size_t argmax_random_ties(std::span<const double> v, Rng& rng) {
    const double best = *std::max_element(v.begin(), v.end());
    std::size_t ties = 0;
    for (double x : v) ties += x == best;
    std::size_t pick = rng.index(ties);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == best && pick-- == 0) return i;
    return 0;
}

}  // namespace

ExperimentLog run_random(const PomdpModel& truth, std::size_t horizon, std::uint64_t seed, const BaselineReference& ref) {
    ExperimentLog log = start_log("random", truth, horizon, seed, ref);
    const std::size_t A = truth.dims.A;
    Environment env(truth, derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));
    EpisodeRecord rec = single_episode(A, horizon, MemorylessPolicy::uniform(truth.dims.Y, A));
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t a = rng.index(A);
        log.rewards.push_back(truth.reward_values[env.act(a)]);
        ++rec.v[a];
    }
    rec.eta_true = induced_chain(truth, rec.policy).eta;
    log.episodes.push_back(std::move(rec));
    return log;
}

void QConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::ConfigError, "qlearning: gamma must lie in (0, 1)");
    if (!(alpha_exponent > 0.5 && alpha_exponent <= 1.0))
        throw Error(ErrorKind::ConfigError, "qlearning: alpha exponent must lie in (0.5, 1]");
    if (!(epsilon_min >= 0.0 && epsilon_min <= 1.0)) throw Error(ErrorKind::ConfigError, "qlearning: epsilon_min must lie in [0, 1]");
    if (fixed_alpha && !(*fixed_alpha > 0.0 && *fixed_alpha <= 1.0))
        throw Error(ErrorKind::ConfigError, "qlearning: fixed alpha must lie in (0, 1]");
    if (fixed_epsilon && !(*fixed_epsilon >= 0.0 && *fixed_epsilon <= 1.0))
        throw Error(ErrorKind::ConfigError, "qlearning: fixed epsilon must lie in [0, 1]");
}

ExperimentLog run_qlearning(const PomdpModel& truth, std::size_t horizon, const QConfig& cfg, std::uint64_t seed,
                            const BaselineReference& ref, Matrix* q_out) {
    cfg.validate();
    ExperimentLog log = start_log("qlearning", truth, horizon, seed, ref);
    const auto [X, Y, A, R] = truth.dims;
    Environment env(truth, derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));
    Matrix q(Y, A, 0.0);
    std::vector<std::size_t> visits(Y * A, 0);
    EpisodeRecord rec = single_episode(A, horizon, MemorylessPolicy::uniform(Y, A));

    for (std::size_t t = 1; t <= horizon; ++t) {
        const std::size_t y = env.observation();
        const double eps = cfg.fixed_epsilon ? *cfg.fixed_epsilon
                                             : std::max(cfg.epsilon_min, 1.0 / std::sqrt(static_cast<double>(t)));
        std::size_t a;
        if (rng.uniform() < eps) {
            a = rng.index(A);
        } else {
            const Vector row = q.row(y);
            a = argmax_random_ties(row, rng);
        }
        const double r = truth.reward_values[env.act(a)];
        const std::size_t y2 = env.observation();
        const std::size_t n = ++visits[y * A + a];
        const double alpha = cfg.fixed_alpha ? *cfg.fixed_alpha
                                             : 1.0 / std::ceil(std::pow(static_cast<double>(n), cfg.alpha_exponent));
        double next = q(y2, 0);
        for (std::size_t b = 1; b < A; ++b) next = std::max(next, q(y2, b));
        q(y, a) = (1.0 - alpha) * q(y, a) + alpha * (r + cfg.gamma * next);
        log.rewards.push_back(r);
        ++rec.v[a];
    }

    // Final greedy policy with the terminal exploration rate, for reporting.
    const double eps = cfg.fixed_epsilon ? *cfg.fixed_epsilon
                                         : std::max(cfg.epsilon_min, 1.0 / std::sqrt(static_cast<double>(horizon)));
    Matrix pi(Y, A, eps / static_cast<double>(A));
    for (std::size_t y = 0; y < Y; ++y) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < A; ++b)
            if (q(y, b) > q(y, best)) best = b;
        pi(y, best) += 1.0 - eps;
    }
    rec.policy = MemorylessPolicy{std::move(pi), eps / static_cast<double>(A)};
    try {
        rec.eta_true = induced_chain(truth, rec.policy).eta;
    } catch (const Error&) {
        rec.eta_true = std::nan("");
    }
    log.episodes.push_back(std::move(rec));
    if (q_out) *q_out = std::move(q);
    return log;
}

void UcrlConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::ConfigError, "ucrl: delta must lie in (0, 1)");
    if (max_vi_iters < 1) throw Error(ErrorKind::ConfigError, "ucrl: max_vi_iters must be positive");
}

Vector optimistic_transition(const Vector& p_hat, double radius, const Vector& u) {
    const std::size_t n = p_hat.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return u[i] > u[j]; });
    Vector p = p_hat;
    const std::size_t top = order.front();
    p[top] = std::min(1.0, p_hat[top] + radius / 2.0);
    double excess = std::accumulate(p.begin(), p.end(), 0.0) - 1.0;
    for (std::size_t k = n; k-- > 0 && excess > 0.0;) {
        const std::size_t i = order[k];
        if (i == top) continue;
        const double take = std::min(p[i], excess);
        p[i] -= take;
        excess -= take;
    }
    return p;
}

ExperimentLog run_ucrl_mdp(const PomdpModel& truth, std::size_t horizon, const UcrlConfig& cfg, std::uint64_t seed,
                           const BaselineReference& ref) {
    cfg.validate();
    ExperimentLog log = start_log("ucrl-mdp", truth, horizon, seed, ref);
    const auto [X, Y, A, R] = truth.dims;
    Environment env(truth, derive_seed(seed, 1));
    std::vector<std::size_t> n(Y * A, 0), trans(Y * A * Y, 0);
    std::vector<double> reward_sum(Y * A, 0.0);
    Vector u(Y, 0.0);
    std::vector<std::size_t> policy(Y, 0);

    std::size_t t = 0;
    for (std::size_t k = 0; t < horizon; ++k) {
        const double tk = static_cast<double>(std::max<std::size_t>(t, 1));
        // Optimistic rewards and transition balls from counts before the episode.
        std::vector<double> r_opt(Y * A), radius(Y * A);
        std::vector<Vector> p_hat(Y * A, Vector(Y));
        for (std::size_t i = 0; i < Y * A; ++i) {
            const double ni = static_cast<double>(std::max<std::size_t>(n[i], 1));
            const double r_hat = n[i] > 0 ? reward_sum[i] / static_cast<double>(n[i]) : 0.0;
            const double conf_r = truth.r_max * std::sqrt(7.0 * std::log(2.0 * Y * A * tk / cfg.delta) / (2.0 * ni));
            r_opt[i] = std::min(r_hat + conf_r, truth.r_max);
            radius[i] = std::sqrt(14.0 * Y * std::log(2.0 * A * Y * tk / cfg.delta) / ni);
            for (std::size_t y2 = 0; y2 < Y; ++y2)
                p_hat[i][y2] = n[i] > 0 ? static_cast<double>(trans[i * Y + y2]) / static_cast<double>(n[i])
                                        : 1.0 / static_cast<double>(Y);
        }
        // Extended value iteration to span precision 1/sqrt(t_k).
        std::fill(u.begin(), u.end(), 0.0);
        const double eps = 1.0 / std::sqrt(tk);
        for (int it = 0; it < cfg.max_vi_iters; ++it) {
            Vector next(Y);
            for (std::size_t y = 0; y < Y; ++y) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < A; ++a) {
                    const std::size_t i = y * A + a;
                    const Vector p = optimistic_transition(p_hat[i], radius[i], u);
                    const double v = r_opt[i] + dot(p, u);
                    if (v > best) {
                        best = v;
                        policy[y] = a;
                    }
                }
                next[y] = best;
            }
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t y = 0; y < Y; ++y) {
                lo = std::min(lo, next[y] - u[y]);
                hi = std::max(hi, next[y] - u[y]);
            }
            const double base = *std::min_element(next.begin(), next.end());
            for (std::size_t y = 0; y < Y; ++y) u[y] = next[y] - base;
            if (hi - lo < eps) break;
        }

        EpisodeRecord rec;
        rec.index = k;
        rec.start = t;
        rec.N.assign(A, 0);
        rec.v.assign(A, 0);
        Matrix pi(Y, A, 0.0);
        for (std::size_t y = 0; y < Y; ++y) pi(y, policy[y]) = 1.0;
        rec.policy = MemorylessPolicy{std::move(pi), 0.0};
        try {
            rec.eta_true = induced_chain(truth, rec.policy).eta;
        } catch (const Error&) {
            rec.eta_true = std::nan("");
        }

        std::vector<std::size_t> v_episode(Y * A, 0);
        while (t < horizon) {
            const std::size_t y = env.observation();
            const std::size_t a = policy[y];
            const std::size_t i = y * A + a;
            const double r = truth.reward_values[env.act(a)];
            const std::size_t y2 = env.observation();
            log.rewards.push_back(r);
            ++t;
            ++rec.v[a];
            ++v_episode[i];
            reward_sum[i] += r;
            ++trans[i * Y + y2];
            // Doubling rule: counts are folded in at the end of the episode.
            if (v_episode[i] >= std::max<std::size_t>(n[i], 1)) break;
        }
        for (std::size_t i = 0; i < Y * A; ++i) n[i] += v_episode[i];
        rec.length = t - rec.start;
        rec.stopped_by_rule = t < horizon;
        log.episodes.push_back(std::move(rec));
    }
    return log;
}

}  // namespace spomdp
