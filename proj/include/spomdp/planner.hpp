#pragma once

// Approximate planning over stochastic memoryless policies.
//
// Exact optimization is NP-hard, so the planner alternates between the
// stationary quantities of the current policy and a conditional-gradient move
// of the policy towards the greedy floored action per observation. The
// per-observation action values
//   q(y, a) = sum_x P(x | y) (rbar(x, a) + sum_x' T(x, x', a) h(x'))
// use the Bayes belief P(x | y) ~ omega(x) O(y, x) and the Poisson bias h of
// the induced chain; up to a positive factor per y they are the exact gradient
// of the average reward in pi(a | y).

#include <cstdint>

#include "spomdp/pomdp.hpp"

namespace spomdp {

struct PlannerConfig {
    std::size_t n_model_samples = 16;
    int am_iters = 40;
    int am_restarts = 4;
    double policy_floor = 0.05;
    int grid_resolution = 5;
    unsigned threads = 1;

    void validate(std::size_t A) const;
};

struct PlanResult {
    MemorylessPolicy policy;
    double eta = 0.0;
};

/// Bias h with omega^T h = 0 solving h = rbar_pi - eta + P h.
Vector poisson_bias(const ChainAnalysis& c, const Vector& reward_pi);

/// q(y, a) as above for the given policy; Y x A.
Matrix observation_action_values(const PomdpModel& m, const MemorylessPolicy& p);

/// Best visited policy by exact eta. The first restart starts at the uniform
/// policy, the others at random floored policies. Throws NotErgodic when the
/// uniform policy's chain is not ergodic.
PlanResult plan_memoryless(const PomdpModel& m, const PlannerConfig& cfg, std::uint64_t seed);

/// Exhaustive search over policy_grid(Y, A, resolution, floor).
PlanResult plan_grid(const PomdpModel& m, int resolution, double floor);

struct OptimalReward {
    double eta_plus = 0.0;
    double eta_grid = 0.0;
    double eta_planner = 0.0;
    MemorylessPolicy policy;
};

/// eta+ for regret accounting: the better of the grid search and the planner
/// on the true model, so the reference never undercuts a policy the agent can
/// actually find.
OptimalReward optimal_average_reward(const PomdpModel& m, const PlannerConfig& cfg, std::uint64_t seed);

}  // namespace spomdp
