#pragma once

// Comparison agents that ignore the hidden state: a uniform random policy,
// epsilon-greedy Q-learning on observations, and UCRL2 on the MDP obtained by
// treating observations as states.

#include <cstdint>
#include <optional>

#include "spomdp/experiment.hpp"

namespace spomdp {

/// Reference eta+ for baseline logs; computed from the model when absent.
struct BaselineReference {
    std::optional<double> eta_plus;
    double policy_floor = 0.05;
    int grid_resolution = 5;
};

ExperimentLog run_random(const PomdpModel& truth, std::size_t horizon, std::uint64_t seed,
                         const BaselineReference& ref = {});

struct QConfig {
    double gamma = 0.95;
    double alpha_exponent = 0.8;  ///< alpha = 1 / ceil(visits^exponent)
    double epsilon_min = 0.05;    ///< epsilon = max(epsilon_min, 1 / sqrt(t))
    std::optional<double> fixed_alpha;
    std::optional<double> fixed_epsilon;

    void validate() const;
};

/// Watkins Q-learning; the final table is written to `q_out` when given.
ExperimentLog run_qlearning(const PomdpModel& truth, std::size_t horizon, const QConfig& cfg, std::uint64_t seed,
                            const BaselineReference& ref = {}, Matrix* q_out = nullptr);

struct UcrlConfig {
    double delta = 0.1;
    int max_vi_iters = 2000;

    void validate() const;
};

ExperimentLog run_ucrl_mdp(const PomdpModel& truth, std::size_t horizon, const UcrlConfig& cfg, std::uint64_t seed,
                           const BaselineReference& ref = {});

/// One step of extended value iteration's inner problem: the distribution in
/// the l1 ball of radius `radius` around `p_hat` maximizing p . u.
Vector optimistic_transition(const Vector& p_hat, double radius, const Vector& u);

}  // namespace spomdp
