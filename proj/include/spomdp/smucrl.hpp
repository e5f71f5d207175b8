#pragma once

// Episodic optimistic learning with spectral estimates and memoryless policies.
//
// Episode 1 is a uniform-policy burn-in. Every later episode estimates the
// model from the retained samples of each action (the past episode with the
// most plays of that action), samples candidate models inside the confidence
// radii, plans on each, and runs the best policy until some action has been
// played twice as often as its retained count.

#include <cstdint>
#include <optional>

#include "spomdp/experiment.hpp"
#include "spomdp/planner.hpp"
#include "spomdp/recovery.hpp"

namespace spomdp {

struct AdmissibleSet {
    EstimatedPomdp center;
    Vector reward_values;

    /// l1 radius on observation columns; f_O comes from action l*.
    double observation_radius() const { return center.bounds.at(center.l_star).B_O; }
    /// Membership without relabeling states.
    bool contains(const PomdpModel& m, double tol = 1e-9) const;
};

/// Draws `count` models; sample 0 is the center. Each density is moved by a
/// random zero-sum direction scaled uniformly within its radius (l1 for O and
/// rewards, l2 for transition rows), projected onto the simplex and pulled
/// back along the segment to the center if projection left the ball.
std::vector<PomdpModel> sample_admissible(const AdmissibleSet& s, std::size_t count, std::uint64_t seed);

struct OptimisticResult {
    MemorylessPolicy policy;
    PomdpModel model;
    double eta_tilde = 0.0;
    std::size_t model_index = 0;
    std::size_t failed = 0;
};

/// Plans on every sampled model (plus `extra` models, appended after the
/// samples) and keeps the pair with the highest planned value. Failed models
/// are skipped; throws the first failure when all fail.
OptimisticResult optimistic_policy(const AdmissibleSet& s, const PlannerConfig& cfg, std::uint64_t seed,
                                   const std::vector<PomdpModel>& extra = {});

struct SmUcrlConfig {
    PlannerConfig planner;
    EstimatorConfig estimator;
    double delta_prime = 0.1;
    /// Replaces delta'/N^6 when set.
    std::optional<double> delta_override;
    /// 0 selects max(10 Y A R, 2000).
    std::size_t burn_in = 0;
    bool track_errors = true;
    /// Precomputed reference average reward; computed from the true model when absent.
    std::optional<double> eta_plus;

    std::size_t burn_in_for(const Dims& d) const;
};

ExperimentLog run_smucrl(const PomdpModel& truth, std::size_t horizon, const SmUcrlConfig& cfg, std::uint64_t seed);

}  // namespace spomdp
