#pragma once

// Tabular POMDPs under memoryless policies: representation, validation,
// simulation, and closed-form quantities of the induced Markov chain.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spomdp/numerics.hpp"
#include "spomdp/random.hpp"

namespace spomdp {

struct Dims {
    std::size_t X = 0;  ///< hidden states
    std::size_t Y = 0;  ///< observations
    std::size_t A = 0;  ///< actions
    std::size_t R = 0;  ///< reward levels

    friend bool operator==(const Dims&, const Dims&) = default;
};

struct PomdpModel {
    Dims dims;
    Tensor3 T;      ///< X x X x A, T(x, x', a) = f_T(x' | x, a)
    Matrix O;       ///< Y x X, O(y, x) = f_O(y | x)
    Tensor3 Gamma;  ///< X x A x R, Gamma(x, a, r) = f_R(r | x, a)
    Vector reward_values;  ///< R increasing values, last equals r_max
    double r_max = 0.0;

    /// Expected reward r(x, a).
    double mean_reward(std::size_t x, std::size_t a) const;
};

struct MemorylessPolicy {
    Matrix pi;  ///< Y x A, pi(y, a) = f_pi(a | y)
    double pi_min = 0.0;

    static MemorylessPolicy uniform(std::size_t Y, std::size_t A);
    /// Validates rows (sum to one, every entry >= pi_min > 0).
    static MemorylessPolicy from_matrix(Matrix pi, double pi_min);

    std::size_t observations() const { return pi.rows(); }
    std::size_t actions() const { return pi.cols(); }
    /// Smallest entry of the action-l column.
    double min_prob(std::size_t action) const;
};

struct Step {
    std::uint32_t y = 0;
    std::uint32_t a = 0;
    std::uint32_t r = 0;  ///< reward index into reward_values

    friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
    std::vector<Step> steps;
    /// Hidden states visited; kept for diagnostics and Monte-Carlo tests.
    std::vector<std::uint32_t> states;
    std::uint64_t seed = 0;

    std::size_t size() const { return steps.size(); }
};

struct ChainAnalysis {
    Matrix transition;           ///< X x X, f_{T,pi}(x' | x)
    Vector stationary;           ///< omega_pi
    Matrix action_given_state;   ///< X x A, P(a | x) under the policy
    Matrix stationary_by_action; ///< A x X, row l = P(x | a = l) at stationarity
    Vector action_marginal;      ///< A, P(a = l) at stationarity
    double eta = 0.0;            ///< average reward
};

struct Violation {
    std::string what;
};

/// Stochasticity checks, plus (when `check_assumptions`) full column rank of O
/// and invertibility of every T(:, :, a). Never throws on bad data.
std::vector<Violation> validate_model(const PomdpModel& m, bool check_assumptions = false);
/// Throws InvalidModel listing every violation.
void require_valid(const PomdpModel& m, bool check_assumptions = false);
void require_compatible(const PomdpModel& m, const MemorylessPolicy& p);

/// Smallest singular value sigma_X(O).
double observation_conditioning(const PomdpModel& m);
/// min_a |det T(:, :, a)|.
double transition_conditioning(const PomdpModel& m);

/// Stationary distribution of a row-stochastic matrix. Power iteration on the
/// lazy chain, with a linear-solve fallback. Throws NotErgodic.
Vector stationary_distribution(const Matrix& transition, double tol = 1e-10, std::size_t max_iters = 1'000'000);

ChainAnalysis induced_chain(const PomdpModel& m, const MemorylessPolicy& p);

/// Step-by-step simulator for agents that pick actions online. The initial
/// state is uniform over X; each step emits y ~ O(.|x), then the agent acts,
/// then r ~ Gamma(x, a) and x' ~ T(x, ., a).
class Environment {
public:
    Environment(const PomdpModel& m, std::uint64_t seed);

    /// Observation of the current state (drawn once per step).
    std::uint32_t observation() const noexcept { return y_; }
    std::uint32_t hidden_state() const noexcept { return x_; }
    /// Applies action a; returns the reward index and advances the state.
    std::uint32_t act(std::size_t a);
    const PomdpModel& model() const noexcept { return *m_; }

private:
    const PomdpModel* m_;
    Rng rng_;
    std::vector<Vector> obs_, rew_, next_;
    std::uint32_t x_ = 0;
    std::uint32_t y_ = 0;
};

/// Samples n steps; the initial state is uniform over X.
Trajectory simulate(const PomdpModel& m, const MemorylessPolicy& p, std::size_t n, std::uint64_t seed);

// View index flattening shared by the estimator and the exact oracles.
inline std::size_t view1_index(const Dims& d, std::size_t a, std::size_t y, std::size_t r) {
    return a * (d.Y * d.R) + y * d.R + r;
}
inline std::size_t view2_index(const Dims& d, std::size_t y, std::size_t r) { return y * d.R + r; }

struct ExactViews {
    Matrix V1;  ///< (A*Y*R) x X
    Matrix V2;  ///< (Y*R) x X
    Matrix V3;  ///< Y x X, or (A*Y*R) x X when augmented
    Vector omega;  ///< P(x_t = i | a_t = l)
};

/// Closed-form view matrices for action l at stationarity. With `augmented`
/// the third view is the (a, y, r) triple of the next step, flattened like V1.
ExactViews exact_views(const PomdpModel& m, const MemorylessPolicy& p, std::size_t action, bool augmented = false);

struct ExactMoments {
    Matrix K12, K13, K23;
    Matrix M2;
    Tensor3 M3;
    /// E[v1 (x) v2 (x) v3], the population counterpart of the view histogram.
    Tensor3 P123;
};

ExactMoments exact_moments(const PomdpModel& m, const MemorylessPolicy& p, std::size_t action, bool augmented = false);

/// All policies whose rows lie on a regular simplex grid with `resolution`
/// points per edge, each row mapped to pi_min + (1 - A pi_min) * p.
/// Throws GridTooCoarse when resolution < 2.
std::vector<MemorylessPolicy> policy_grid(std::size_t Y, std::size_t A, int resolution, double pi_min);

/// Worst-case (over state-action pairs) best-policy expected passage time on
/// the state-action chain, minimized over a policy grid. A pair counts its
/// own step, so tau = 1 for identical pairs and 1 + hitting time otherwise.
double diameter(const PomdpModel& m, int resolution, double pi_min = 0.0);

}  // namespace spomdp
