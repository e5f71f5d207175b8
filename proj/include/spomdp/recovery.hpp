#pragma once

// From per-action view estimates to POMDP parameters with confidence radii.

#include <optional>
#include <string>
#include <vector>

#include "spomdp/spectral.hpp"

namespace spomdp {

struct ActionBounds {
    double B_O = 0.0;  ///< l1 radius on f_O(.|x)
    double B_R = 0.0;  ///< l1 radius on f_R(.|x, a)
    double B_T = 0.0;  ///< l2 radius on f_T(.|x, a)
};

/// Constants feeding the confidence radii. lambda is either one value per
/// action (hand tuned) or estimated from the decomposition when
/// `estimate_lambda` is set. The diagnostics are echoed in reports only.
struct BoundConfig {
    double C_O = 1.0;
    double C_R = 1.0;
    double C_T = 1.0;
    std::vector<double> lambda{1.0};  ///< one entry broadcasts to all actions
    bool estimate_lambda = false;
    double delta = 0.1;

    struct Diagnostics {
        double G = 0.0;
        double theta = 0.0;
        std::vector<double> Theta;
        double N_bar = 0.0;
    };
    std::optional<Diagnostics> diagnostics;

    double lambda_for(std::size_t action) const;
    void validate(std::size_t A) const;
};

struct EstimatedPomdp {
    Dims dims;
    Matrix f_O;      ///< Y x X
    Tensor3 f_R;     ///< X x A x R
    Tensor3 f_T;     ///< X x X x A
    std::vector<ActionBounds> bounds;
    std::size_t l_star = 0;
    std::vector<std::size_t> n_per_action;
    std::vector<double> lambda_used;
    double d_O_hat = 0.0;
    std::vector<std::string> permutation_warnings;

    /// The estimate as a plannable model with the given reward values.
    PomdpModel to_model(const Vector& reward_values) const;
};

/// f_R(m | i, l) = sum_n V2[(n, m), i].
Vector recover_reward(std::span<const double> v2_col, const Dims& d);

struct RhoObservation {
    double rho = 0.0;  ///< 1 / P(a = l | x = i)
    Vector f_O;
};

/// rho = sum_{n,m} V2[(n,m)] / pi(l|n);  f_O(n) = sum_m V2[(n,m)] / (pi(l|n) rho).
/// Throws PolicyFloorViolated if any pi(l|n) <= 0.
RhoObservation recover_rho_and_observation(std::span<const double> v2_col, std::span<const double> pi_col, const Dims& d);

struct Alignment {
    std::size_t l_star = 0;
    /// perms[l][j] = column of O^(l) matched to column j of O^(l*).
    std::vector<std::vector<std::size_t>> perms;
    double d_O_hat = 0.0;
    bool warning = false;
};

/// Greedy l1 matching of every per-action observation estimate to the one
/// with the smallest bound.
Alignment align_permutations(const std::vector<Matrix>& O_by_action, std::span<const double> bounds_O);

/// Applies a column gather: out[:, j] = m[:, perm[j]].
Matrix permute_columns(const Matrix& m, std::span<const std::size_t> perm);

/// Row i of the result is f_T(. | i, l) = proj(O^+ V3[:, i]); `project` off
/// returns the raw least-squares rows. Throws RankDeficient if sigma_X(O) <= tol.
Matrix recover_transition(const Matrix& V3_aligned, const Matrix& O_hat, double tol = 1e-8, bool project = true);

/// Augmented third view: W[(k,n,m), j] = pi(k|n) f_R(m|j,k) f_O(n|j), T row i = proj(W^+ V3[:, i]).
Matrix recover_transition_augmented(const Matrix& V3_aug, const Matrix& f_O, const Tensor3& f_R,
                                    const MemorylessPolicy& pi, double tol = 1e-8);
Matrix augmented_design_matrix(const Matrix& f_O, const Tensor3& f_R, const MemorylessPolicy& pi);

/// Plug-in lambda from estimated quantities (smallest singular values of the
/// estimated O, K13 and views, floor of the policy, smallest omega).
double estimate_lambda(const Matrix& O_hat, double pi_min_action, const Matrix& K13, const SpectralResult& s);

/// Per-action radii, each clipped to [0, 2].
std::vector<ActionBounds> confidence_bounds(std::span<const std::size_t> n_per_action, const BoundConfig& cfg,
                                            const Dims& d, std::span<const double> lambdas = {});

struct EstimatorConfig {
    SpectralConfig spectral;
    BoundConfig bounds;
    std::size_t min_samples = 100;
    bool augmented = false;
};

/// Samples for one action: the trajectory they came from and the policy that
/// generated it.
struct ActionSource {
    const Trajectory* trajectory = nullptr;
    const MemorylessPolicy* policy = nullptr;
};

/// Error that remembers which action failed.
class ActionError : public Error {
public:
    ActionError(const Error& e, std::size_t action)
        : Error(e.kind(), "action " + std::to_string(action) + ": " + e.what()), action_(action) {}
    std::size_t action() const noexcept { return action_; }

private:
    std::size_t action_;
};

/// Full estimation from one trajectory under one policy.
EstimatedPomdp estimate_all(const Trajectory& tr, const MemorylessPolicy& p, const Dims& d, const EstimatorConfig& cfg);

/// Estimation where each action may use samples from a different episode.
EstimatedPomdp estimate_from_sources(std::span<const ActionSource> sources, const Dims& d, const EstimatorConfig& cfg);

/// Runs the same pipeline on population moments (no sampling), for oracle
/// tests. n_per_action for the bounds is taken from `nominal_n`.
EstimatedPomdp estimate_from_exact(const PomdpModel& m, const MemorylessPolicy& p, const EstimatorConfig& cfg,
                                   std::size_t nominal_n = 1'000'000);

struct EstimationError {
    double O_l1 = 0.0;  ///< max over states of column l1 error
    double R_l1 = 0.0;  ///< max over (state, action)
    double T_l2 = 0.0;  ///< max over (state, action)
    double O_max = 0.0, R_max = 0.0, T_max = 0.0;  ///< max entrywise errors
    std::vector<std::size_t> permutation;  ///< estimated state -> true state
};

/// Errors after the state relabeling that best matches the observation
/// matrix (brute force over X!).
EstimationError estimation_error(const EstimatedPomdp& est, const PomdpModel& truth);

}  // namespace spomdp
