#pragma once

// Per-run record shared by every agent: realized rewards, episode structure
// and the reference average reward used for regret.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spomdp/recovery.hpp"

namespace spomdp {

struct EpisodeRecord {
    std::size_t index = 0;
    std::size_t start = 0;   ///< global step of the first action
    std::size_t length = 0;
    std::vector<std::size_t> N;       ///< retained samples per action at the start
    std::vector<std::size_t> v;       ///< actions taken per action during the episode
    std::vector<std::size_t> source;  ///< episode whose samples were used per action
    MemorylessPolicy policy;
    double eta_tilde = 0.0;  ///< optimistic value claimed by the planner
    double eta_true = 0.0;   ///< value of the policy on the true model
    std::vector<ActionBounds> bounds;
    std::optional<EstimationError> error;
    std::string anomaly;     ///< empty unless estimation or planning fell back
    bool stopped_by_rule = false;
};

struct ExperimentLog {
    std::string agent;
    std::uint64_t seed = 0;
    std::size_t horizon = 0;
    double eta_plus = 0.0;
    std::vector<double> rewards;  ///< realized reward value per step
    std::vector<EpisodeRecord> episodes;
    std::vector<std::string> anomalies;

    std::vector<std::size_t> episode_starts() const;
    /// Episode index of every step.
    std::vector<std::uint32_t> episode_of_step() const;
    /// Sum of rewards divided by the number of steps.
    double average_reward() const;
};

/// curve[t] = t eta+ - sum_{s <= t} r_s for t = 0..N (curve[0] = 0).
std::vector<double> regret_curve(const ExperimentLog& log);

/// Running average reward sum_{s <= t} r_s / t at t = 1..N.
std::vector<double> running_average(const std::vector<double>& rewards);

/// Mean reward of consecutive non-overlapping windows; the last window may be short.
std::vector<double> window_average(const std::vector<double>& rewards, std::size_t window);

/// Replays the episode bookkeeping: N^(k+1)(l) = max_{k' <= k} v^(k')(l),
/// the stopping rule for every completed non-burn-in episode, and the episode
/// count bound K <= A log2 N + A. Returns one message per violation.
std::vector<std::string> audit_episodes(const ExperimentLog& log, std::size_t A);

}  // namespace spomdp
