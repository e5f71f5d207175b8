#pragma once

// Experiment configuration and the command implementations behind the CLI.

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spomdp/baselines.hpp"
#include "spomdp/generate.hpp"
#include "spomdp/io.hpp"
#include "spomdp/smucrl.hpp"

namespace spomdp {

inline constexpr int kConfigSchema = 1;

enum class Agent { SmUcrl, Random, QLearning, UcrlMdp };
std::string_view agent_name(Agent a);
Agent parse_agent(std::string_view name);

struct ExperimentConfig {
    int schema = kConfigSchema;
    /// Either a model file or a generator spec.
    std::variant<std::filesystem::path, GeneratorSpec> model;
    std::vector<Agent> agents{Agent::SmUcrl};
    std::size_t horizon = 200'000;
    std::vector<std::uint64_t> seeds{0};
    SmUcrlConfig smucrl;  ///< planner, estimator and bound settings
    QConfig qlearning;
    UcrlConfig ucrl;
    std::size_t checkpoints = 50;
    std::filesystem::path output_dir = "out";

    // estimate command
    std::vector<std::size_t> sample_sizes{1000, 10000, 100000, 1000000};
    std::optional<std::filesystem::path> policy;

    void validate() const;
    /// Resolves the model, generating it when a spec is given.
    PomdpModel load_model() const;
};

/// Relative paths inside the file are resolved against its directory.
ExperimentConfig parse_experiment_config(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
Json experiment_config_to_json(const ExperimentConfig& c);

struct RunOutcome {
    Agent agent = Agent::SmUcrl;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double average_reward = 0.0;
    std::vector<double> checkpoint_average;  ///< running average at each checkpoint
    std::vector<std::string> audit;          ///< episode bookkeeping violations (SM-UCRL only)
};

struct BenchSummary {
    double eta_plus = 0.0;
    std::vector<std::size_t> checkpoints;
    std::vector<RunOutcome> runs;  ///< sorted by (agent, seed)
    bool all_ok() const;
};

/// Runs every (agent, seed) pair; writes runs/<agent>_seed<k>.csv with a
/// sidecar, summary.json, plot_data/<agent>.csv and average_reward.svg under
/// the output directory when `write` is set.
BenchSummary cmd_bench(const ExperimentConfig& cfg, unsigned threads, bool write = true);

/// Evenly spaced checkpoints round(i N / count), i = 1..count, deduplicated.
std::vector<std::size_t> checkpoint_steps(std::size_t horizon, std::size_t count);

struct EstimateRow {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    EstimationError err;
    std::vector<ActionBounds> bounds;
    std::size_t warnings = 0;
};

/// Simulates under the configured (default uniform) policy and estimates for
/// every sample size and seed; writes estimates and error reports.
std::vector<EstimateRow> cmd_estimate(const ExperimentConfig& cfg, unsigned threads, bool write = true);

/// Line chart of several series against a shared x axis.
struct SvgSeries {
    std::string label;
    std::vector<double> y;
    std::vector<double> err;  ///< optional half-width band
};
std::string render_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<double>& x, const std::vector<SvgSeries>& series,
                       std::optional<double> reference = {});

}  // namespace spomdp
