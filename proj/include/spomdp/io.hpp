#pragma once

// JSON and CSV formats.
//
// Model files:
//   {"X", "Y", "A", "R", "r_max", "reward_values": [R],
//    "O": Y rows of X entries (column x is f_O(. | x)),
//    "T": A matrices of X rows of X entries (T[a][x][x'] = f_T(x' | x, a)),
//    "Gamma": X x A x R nested lists}

#include <filesystem>
#include <string>

#include <json.hpp>

#include "spomdp/experiment.hpp"

namespace spomdp {

using Json = nlohmann::ordered_json;

Json model_to_json(const PomdpModel& m);
/// Parses and validates (stochasticity and shapes); throws ConfigError on
/// malformed input and InvalidModel on violations.
PomdpModel model_from_json(const Json& j);

PomdpModel load_model(const std::filesystem::path& path);
void save_model(const PomdpModel& m, const std::filesystem::path& path);

Json policy_to_json(const MemorylessPolicy& p);
MemorylessPolicy policy_from_json(const Json& j);

/// The estimate in model layout plus a "bounds" block and "permutation_warnings".
Json estimate_to_json(const EstimatedPomdp& e, const Vector& reward_values);
Json estimation_error_to_json(const EstimationError& e);

/// Columns t, reward, episode, cumulative_regret; t counts from 1.
void write_log_csv(const ExperimentLog& log, const std::filesystem::path& path);
/// Per-episode counts, bounds, estimation errors and anomalies.
Json log_sidecar(const ExperimentLog& log);

void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

/// Shortest round-trip decimal form; keeps CSV output byte-stable.
std::string format_double(double x);

}  // namespace spomdp
